//! Bidirectional RRT-Connect over the stacked joint vector of a robot team.
//! The direct start-to-goal motion is tried before any tree grows.

use alloc::vec;
use alloc::vec::Vec;

use super::{scaled_distance_sq, team_segment, windows, Ctx, PlanOutcome, PlannerConfig, PlanningProblem};
use crate::model::{Configuration, Path};
use crate::planners::Clock;

/// Other robots' motions, imported as obstacles whose timestep 0 is `t0`.
pub(crate) struct TimedObstacles<'p> {
    pub paths: &'p [Path],
    pub t0: usize,
}

struct Node {
    q: Vec<Configuration>,
    parent: Option<usize>,
    /// Timesteps from the root.
    t: usize,
    /// Validated waypoints from the parent to this node, one path per member.
    edge: Vec<Path>,
}

struct Tree {
    nodes: Vec<Node>,
    /// The start tree's times are absolute; the goal tree's are not.
    timed: bool,
}

enum Extend {
    Reached(usize),
    Advanced(usize),
    Trapped,
}

struct Search<'s, 'c> {
    ctx: &'s mut Ctx<'c>,
    members: &'s [usize],
    others: Option<TimedObstacles<'s>>,
}

impl Search<'_, '_> {
    fn nearest(&self, tree: &Tree, target: &[Configuration]) -> usize {
        let mut best = (f64::INFINITY, 0);
        for (k, n) in tree.nodes.iter().enumerate() {
            let d: f64 =
                self.members.iter().enumerate().map(|(m, &r)| scaled_distance_sq(self.ctx.robot(r), &n.q[m], &target[m])).sum();
            if d < best.0 {
                best = (d, k);
            }
        }
        best.1
    }

    fn edge_valid(&mut self, edge: &[Path], t: Option<usize>) -> bool {
        match (&self.others, t) {
            (Some(o), Some(t)) => {
                let fixed = windows(o.paths, o.t0 + t, edge[0].len());
                self.ctx.group_valid(edge, &fixed, true)
            }
            _ => self.ctx.motion_valid(edge, true),
        }
    }

    fn extend(&mut self, tree: &mut Tree, target: &[Configuration]) -> Extend {
        let near = self.nearest(tree, target);
        let q_near = &tree.nodes[near].q;
        let reach = self
            .members
            .iter()
            .enumerate()
            .map(|(m, &r)| q_near[m].step_distance(&target[m], self.ctx.robot(r).max_step()))
            .fold(0.0, f64::max);
        if reach == 0.0 {
            return Extend::Reached(near);
        }
        let limit = self.ctx.config.max_extension_steps as f64;
        let (q_new, reached) = if reach <= limit {
            (target.to_vec(), true)
        } else {
            (q_near.iter().zip(target).map(|(a, b)| a.lerp(b, limit / reach)).collect(), false)
        };
        let edge = team_segment(&self.ctx.problem.robots, self.members, q_near, &q_new);
        let t = tree.nodes[near].t;
        if !self.edge_valid(&edge, tree.timed.then_some(t)) {
            return Extend::Trapped;
        }
        let steps = edge[0].len() - 1;
        tree.nodes.push(Node { q: q_new, parent: Some(near), t: t + steps, edge });
        let k = tree.nodes.len() - 1;
        if reached {
            Extend::Reached(k)
        } else {
            Extend::Advanced(k)
        }
    }

    fn connect(&mut self, tree: &mut Tree, target: &[Configuration]) -> Extend {
        loop {
            match self.extend(tree, target) {
                Extend::Advanced(_) => continue,
                other => return other,
            }
        }
    }

    fn sample(&mut self, goal: &[Configuration]) -> Vec<Configuration> {
        if self.ctx.coin(self.ctx.config.goal_bias) {
            return goal.to_vec();
        }
        self.members.iter().map(|&r| self.ctx.sample(r)).collect()
    }

    /// Member paths from the start root through `a` (start tree) and `b`
    /// (goal tree) to the goal root.
    fn assemble(&self, start: &Tree, a: usize, goal: &Tree, b: usize) -> Vec<Path> {
        let mut chain = Vec::new();
        let mut k = Some(a);
        while let Some(i) = k {
            chain.push(i);
            k = start.nodes[i].parent;
        }
        let mut paths: Vec<Path> = self.members.iter().enumerate().map(|(m, &r)| Path::stationary(r, start.nodes[0].q[m].clone())).collect();
        for &i in chain.iter().rev().skip(1) {
            for (p, e) in paths.iter_mut().zip(&start.nodes[i].edge) {
                p.extend_from(e.waypoints());
            }
        }
        let mut k = b;
        while let Some(parent) = goal.nodes[k].parent {
            for (p, e) in paths.iter_mut().zip(&goal.nodes[k].edge) {
                let rev: Vec<Configuration> = e.waypoints().iter().rev().cloned().collect();
                p.extend_from(&rev);
            }
            k = parent;
        }
        paths
    }

    fn run(&mut self, start: Vec<Configuration>, goal: Vec<Configuration>) -> Option<Vec<Path>> {
        if start == goal {
            return Some(self.members.iter().enumerate().map(|(m, &r)| Path::stationary(r, start[m].clone())).collect());
        }
        let direct = team_segment(&self.ctx.problem.robots, self.members, &start, &goal);
        if self.edge_valid(&direct, Some(0)) {
            return Some(direct);
        }
        let root = |q: Vec<Configuration>| Node { q, parent: None, t: 0, edge: Vec::new() };
        let mut ta = Tree { nodes: vec![root(start)], timed: true };
        let mut tb = Tree { nodes: vec![root(goal.clone())], timed: false };
        let mut forward = true;
        for _ in 0..self.ctx.config.max_iterations {
            if self.ctx.expired() {
                return None;
            }
            self.ctx.iterations += 1;
            let (grow, other) = if forward { (&mut ta, &mut tb) } else { (&mut tb, &mut ta) };
            let target = if forward { goal.clone() } else { ta_root(other) };
            let q_rand = self.sample(&target);
            let new = match self.extend(grow, &q_rand) {
                Extend::Reached(k) | Extend::Advanced(k) => k,
                Extend::Trapped => {
                    forward = !forward;
                    continue;
                }
            };
            let q_new = grow.nodes[new].q.clone();
            if let Extend::Reached(hit) = self.connect(other, &q_new) {
                let (s, g) = if forward { (new, hit) } else { (hit, new) };
                let paths = self.assemble(&ta, s, &tb, g);
                if self.accept(&paths) {
                    return Some(paths);
                }
            }
            forward = !forward;
        }
        None
    }

    /// Goal-tree edges were validated without timing, so a candidate that
    /// crosses timed obstacles is re-checked as a whole.
    fn accept(&mut self, paths: &[Path]) -> bool {
        match &self.others {
            Some(o) => {
                let fixed = windows(o.paths, o.t0, paths[0].len());
                self.ctx.group_valid(paths, &fixed, false)
            }
            None => true,
        }
    }
}

fn ta_root(tree: &Tree) -> Vec<Configuration> {
    tree.nodes[0].q.clone()
}

/// RRT-Connect for `members` between `start` and `goal` (one configuration
/// per member); paths are synchronized and indexed by robot.
pub(crate) fn rrt_connect(
    ctx: &mut Ctx<'_>,
    members: &[usize],
    start: Vec<Configuration>,
    goal: Vec<Configuration>,
    others: Option<TimedObstacles<'_>>,
) -> Option<Vec<Path>> {
    Search { ctx, members, others }.run(start, goal)
}

/// Composite RRT-Connect over the whole team.
pub fn plan_composite_rrtc(problem: &PlanningProblem, config: &PlannerConfig, clock: &dyn Clock) -> PlanOutcome {
    let mut ctx = Ctx::new(problem, config, clock);
    if ctx.expired() {
        return ctx.finish(None);
    }
    let members: Vec<usize> = (0..problem.robot_count()).collect();
    let paths = rrt_connect(&mut ctx, &members, problem.starts.clone(), problem.goals.clone(), None);
    ctx.finish(paths)
}
