//! Unidirectional space-time RRT and prioritized planning on top of it.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::stcbs::{violates, Constraint};
use super::{scaled_distance_sq, windows, Clock, Ctx, PlanOutcome, PlannerConfig, PlanningProblem};
use crate::model::{horizon, interpolate, steps_required, Configuration, Path};

/// A configuration reached at timestep `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceTimeConfig {
    pub q: Configuration,
    pub t: usize,
}

/// What a space-time search must avoid besides the environment.
pub(crate) enum Moving<'o> {
    /// Fixed higher-priority paths, all starting at timestep 0.
    Paths(&'o [Path]),
    /// ST-CBS constraints on this robot.
    Constraints(&'o [Constraint]),
}

struct Node {
    st: SpaceTimeConfig,
    parent: Option<usize>,
    edge: Path,
}

struct Search<'s, 'c> {
    ctx: &'s mut Ctx<'c>,
    robot: usize,
    moving: Moving<'s>,
}

impl Search<'_, '_> {
    /// `seg` starts at absolute timestep `t0`.
    fn segment_valid(&mut self, seg: &Path, t0: usize) -> bool {
        match self.moving {
            Moving::Paths(hp) => {
                let fixed = windows(hp, t0, seg.len());
                self.ctx.group_valid(core::slice::from_ref(seg), &fixed, true)
            }
            Moving::Constraints(cs) => {
                if !self.ctx.motion_valid(core::slice::from_ref(seg), true) {
                    return false;
                }
                let robot = self.ctx.robot(self.robot);
                !seg.waypoints().iter().enumerate().any(|(k, q)| violates(robot, q, t0 + k, cs))
            }
        }
    }

    /// Waiting at `goal` from `t` onwards stays clear of everything that moves.
    fn rest_valid(&mut self, goal: &Configuration, t: usize) -> bool {
        match self.moving {
            Moving::Paths(hp) => {
                if hp.is_empty() {
                    return true;
                }
                let len = horizon(hp).saturating_sub(t).max(1);
                let rest = Path::stationary(self.robot, goal.clone()).padded(len);
                self.ctx.group_valid(&[rest], &windows(hp, t, len), false)
            }
            Moving::Constraints(cs) => {
                let robot = self.ctx.robot(self.robot);
                let last = cs.iter().map(|c| c.t + c.window).max().unwrap_or(0);
                !(t..=last.max(t)).any(|tau| violates(robot, goal, tau, cs))
            }
        }
    }

    fn build(&self, nodes: &[Node], mut k: usize, tail: Path) -> Path {
        let mut chain = vec![];
        while let Some(p) = nodes[k].parent {
            chain.push(k);
            k = p;
        }
        let mut path = Path::stationary(self.robot, nodes[0].st.q.clone());
        for &i in chain.iter().rev() {
            path.extend_from(nodes[i].edge.waypoints());
        }
        path.extend_from(tail.waypoints());
        path
    }

    /// Straight motion from `node` to the goal, then waiting there.
    fn try_goal(&mut self, nodes: &[Node], k: usize, goal: &Configuration, h: usize) -> Option<Path> {
        let st = &nodes[k].st;
        let steps = steps_required(self.ctx.robot(self.robot), &st.q, goal);
        if st.t + steps > h {
            return None;
        }
        let seg = interpolate(self.robot, &st.q, goal, steps);
        if steps > 0 && !self.segment_valid(&seg, st.t) {
            return None;
        }
        if !self.rest_valid(goal, st.t + steps) {
            return None;
        }
        Some(self.build(nodes, k, seg))
    }

    fn nearest(&self, nodes: &[Node], q: &Configuration, t: usize) -> Option<usize> {
        let robot = self.ctx.robot(self.robot);
        let mut best: Option<(f64, usize)> = None;
        for (k, n) in nodes.iter().enumerate() {
            if n.st.t >= t || steps_required(robot, &n.st.q, q) > t - n.st.t {
                continue;
            }
            let dt = (t - n.st.t) as f64;
            let d = scaled_distance_sq(robot, &n.st.q, q) + dt * dt;
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, k));
            }
        }
        best.map(|b| b.1)
    }

    fn run(&mut self, start: &Configuration, goal: &Configuration, h: usize) -> Option<Path> {
        let mut nodes = vec![Node { st: SpaceTimeConfig { q: start.clone(), t: 0 }, parent: None, edge: Path::stationary(self.robot, start.clone()) }];
        if let Some(p) = self.try_goal(&nodes, 0, goal, h) {
            return Some(p);
        }
        let limit = self.ctx.config.max_extension_steps;
        for _ in 0..self.ctx.config.max_iterations {
            if self.ctx.expired() {
                return None;
            }
            self.ctx.iterations += 1;
            let t_rand = self.ctx.rng.gen_range(1..=h);
            let q_rand = if self.ctx.coin(self.ctx.config.goal_bias) {
                goal.clone()
            } else if self.ctx.coin(self.ctx.config.wait_bias) {
                let k = self.ctx.rng.gen_range(0..nodes.len());
                nodes[k].st.q.clone()
            } else {
                self.ctx.sample(self.robot)
            };
            let Some(near) = self.nearest(&nodes, &q_rand, t_rand) else { continue };
            let from = nodes[near].st.clone();
            let dt = t_rand - from.t;
            let (q_new, t_new) =
                if dt > limit { (from.q.lerp(&q_rand, limit as f64 / dt as f64), from.t + limit) } else { (q_rand, t_rand) };
            let edge = interpolate(self.robot, &from.q, &q_new, t_new - from.t);
            if !self.segment_valid(&edge, from.t) {
                continue;
            }
            nodes.push(Node { st: SpaceTimeConfig { q: q_new, t: t_new }, parent: Some(near), edge });
            if let Some(p) = self.try_goal(&nodes, nodes.len() - 1, goal, h) {
                return Some(p);
            }
        }
        None
    }
}

/// Space-time horizon for `problem`.
pub(crate) fn initial_horizon(problem: &PlanningProblem, config: &PlannerConfig) -> usize {
    (config.horizon_factor * problem.lower_bound()).max(config.min_horizon)
}

/// Space-time RRT for one robot, doubling the horizon on failure.
pub(crate) fn space_time_rrt(ctx: &mut Ctx<'_>, robot: usize, moving: Moving<'_>, horizon: usize) -> Option<Path> {
    let (start, goal) = (ctx.problem.starts[robot].clone(), ctx.problem.goals[robot].clone());
    let mut search = Search { ctx, robot, moving };
    let mut h = horizon;
    for _ in 0..=search.ctx.config.horizon_doublings {
        if let Some(p) = search.run(&start, &goal, h) {
            return Some(p);
        }
        if search.ctx.expired() {
            return None;
        }
        h *= 2;
    }
    None
}

/// Prioritized planning: each robot in `order` plans a space-time path that
/// avoids the robots planned before it.
pub fn plan_pp_strrt(problem: &PlanningProblem, order: &[usize], config: &PlannerConfig, clock: &dyn Clock) -> PlanOutcome {
    let mut ctx = Ctx::new(problem, config, clock);
    if ctx.expired() {
        return ctx.finish(None);
    }
    let h = initial_horizon(problem, config);
    let mut planned: Vec<Path> = Vec::with_capacity(order.len());
    for &r in order {
        match space_time_rrt(&mut ctx, r, Moving::Paths(&planned), h) {
            Some(p) => planned.push(p),
            None => return ctx.finish(None),
        }
    }
    planned.sort_by_key(|p| p.robot);
    ctx.finish(Some(planned))
}

#[cfg(test)]
mod tests {
    use super::super::testutil::*;
    use super::super::NoClock;
    use super::*;
    use crate::model::{Aabb, Environment, Obstacle};
    use crate::math::Vec3;
    use crate::reference;
    use crate::validation::oracle_first_conflict;

    #[test]
    fn empty_priority_set_makes_no_robot_robot_calls() {
        let problem = PlanningProblem::new(vec![reference::sphere_bot()], open_env(), vec![q(0.0, 0.0, 0.0)], vec![q(2.0, 1.0, 0.0)], 60.0, 1)
            .unwrap();
        let out = plan_pp_strrt(&problem, &[0], &PlannerConfig::default(), &NoClock);
        assert_sound(&problem, &out);
        assert_eq!(out.stats.cc_calls.rr_performed, 0);
        assert_eq!(out.stats.cc_calls.rr_total, 0);
        assert!(out.stats.cc_calls.env_performed > 0);
    }

    #[test]
    fn crossing_robot_yields_to_higher_priority() {
        let problem = crossing(2);
        assert!(oracle_first_conflict(&problem.robots, &problem.straight_line_paths()).is_some());
        let out = plan_pp_strrt(&problem, &[0, 1], &PlannerConfig::default(), &NoClock);
        assert_sound(&problem, &out);
        let sol = out.solution.unwrap();
        let straight = problem.straight_line_paths();
        assert_eq!(sol.paths[0].waypoints()[..straight[0].len()], straight[0].waypoints()[..]);
        assert_ne!(sol.paths[1].waypoints()[..straight[1].len()], straight[1].waypoints()[..]);
    }

    #[test]
    fn reversed_order_also_sound() {
        let problem = crossing(4);
        let out = plan_pp_strrt(&problem, &[1, 0], &PlannerConfig::default(), &NoClock);
        assert_sound(&problem, &out);
    }

    #[test]
    fn detours_around_obstacle() {
        let wall = Obstacle::Box(Aabb::new(Vec3::new(-0.2, -1.0, -1.0), Vec3::new(0.2, 1.0, 1.0)));
        let env = Environment::new(vec![wall], Aabb::new(Vec3::new(-3.0, -3.0, -3.0), Vec3::new(3.0, 3.0, 3.0))).unwrap();
        let problem = PlanningProblem::new(vec![reference::sphere_bot_with(0.15, 2.0)], env, vec![q(-1.0, 0.0, 0.0)], vec![q(1.0, 0.0, 0.0)], 60.0, 8)
            .unwrap();
        let out = plan_pp_strrt(&problem, &[0], &PlannerConfig::default(), &NoClock);
        assert_sound(&problem, &out);
    }
}
