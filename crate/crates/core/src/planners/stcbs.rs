//! Space-time conflict-based search.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::{Ordering, Reverse};

use super::strrt::{initial_horizon, space_time_rrt, Moving};
use super::{Clock, Ctx, Failure, PlanOutcome, PlannerConfig, PlanningProblem};
use crate::collision::sphere_sets_collide;
use crate::kinematics::{fk_scalar, Frame, SphereSet};
use crate::model::{Configuration, Path, RobotSpec};

/// Forbids `robot` from touching `forbidden_spheres` (world frame) at any
/// timestep within `window` of `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub robot: usize,
    pub t: usize,
    pub forbidden_spheres: SphereSet,
    pub window: usize,
}

impl Constraint {
    pub fn active_at(&self, t: usize) -> bool {
        t.abs_diff(self.t) <= self.window
    }
}

pub(crate) fn violates(robot: &RobotSpec, q: &Configuration, t: usize, constraints: &[Constraint]) -> bool {
    let mut spheres = None;
    for c in constraints.iter().filter(|c| c.active_at(t)) {
        let s = spheres.get_or_insert_with(|| fk_scalar(robot, q, Frame::World));
        if sphere_sets_collide(s, &c.forbidden_spheres) {
            return true;
        }
    }
    false
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintTreeNode {
    pub constraints: Vec<Vec<Constraint>>,
    pub paths: Vec<Path>,
    /// Sum of path lengths.
    pub cost: usize,
}

impl ConstraintTreeNode {
    fn new(constraints: Vec<Vec<Constraint>>, paths: Vec<Path>) -> Self {
        let cost = paths.iter().map(Path::cost).sum();
        ConstraintTreeNode { constraints, paths, cost }
    }
}

/// Open-list entry: cheapest first, then first created.
struct Open {
    cost: usize,
    seq: usize,
    node: ConstraintTreeNode,
}

impl PartialEq for Open {
    fn eq(&self, o: &Self) -> bool {
        (self.cost, self.seq) == (o.cost, o.seq)
    }
}
impl Eq for Open {}
impl PartialOrd for Open {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Open {
    fn cmp(&self, o: &Self) -> Ordering {
        (Reverse(self.cost), Reverse(self.seq)).cmp(&(Reverse(o.cost), Reverse(o.seq)))
    }
}

pub fn plan_stcbs(problem: &PlanningProblem, config: &PlannerConfig, clock: &dyn Clock) -> PlanOutcome {
    let mut ctx = Ctx::new(problem, config, clock);
    if ctx.expired() {
        return ctx.finish(None);
    }
    let n = problem.robot_count();
    let h = initial_horizon(problem, config);
    let mut root_paths = Vec::with_capacity(n);
    for r in 0..n {
        match space_time_rrt(&mut ctx, r, Moving::Constraints(&[]), h) {
            Some(p) => root_paths.push(p),
            None => return ctx.finish(None),
        }
    }
    let mut open = BinaryHeap::new();
    let mut seq = 0;
    let root = ConstraintTreeNode::new(vec![Vec::new(); n], root_paths);
    open.push(Open { cost: root.cost, seq, node: root });
    let mut expanded = 0;
    while let Some(Open { node, .. }) = open.pop() {
        if ctx.expired() {
            return ctx.finish(None);
        }
        ctx.iterations += 1;
        let Some(conflict) = ctx.first_conflict(&node.paths) else {
            return ctx.finish(Some(node.paths));
        };
        expanded += 1;
        if expanded >= config.max_ct_nodes {
            break;
        }
        for (a, b) in [(conflict.i, conflict.j), (conflict.j, conflict.i)] {
            let other = &node.paths[b];
            let c = Constraint {
                robot: a,
                t: conflict.t,
                forbidden_spheres: fk_scalar(ctx.robot(b), other.at(conflict.t), Frame::World),
                window: config.constraint_window,
            };
            let mut constraints = node.constraints.clone();
            constraints[a].push(c);
            let replanned = space_time_rrt(&mut ctx, a, Moving::Constraints(&constraints[a]), h);
            if ctx.failure == Some(Failure::Timeout) {
                return ctx.finish(None);
            }
            if let Some(p) = replanned {
                ctx.branches += 1;
                let mut paths = node.paths.clone();
                paths[a] = p;
                seq += 1;
                let child = ConstraintTreeNode::new(constraints, paths);
                open.push(Open { cost: child.cost, seq, node: child });
            }
        }
    }
    ctx.finish(None)
}

#[cfg(test)]
mod tests {
    use super::super::testutil::*;
    use super::super::NoClock;
    use super::*;
    use crate::reference;

    #[test]
    fn conflict_free_root_has_no_branches() {
        let bots = vec![reference::sphere_bot(), reference::sphere_bot()];
        let problem =
            PlanningProblem::new(bots, open_env(), vec![q(-1.0, 0.0, 0.0), q(-1.0, 1.0, 0.0)], vec![q(1.0, 0.0, 0.0), q(1.0, 1.0, 0.0)], 60.0, 0)
                .unwrap();
        let out = plan_stcbs(&problem, &PlannerConfig::default(), &NoClock);
        assert_sound(&problem, &out);
        assert_eq!(out.stats.branches, 0);
        assert_eq!(out.stats.iterations, 1);
    }

    #[test]
    fn crossing_needs_a_branch() {
        let problem = crossing(3);
        let out = plan_stcbs(&problem, &PlannerConfig::default(), &NoClock);
        assert_sound(&problem, &out);
        assert!(out.stats.branches >= 1);
    }

    #[test]
    fn constraint_window() {
        let c = Constraint { robot: 0, t: 5, forbidden_spheres: SphereSet::default(), window: 1 };
        assert!(c.active_at(4) && c.active_at(5) && c.active_at(6));
        assert!(!c.active_at(3) && !c.active_at(7));
    }
}
