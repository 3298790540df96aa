//! Adaptive robot coordination: independent plans repaired locally around
//! each conflict.

use alloc::vec::Vec;

use super::rrtc::{rrt_connect, TimedObstacles};
use super::{Clock, Ctx, Failure, PlanOutcome, PlannerConfig, PlanningProblem};
use crate::model::{horizon, Configuration, Path};
use crate::validation::Conflict;

/// Replans robots `i` and `j` jointly over `[t0, t1]` around `conflict` and
/// splices the repair in, shifting their trailing motion.
fn repair(ctx: &mut Ctx<'_>, paths: &mut [Path], conflict: Conflict, w: usize) -> bool {
    let Conflict { t, i, j } = conflict;
    let end = horizon(paths) - 1;
    let (t0, t1) = (t.saturating_sub(w), (t + w).min(end));
    let start = [paths[i].at(t0).clone(), paths[j].at(t0).clone()];
    let goal = [paths[i].at(t1).clone(), paths[j].at(t1).clone()];
    let others: Vec<Path> = paths.iter().filter(|p| p.robot != i && p.robot != j).cloned().collect();
    let timed = ctx.config.arc_timed_obstacles.then_some(TimedObstacles { paths: &others, t0 });
    let Some(seg) = rrt_connect(ctx, &[i, j], start.to_vec(), goal.to_vec(), timed) else { return false };
    for (r, s) in [i, j].into_iter().zip(seg) {
        let old = &paths[r];
        let mut w: Vec<Configuration> = (0..t0).map(|t| old.at(t).clone()).collect();
        w.extend(s.into_waypoints());
        if t1 + 1 < old.len() {
            w.extend_from_slice(&old.waypoints()[t1 + 1..]);
        }
        paths[r] = Path::new(r, w).expect("non-empty");
    }
    true
}

pub fn plan_arc(problem: &PlanningProblem, config: &PlannerConfig, clock: &dyn Clock) -> PlanOutcome {
    let mut ctx = Ctx::new(problem, config, clock);
    if ctx.expired() {
        return ctx.finish(None);
    }
    let mut paths = Vec::with_capacity(problem.robot_count());
    for r in 0..problem.robot_count() {
        match rrt_connect(&mut ctx, &[r], vec_of(&problem.starts[r]), vec_of(&problem.goals[r]), None) {
            Some(mut p) => paths.push(p.remove(0)),
            None => return ctx.finish(None),
        }
    }
    for _ in 0..config.arc_max_repairs {
        let Some(conflict) = ctx.first_conflict(&paths) else {
            return ctx.finish(Some(paths));
        };
        ctx.branches += 1;
        if !repair(&mut ctx, &mut paths, conflict, config.arc_window)
            && (ctx.failure == Some(Failure::Timeout) || !repair(&mut ctx, &mut paths, conflict, 2 * config.arc_window))
        {
            return ctx.finish(None);
        }
    }
    ctx.finish(None)
}

fn vec_of(q: &Configuration) -> Vec<Configuration> {
    alloc::vec![q.clone()]
}

#[cfg(test)]
mod tests {
    use super::super::testutil::*;
    use super::super::NoClock;
    use super::*;
    use crate::reference;

    #[test]
    fn conflict_free_paths_returned_after_one_scan() {
        let bots = alloc::vec![reference::sphere_bot(), reference::sphere_bot()];
        let problem = PlanningProblem::new(
            bots,
            open_env(),
            alloc::vec![q(-1.0, 0.0, 0.0), q(-1.0, 1.0, 0.0)],
            alloc::vec![q(1.0, 0.0, 0.0), q(1.0, 1.0, 0.0)],
            60.0,
            0,
        )
        .unwrap();
        let out = plan_arc(&problem, &PlannerConfig::default(), &NoClock);
        assert_sound(&problem, &out);
        assert_eq!(out.stats.branches, 0);
        assert_eq!(out.solution.unwrap().paths, problem.straight_line_paths());
    }

    #[test]
    fn crossing_is_repaired() {
        let problem = crossing(1);
        let out = plan_arc(&problem, &PlannerConfig::default(), &NoClock);
        assert_sound(&problem, &out);
        assert_eq!(out.stats.branches, 1);
    }

    #[test]
    fn ignoring_other_robots_still_sound() {
        let problem = crossing(6);
        let out = plan_arc(&problem, &PlannerConfig { arc_timed_obstacles: false, ..Default::default() }, &NoClock);
        assert_sound(&problem, &out);
    }
}
