//! Multi-robot motion planners built on the validation primitives.
//!
//! Every planner draws randomness from a ChaCha8 stream seeded with the
//! problem seed and consults the validity [`Backend`] for every accept/reject
//! decision, so swapping the batched backend for the scalar one changes
//! nothing but the run time. Iteration caps, not wall-clock limits, bound the
//! searches in the deterministic regime; the clock only aborts runaway runs.

mod arc;
mod drrt;
mod rrtc;
mod stcbs;
mod strrt;

use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::collision::{sphere_sets_collide, spheres_hit_environment, EffortCounter};
use crate::kinematics::{build_env_cache, fk_scalar, Frame, TransformedEnvironmentCache};
use crate::model::{horizon, interpolate, steps_required, Configuration, Environment, Path, RobotSpec};
use crate::validation::{Backend, Conflict};

pub use stcbs::{Constraint, ConstraintTreeNode};
pub use strrt::SpaceTimeConfig;

/// Source of elapsed wall time in seconds since the planner started.
pub trait Clock {
    fn elapsed(&self) -> f64;
}

/// Clock that never advances: only iteration caps end a search.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn elapsed(&self) -> f64 {
        0.0
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ProblemError {
    #[error("{robots} robots but {starts} starts and {goals} goals")]
    LengthMismatch { robots: usize, starts: usize, goals: usize },
    #[error("robot {robot}: {which} has {got} DOF, expected {dof}")]
    Dof { robot: usize, which: &'static str, dof: usize, got: usize },
    #[error("robot {robot}: {which} outside joint limits")]
    Limits { robot: usize, which: &'static str },
    #[error("robot {robot}: {which} in collision")]
    InCollision { robot: usize, which: &'static str },
    #[error("robots {i} and {j} overlap at their {which}s")]
    Overlap { i: usize, j: usize, which: &'static str },
}

/// A team, its environment and one start/goal per robot.
#[derive(Clone, Debug)]
pub struct PlanningProblem {
    pub robots: Vec<RobotSpec>,
    pub env: Environment,
    pub starts: Vec<Configuration>,
    pub goals: Vec<Configuration>,
    pub time_limit: f64,
    pub seed: u64,
}

impl PlanningProblem {
    /// Builds a problem, rejecting starts or goals that are outside limits,
    /// in collision with the environment or themselves, or overlapping
    /// another robot's start (goal).
    pub fn new(
        robots: Vec<RobotSpec>,
        env: Environment,
        starts: Vec<Configuration>,
        goals: Vec<Configuration>,
        time_limit: f64,
        seed: u64,
    ) -> Result<PlanningProblem, ProblemError> {
        if starts.len() != robots.len() || goals.len() != robots.len() {
            return Err(ProblemError::LengthMismatch { robots: robots.len(), starts: starts.len(), goals: goals.len() });
        }
        for (which, qs) in [("start", &starts), ("goal", &goals)] {
            let mut sets = Vec::with_capacity(robots.len());
            for (r, (robot, q)) in robots.iter().zip(qs.iter()).enumerate() {
                if q.len() != robot.dof() {
                    return Err(ProblemError::Dof { robot: r, which, dof: robot.dof(), got: q.len() });
                }
                if !robot.within_limits(q) {
                    return Err(ProblemError::Limits { robot: r, which });
                }
                let set = fk_scalar(robot, q, Frame::World);
                if spheres_hit_environment(robot, &set, &env) {
                    return Err(ProblemError::InCollision { robot: r, which });
                }
                sets.push(set);
            }
            for i in 0..sets.len() {
                for j in i + 1..sets.len() {
                    if sphere_sets_collide(&sets[i], &sets[j]) {
                        return Err(ProblemError::Overlap { i, j, which });
                    }
                }
            }
        }
        Ok(PlanningProblem { robots, env, starts, goals, time_limit, seed })
    }

    pub fn robot_count(&self) -> usize {
        self.robots.len()
    }

    /// Straight-line start-to-goal paths, ignoring every collision.
    pub fn straight_line_paths(&self) -> Vec<Path> {
        (0..self.robots.len())
            .map(|r| interpolate(r, &self.starts[r], &self.goals[r], steps_required(&self.robots[r], &self.starts[r], &self.goals[r])))
            .collect()
    }

    /// Longest single-robot straight-line lower bound, in timesteps.
    pub fn lower_bound(&self) -> usize {
        (0..self.robots.len()).map(|r| steps_required(&self.robots[r], &self.starts[r], &self.goals[r])).max().unwrap_or(0)
    }
}

/// Tunables shared by the planners.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlannerConfig {
    pub backend: Backend,
    /// Longest tree extension, in timesteps.
    pub max_extension_steps: usize,
    pub goal_bias: f64,
    /// Probability that a space-time sample reuses an existing node's
    /// configuration, which grows waiting motions.
    pub wait_bias: f64,
    /// Iteration cap for one tree search.
    pub max_iterations: usize,
    /// Space-time horizon as a multiple of the longest single-robot lower bound.
    pub horizon_factor: usize,
    pub min_horizon: usize,
    pub horizon_doublings: usize,
    /// Half-width of an ST-CBS constraint, in timesteps.
    pub constraint_window: usize,
    pub max_ct_nodes: usize,
    /// Half-width of an ARC repair window, in timesteps.
    pub arc_window: usize,
    pub arc_max_repairs: usize,
    /// Treat non-conflicting robots as timed obstacles inside ARC subproblems;
    /// when off they are ignored and the outer conflict loop re-checks.
    pub arc_timed_obstacles: bool,
    pub roadmap_vertices: usize,
    pub roadmap_neighbors: usize,
    /// MR-dRRT attempts a connect-to-target after every this many expansions.
    pub connect_every: usize,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            backend: Backend::default(),
            max_extension_steps: 16,
            goal_bias: 0.05,
            wait_bias: 0.1,
            max_iterations: 5000,
            horizon_factor: 4,
            min_horizon: 16,
            horizon_doublings: 2,
            constraint_window: 1,
            max_ct_nodes: 256,
            arc_window: 8,
            arc_max_repairs: 200,
            arc_timed_obstacles: true,
            roadmap_vertices: 200,
            roadmap_neighbors: 10,
            connect_every: 5,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PlanStats {
    pub wall_time: f64,
    pub cc_calls: EffortCounter,
    /// Planner-specific: tree iterations, CT nodes or repair rounds included.
    pub iterations: u64,
    /// CT branches (ST-CBS) or repair subproblems (ARC).
    pub branches: u64,
    pub success: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Failure {
    Timeout,
    /// Iteration, node or repair cap reached.
    Exhausted,
    /// A robot's roadmap does not connect its start to its goal.
    Disconnected { robot: usize },
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Timeout => f.write_str("timeout"),
            Failure::Exhausted => f.write_str("search exhausted"),
            Failure::Disconnected { robot } => write!(f, "roadmap of robot {robot} does not connect start to goal"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    /// One path per robot, all of the same length.
    pub paths: Vec<Path>,
    pub stats: PlanStats,
}

impl Solution {
    /// Sum of path lengths.
    pub fn cost(&self) -> usize {
        self.paths.iter().map(Path::cost).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlanOutcome {
    pub solution: Option<Solution>,
    pub stats: PlanStats,
    pub failure: Option<Failure>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Planner {
    CompositeRrtc,
    PpStRrt,
    StCbs,
    MrDrrt,
    Arc,
}

impl Planner {
    pub const ALL: [Planner; 5] = [Planner::CompositeRrtc, Planner::PpStRrt, Planner::StCbs, Planner::MrDrrt, Planner::Arc];

    pub fn name(self) -> &'static str {
        match self {
            Planner::CompositeRrtc => "composite-rrtc",
            Planner::PpStRrt => "pp-st-rrt",
            Planner::StCbs => "st-cbs",
            Planner::MrDrrt => "mr-drrt",
            Planner::Arc => "arc",
        }
    }

    pub fn from_name(name: &str) -> Option<Planner> {
        Planner::ALL.into_iter().find(|p| p.name() == name)
    }

    /// Runs the planner; prioritized planning uses the input robot order.
    pub fn plan(self, problem: &PlanningProblem, config: &PlannerConfig, clock: &dyn Clock) -> PlanOutcome {
        match self {
            Planner::CompositeRrtc => plan_composite_rrtc(problem, config, clock),
            Planner::PpStRrt => {
                let order: Vec<usize> = (0..problem.robot_count()).collect();
                plan_pp_strrt(problem, &order, config, clock)
            }
            Planner::StCbs => plan_stcbs(problem, config, clock),
            Planner::MrDrrt => plan_mr_drrt(problem, config, clock),
            Planner::Arc => plan_arc(problem, config, clock),
        }
    }
}

impl fmt::Display for Planner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub use arc::plan_arc;
pub use drrt::plan_mr_drrt;
pub use rrtc::plan_composite_rrtc;
pub use stcbs::plan_stcbs;
pub use strrt::plan_pp_strrt;

/// Per-invocation planner state: RNG, counters and validity queries.
pub(crate) struct Ctx<'a> {
    pub problem: &'a PlanningProblem,
    pub config: &'a PlannerConfig,
    clock: &'a dyn Clock,
    cache: TransformedEnvironmentCache,
    pub rng: ChaCha8Rng,
    pub effort: EffortCounter,
    pub iterations: u64,
    pub branches: u64,
    pub failure: Option<Failure>,
}

impl<'a> Ctx<'a> {
    pub fn new(problem: &'a PlanningProblem, config: &'a PlannerConfig, clock: &'a dyn Clock) -> Ctx<'a> {
        Ctx {
            problem,
            config,
            clock,
            cache: build_env_cache(&problem.robots, &problem.env),
            rng: ChaCha8Rng::seed_from_u64(problem.seed),
            effort: EffortCounter::default(),
            iterations: 0,
            branches: 0,
            failure: None,
        }
    }

    /// True once the time limit has passed; records the failure.
    pub fn expired(&mut self) -> bool {
        if self.failure == Some(Failure::Timeout) {
            return true;
        }
        if self.clock.elapsed() > self.problem.time_limit {
            self.failure = Some(Failure::Timeout);
            return true;
        }
        false
    }

    pub fn robot(&self, r: usize) -> &'a RobotSpec {
        &self.problem.robots[r]
    }

    pub fn motion_valid(&mut self, paths: &[Path], check_environment: bool) -> bool {
        self.group_valid(paths, &[], check_environment)
    }

    pub fn group_valid(&mut self, movers: &[Path], fixed: &[Path], check_environment: bool) -> bool {
        let p = self.problem;
        self.config
            .backend
            .group_valid(&p.robots, movers, fixed, &p.env, &self.cache, check_environment, &mut self.effort)
            .expect("planner paths are consistent with the team")
    }

    pub fn first_conflict(&mut self, paths: &[Path]) -> Option<Conflict> {
        self.config
            .backend
            .first_conflict(&self.problem.robots, paths, &mut self.effort)
            .expect("planner paths are consistent with the team")
    }

    /// Uniform sample within robot `r`'s joint limits.
    pub fn sample(&mut self, r: usize) -> Configuration {
        let robot = self.robot(r);
        Configuration(robot.joints().iter().map(|j| self.rng.gen_range(j.limits[0]..j.limits[1])).collect())
    }

    pub fn coin(&mut self, p: f64) -> bool {
        self.rng.gen::<f64>() < p
    }

    fn stats(&self, success: bool) -> PlanStats {
        PlanStats {
            wall_time: self.clock.elapsed(),
            cc_calls: self.effort,
            iterations: self.iterations,
            branches: self.branches,
            success,
        }
    }

    /// Packages `paths` (padded to a common length) or the recorded failure.
    pub fn finish(self, paths: Option<Vec<Path>>) -> PlanOutcome {
        match paths {
            Some(paths) => {
                let len = horizon(&paths);
                let paths = paths.iter().map(|p| p.padded(len)).collect();
                let stats = self.stats(true);
                PlanOutcome { solution: Some(Solution { paths, stats: stats.clone() }), stats, failure: None }
            }
            None => {
                let stats = self.stats(false);
                PlanOutcome { solution: None, stats, failure: Some(self.failure.unwrap_or(Failure::Exhausted)) }
            }
        }
    }
}

/// Squared distance in units of `max_step` per DOF.
pub(crate) fn scaled_distance_sq(robot: &RobotSpec, a: &Configuration, b: &Configuration) -> f64 {
    a.values().iter().zip(b.values()).zip(robot.max_step()).map(|((x, y), m)| ((x - y) / m) * ((x - y) / m)).sum()
}

/// Synchronized straight-line motion of `members` over the step count the
/// slowest member needs. Path `k` is for robot `members[k]`.
pub(crate) fn team_segment(robots: &[RobotSpec], members: &[usize], a: &[Configuration], b: &[Configuration]) -> Vec<Path> {
    let steps = members.iter().enumerate().map(|(k, &r)| steps_required(&robots[r], &a[k], &b[k])).max().unwrap_or(0);
    members.iter().enumerate().map(|(k, &r)| interpolate(r, &a[k], &b[k], steps)).collect()
}

/// Windows of `paths` covering absolute timesteps `start..start + len`.
pub(crate) fn windows(paths: &[Path], start: usize, len: usize) -> Vec<Path> {
    paths.iter().map(|p| p.window(start, len)).collect()
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;
    use crate::math::Vec3;
    use crate::model::Aabb;
    use crate::reference;
    use alloc::vec;

    pub fn open_env() -> Environment {
        Environment::empty(Aabb::new(Vec3::new(-5.0, -5.0, -5.0), Vec3::new(5.0, 5.0, 5.0)))
    }

    pub fn q(x: f64, y: f64, z: f64) -> Configuration {
        Configuration(vec![x, y, z])
    }

    /// Two sphere-bots swapping ends of a 2 m segment.
    pub fn crossing(seed: u64) -> PlanningProblem {
        let bots = vec![reference::sphere_bot(), reference::sphere_bot()];
        PlanningProblem::new(bots, open_env(), vec![q(-1.0, 0.0, 0.0), q(1.0, 0.0, 0.0)], vec![q(1.0, 0.0, 0.0), q(-1.0, 0.0, 0.0)], 60.0, seed)
            .unwrap()
    }

    pub fn assert_sound(problem: &PlanningProblem, outcome: &PlanOutcome) {
        let sol = outcome.solution.as_ref().expect("planner succeeded");
        assert_eq!(sol.paths.len(), problem.robot_count());
        for (r, p) in sol.paths.iter().enumerate() {
            assert_eq!(p.robot, r);
            assert_eq!(p.first(), &problem.starts[r]);
            assert_eq!(p.last(), &problem.goals[r]);
            assert!(p.respects_step_bound(&problem.robots[r]));
        }
        assert!(crate::validation::oracle_validate(&problem.robots, &sol.paths, &problem.env));
        assert_eq!(crate::validation::oracle_first_conflict(&problem.robots, &sol.paths), None);
    }
}

#[cfg(test)]
mod tests {
    use super::testutil::*;
    use super::*;
    use crate::reference;
    use crate::validation::MotValStrategy;
    use alloc::vec;

    #[test]
    fn start_in_collision_rejected() {
        let bots = vec![reference::sphere_bot(), reference::sphere_bot()];
        let err = PlanningProblem::new(bots, open_env(), vec![q(0.0, 0.0, 0.0), q(0.1, 0.0, 0.0)], vec![q(1.0, 0.0, 0.0), q(-1.0, 0.0, 0.0)], 1.0, 0)
            .unwrap_err();
        assert_eq!(err, ProblemError::Overlap { i: 0, j: 1, which: "start" });
    }

    #[test]
    fn planner_names_round_trip() {
        for p in Planner::ALL {
            assert_eq!(Planner::from_name(p.name()), Some(p));
        }
    }

    #[test]
    fn every_planner_solves_crossing_and_is_backend_independent() {
        for planner in Planner::ALL {
            for seed in 0..2 {
                let problem = crossing(seed);
                let batched = PlannerConfig::default();
                let scalar = PlannerConfig { backend: Backend::Scalar, ..batched };
                let a = planner.plan(&problem, &batched, &NoClock);
                assert_sound(&problem, &a);
                let b = planner.plan(&problem, &scalar, &NoClock);
                assert_eq!(a.stats.iterations, b.stats.iterations, "{planner}");
                assert_eq!(a.solution.as_ref().unwrap().paths, b.solution.as_ref().unwrap().paths, "{planner}");
                let wide = PlannerConfig { backend: Backend::Batched(MotValStrategy { batch_size: 32, ..Default::default() }), ..batched };
                let c = planner.plan(&problem, &wide, &NoClock);
                assert_eq!(a.stats.iterations, c.stats.iterations, "{planner}");
                assert_eq!(a.solution.unwrap().paths, c.solution.unwrap().paths, "{planner}");
            }
        }
    }

    #[test]
    fn trivial_single_robot_start_is_goal() {
        let problem =
            PlanningProblem::new(vec![reference::arm3()], open_env(), vec![Configuration(vec![0.0; 3])], vec![Configuration(vec![0.0; 3])], 1.0, 3)
                .unwrap();
        for planner in Planner::ALL {
            let out = planner.plan(&problem, &PlannerConfig::default(), &NoClock);
            let sol = out.solution.expect("trivial");
            assert_eq!(sol.paths[0].len(), 1, "{planner}");
        }
    }

    #[test]
    fn expired_clock_reports_timeout() {
        struct Late;
        impl Clock for Late {
            fn elapsed(&self) -> f64 {
                1e9
            }
        }
        let problem = crossing(0);
        for planner in Planner::ALL {
            let out = planner.plan(&problem, &PlannerConfig::default(), &Late);
            assert_eq!(out.failure, Some(Failure::Timeout), "{planner}");
            assert!(!out.stats.success);
        }
    }
}
