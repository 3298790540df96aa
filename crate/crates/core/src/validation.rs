//! Multi-robot motion validation and first-conflict search over synchronized
//! paths, plus the sequential double-precision validators used as the
//! scalar backend and as ground truth.

use alloc::vec;
use alloc::vec::Vec;

use crate::collision::{
    cc_env_cached, cc_robot_robot, sphere_sets_collide, spheres_hit_environment, CollisionError, EffortCounter, Scan,
};
use crate::kinematics::{fk_scalar, spheres_fk, ConfigurationBatch, Frame, SphereBatch, TransformedEnvironmentCache, MAX_WIDTH};
use crate::model::{horizon, Environment, Path, RobotSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PackingStrategy {
    /// Lanes spread evenly over the motion: `b, b + nb, b + 2 nb, ...`.
    Rake,
    /// Consecutive timesteps: `b * W, b * W + 1, ...`.
    Linear,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CheckOrder {
    /// Every robot-obstacle batch before any robot-robot batch.
    Hierarchical,
    /// Robot-obstacle then robot-robot checks for each batch in turn.
    Combined,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MotValStrategy {
    pub order: CheckOrder,
    pub packing: PackingStrategy,
    pub check_environment: bool,
    pub batch_size: usize,
}

impl Default for MotValStrategy {
    fn default() -> Self {
        MotValStrategy { order: CheckOrder::Hierarchical, packing: PackingStrategy::Rake, check_environment: true, batch_size: 8 }
    }
}

impl MotValStrategy {
    pub fn new(order: CheckOrder, packing: PackingStrategy, batch_size: usize) -> Self {
        MotValStrategy { order, packing, check_environment: true, batch_size }
    }

    /// All four order/packing combinations at the given width.
    pub fn all(batch_size: usize) -> [MotValStrategy; 4] {
        [
            MotValStrategy::new(CheckOrder::Hierarchical, PackingStrategy::Rake, batch_size),
            MotValStrategy::new(CheckOrder::Hierarchical, PackingStrategy::Linear, batch_size),
            MotValStrategy::new(CheckOrder::Combined, PackingStrategy::Rake, batch_size),
            MotValStrategy::new(CheckOrder::Combined, PackingStrategy::Linear, batch_size),
        ]
    }

    pub fn with_environment(mut self, check_environment: bool) -> Self {
        self.check_environment = check_environment;
        self
    }
}

/// Earliest robot-robot collision: robots `i < j` overlap at timestep `t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Conflict {
    pub t: usize,
    pub i: usize,
    pub j: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ValidationError {
    #[error("batch index {b} out of range (num_batches = {num_batches})")]
    BatchOutOfRange { b: usize, num_batches: usize },
    #[error("batch size {0} must be a power of two in 1..=64")]
    BadBatchSize(usize),
    #[error("path refers to robot {robot} but the team has {team} robots")]
    UnknownRobot { robot: usize, team: usize },
    #[error("environment cache covers {cache} robots, team has {team}")]
    CacheMismatch { cache: usize, team: usize },
    #[error("path for robot {robot} has {got} DOF, expected {dof}")]
    DofMismatch { robot: usize, dof: usize, got: usize },
    #[error(transparent)]
    Collision(#[from] CollisionError),
}

pub fn num_batches(t_max: usize, batch_size: usize) -> usize {
    t_max.div_ceil(batch_size)
}

/// Timesteps held by batch `b` under `strategy`.
pub fn batch_timesteps(b: usize, strategy: PackingStrategy, num_batches: usize, batch_size: usize) -> Vec<usize> {
    (0..batch_size)
        .map(|k| match strategy {
            PackingStrategy::Rake => b + k * num_batches,
            PackingStrategy::Linear => b * batch_size + k,
        })
        .collect()
}

/// Packs batch `b` of `path`. Timesteps past the path end hold the final
/// waypoint (the robot waits at its goal); timesteps `>= t_max` are inactive.
pub fn pack_cfg_batch(
    path: &Path,
    b: usize,
    strategy: PackingStrategy,
    num_batches: usize,
    batch_size: usize,
    t_max: usize,
) -> Result<ConfigurationBatch, ValidationError> {
    check_batch_size(batch_size)?;
    if b >= num_batches {
        return Err(ValidationError::BatchOutOfRange { b, num_batches });
    }
    let ts = batch_timesteps(b, strategy, num_batches, batch_size);
    Ok(ConfigurationBatch::from_timesteps(path, path.first().len(), &ts, t_max))
}

fn check_batch_size(w: usize) -> Result<(), ValidationError> {
    if !w.is_power_of_two() || w > MAX_WIDTH {
        return Err(ValidationError::BadBatchSize(w));
    }
    Ok(())
}

fn check_team(robots: &[RobotSpec], paths: &[&Path], cache: Option<&TransformedEnvironmentCache>) -> Result<(), ValidationError> {
    if let Some(c) = cache {
        if c.robot_count() != robots.len() {
            return Err(ValidationError::CacheMismatch { cache: c.robot_count(), team: robots.len() });
        }
    }
    for p in paths {
        let robot = robots.get(p.robot).ok_or(ValidationError::UnknownRobot { robot: p.robot, team: robots.len() })?;
        if p.first().len() != robot.dof() {
            return Err(ValidationError::DofMismatch { robot: p.robot, dof: robot.dof(), got: p.first().len() });
        }
    }
    Ok(())
}

/// Shared inputs for one validation call.
struct Sweep<'a> {
    robots: &'a [RobotSpec],
    paths: &'a [&'a Path],
    env: &'a Environment,
    cache: &'a TransformedEnvironmentCache,
    strategy: MotValStrategy,
    t_max: usize,
    num_batches: usize,
}

impl Sweep<'_> {
    fn pack(&self, i: usize, b: usize) -> ConfigurationBatch {
        let ts = batch_timesteps(b, self.strategy.packing, self.num_batches, self.strategy.batch_size);
        let p = self.paths[i];
        ConfigurationBatch::from_timesteps(p, p.first().len(), &ts, self.t_max)
    }

    /// Robot-obstacle and self-collision check of path `i` for batch `b`.
    fn env_collides(&self, i: usize, b: usize, effort: &mut EffortCounter) -> Result<bool, ValidationError> {
        let p = self.paths[i];
        let robot = &self.robots[p.robot];
        let batch = self.pack(i, b);
        let spheres = spheres_fk(robot, &batch, Frame::Robot);
        let v = cc_env_cached(&spheres, robot, self.cache, Scan::AnyHit)?;
        effort.env_performed += 1;
        if v.any_collision() {
            return Ok(true);
        }
        for lane in v.uncertain.iter() {
            let q = p.at(batch.timesteps()[lane]);
            if spheres_hit_environment(robot, &fk_scalar(robot, q, Frame::World), self.env) {
                return Ok(true);
            }
        }
        Ok(false)
    }

    fn world_spheres(&self, slots: &mut [Option<(ConfigurationBatch, SphereBatch)>], i: usize, b: usize) {
        if slots[i].is_none() {
            let batch = self.pack(i, b);
            let spheres = spheres_fk(&self.robots[self.paths[i].robot], &batch, Frame::World);
            slots[i] = Some((batch, spheres));
        }
    }

    fn pair_collides(
        &self,
        slots: &mut [Option<(ConfigurationBatch, SphereBatch)>],
        i: usize,
        j: usize,
        b: usize,
        effort: &mut EffortCounter,
    ) -> Result<bool, ValidationError> {
        self.world_spheres(slots, i, b);
        self.world_spheres(slots, j, b);
        let (Some((bi, si)), Some((_, sj))) = (&slots[i], &slots[j]) else { unreachable!() };
        let v = cc_robot_robot(si, sj, Scan::AnyHit)?;
        effort.rr_performed += 1;
        if v.any_collision() {
            return Ok(true);
        }
        for lane in v.uncertain.iter() {
            if exact_pair(self.robots, self.paths[i], self.paths[j], bi.timesteps()[lane]) {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

fn exact_pair(robots: &[RobotSpec], a: &Path, b: &Path, t: usize) -> bool {
    let (ra, rb) = (&robots[a.robot], &robots[b.robot]);
    sphere_sets_collide(&fk_scalar(ra, a.at(t), Frame::World), &fk_scalar(rb, b.at(t), Frame::World))
}

fn all_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut v = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            v.push((i, j));
        }
    }
    v
}

fn motval_impl(
    sweep: &Sweep<'_>,
    env_members: &[usize],
    pairs: &[(usize, usize)],
    effort: &mut EffortCounter,
) -> Result<bool, ValidationError> {
    let nb = sweep.num_batches;
    let check_env = sweep.strategy.check_environment;
    if check_env {
        effort.env_total += (env_members.len() * nb) as u64;
    }
    effort.rr_total += (pairs.len() * nb) as u64;

    if sweep.strategy.order == CheckOrder::Hierarchical && check_env {
        for b in 0..nb {
            for &i in env_members {
                if sweep.env_collides(i, b, effort)? {
                    return Ok(false);
                }
            }
        }
    }
    let mut slots: Vec<Option<(ConfigurationBatch, SphereBatch)>> = vec![None; sweep.paths.len()];
    for b in 0..nb {
        if sweep.strategy.order == CheckOrder::Combined && check_env {
            for &i in env_members {
                if sweep.env_collides(i, b, effort)? {
                    return Ok(false);
                }
            }
        }
        slots.iter_mut().for_each(|s| *s = None);
        for &(i, j) in pairs {
            if sweep.pair_collides(&mut slots, i, j, b, effort)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Returns `true` iff at every timestep `t < max |p_i|` every robot (waiting at
/// its goal once its path ends) is free of obstacle, self and robot-robot
/// collision. `paths[k].robot` indexes `robots` and `cache`.
pub fn motion_validation(
    robots: &[RobotSpec],
    paths: &[Path],
    env: &Environment,
    cache: &TransformedEnvironmentCache,
    strategy: MotValStrategy,
    effort: &mut EffortCounter,
) -> Result<bool, ValidationError> {
    let refs: Vec<&Path> = paths.iter().collect();
    check_batch_size(strategy.batch_size)?;
    check_team(robots, &refs, Some(cache))?;
    let t_max = horizon(paths);
    let sweep = Sweep { robots, paths: &refs, env, cache, strategy, t_max, num_batches: num_batches(t_max, strategy.batch_size) };
    let members: Vec<usize> = (0..paths.len()).collect();
    motval_impl(&sweep, &members, &all_pairs(paths.len()), effort)
}

/// Validation of some robots' motions (`movers`) against already-fixed
/// motions: robot-obstacle checks run for movers only, and the robot-robot
/// sweep covers mover pairs and mover-versus-fixed pairs, never fixed-fixed.
/// The movers' longest path sets the horizon; fixed paths are sampled over
/// the same timesteps (all paths share timestep 0).
pub fn motion_validation_group(
    robots: &[RobotSpec],
    movers: &[Path],
    fixed: &[Path],
    env: &Environment,
    cache: &TransformedEnvironmentCache,
    strategy: MotValStrategy,
    effort: &mut EffortCounter,
) -> Result<bool, ValidationError> {
    let refs: Vec<&Path> = movers.iter().chain(fixed).collect();
    check_batch_size(strategy.batch_size)?;
    check_team(robots, &refs, Some(cache))?;
    let t_max = horizon(movers);
    let sweep = Sweep { robots, paths: &refs, env, cache, strategy, t_max, num_batches: num_batches(t_max, strategy.batch_size) };
    let members: Vec<usize> = (0..movers.len()).collect();
    let pairs: Vec<(usize, usize)> =
        (0..movers.len()).flat_map(|i| (i + 1..refs.len()).map(move |j| (i, j))).collect();
    motval_impl(&sweep, &members, &pairs, effort)
}

/// One robot's motion against higher-priority motions: the outer robot-robot
/// loop is fixed to `subject` and the inner loop runs over `others`.
pub fn motion_validation_subject(
    robots: &[RobotSpec],
    subject: &Path,
    others: &[Path],
    env: &Environment,
    cache: &TransformedEnvironmentCache,
    strategy: MotValStrategy,
    effort: &mut EffortCounter,
) -> Result<bool, ValidationError> {
    motion_validation_group(robots, core::slice::from_ref(subject), others, env, cache, strategy, effort)
}

/// Earliest robot-robot conflict over `paths` (obstacles are not considered).
/// Batches are packed linearly so every batch before the one holding the
/// conflict is certified free; within a batch pairs are scanned in `(i, j)`
/// order and a later pair only replaces the candidate when strictly earlier.
pub fn find_first_conflict(
    robots: &[RobotSpec],
    paths: &[Path],
    batch_size: usize,
    effort: &mut EffortCounter,
) -> Result<Option<Conflict>, ValidationError> {
    check_batch_size(batch_size)?;
    let refs: Vec<&Path> = paths.iter().collect();
    check_team(robots, &refs, None)?;
    let t_max = horizon(paths);
    let nb = num_batches(t_max, batch_size);
    let pairs = all_pairs(paths.len());
    effort.rr_total += (pairs.len() * nb) as u64;
    let mut slots: Vec<Option<SphereBatch>> = vec![None; paths.len()];
    for b in 0..nb {
        let t_batch_start = b * batch_size;
        let ts = batch_timesteps(b, PackingStrategy::Linear, nb, batch_size);
        slots.iter_mut().for_each(|s| *s = None);
        let mut best: Option<Conflict> = None;
        for &(i, j) in &pairs {
            for k in [i, j] {
                if slots[k].is_none() {
                    let p = &paths[k];
                    let batch = ConfigurationBatch::from_timesteps(p, p.first().len(), &ts, t_max);
                    slots[k] = Some(spheres_fk(&robots[p.robot], &batch, Frame::World));
                }
            }
            let (Some(si), Some(sj)) = (&slots[i], &slots[j]) else { unreachable!() };
            let v = cc_robot_robot(si, sj, Scan::Full)?;
            effort.rr_performed += 1;
            let candidates = v.hits.0 | v.uncertain.0;
            let lane = crate::kinematics::LaneMask(candidates)
                .iter()
                .find(|&lane| v.hits.contains(lane) || exact_pair(robots, &paths[i], &paths[j], t_batch_start + lane));
            if let Some(lane) = lane {
                let t = t_batch_start + lane;
                if best.is_none_or(|c| c.t > t) {
                    let (ri, rj) = (paths[i].robot, paths[j].robot);
                    best = Some(Conflict { t, i: ri.min(rj), j: ri.max(rj) });
                }
            }
        }
        if best.is_some() {
            return Ok(best);
        }
    }
    Ok(None)
}

/// Sequential per-timestep scan in double precision. Counts one call per
/// robot (environment) or robot pair per timestep.
pub fn oracle_validate_counted(
    robots: &[RobotSpec],
    paths: &[Path],
    env: &Environment,
    check_environment: bool,
    effort: &mut EffortCounter,
) -> bool {
    let t_max = horizon(paths);
    let n = paths.len() as u64;
    if check_environment {
        effort.env_total += n * t_max as u64;
    }
    effort.rr_total += n * n.saturating_sub(1) / 2 * t_max as u64;
    let mut sets = Vec::with_capacity(paths.len());
    for t in 0..t_max {
        sets.clear();
        for p in paths {
            let robot = &robots[p.robot];
            let s = fk_scalar(robot, p.at(t), Frame::World);
            if check_environment {
                effort.env_performed += 1;
                if spheres_hit_environment(robot, &s, env) {
                    return false;
                }
            }
            sets.push(s);
        }
        for i in 0..sets.len() {
            for j in i + 1..sets.len() {
                effort.rr_performed += 1;
                if sphere_sets_collide(&sets[i], &sets[j]) {
                    return false;
                }
            }
        }
    }
    true
}

pub fn oracle_validate(robots: &[RobotSpec], paths: &[Path], env: &Environment) -> bool {
    oracle_validate_counted(robots, paths, env, true, &mut EffortCounter::default())
}

/// Sequential scalar counterpart of [`motion_validation_group`].
pub fn oracle_validate_group(
    robots: &[RobotSpec],
    movers: &[Path],
    fixed: &[Path],
    env: &Environment,
    check_environment: bool,
    effort: &mut EffortCounter,
) -> bool {
    let t_max = horizon(movers);
    let (m, f) = (movers.len() as u64, fixed.len() as u64);
    if check_environment {
        effort.env_total += m * t_max as u64;
    }
    effort.rr_total += (m * m.saturating_sub(1) / 2 + m * f) * t_max as u64;
    for t in 0..t_max {
        let sets: Vec<_> = movers.iter().chain(fixed).map(|p| fk_scalar(&robots[p.robot], p.at(t), Frame::World)).collect();
        for (i, p) in movers.iter().enumerate() {
            if check_environment {
                effort.env_performed += 1;
                if spheres_hit_environment(&robots[p.robot], &sets[i], env) {
                    return false;
                }
            }
        }
        for i in 0..movers.len() {
            for j in i + 1..sets.len() {
                effort.rr_performed += 1;
                if sphere_sets_collide(&sets[i], &sets[j]) {
                    return false;
                }
            }
        }
    }
    true
}

pub fn oracle_first_conflict_counted(robots: &[RobotSpec], paths: &[Path], effort: &mut EffortCounter) -> Option<Conflict> {
    let t_max = horizon(paths);
    let n = paths.len() as u64;
    effort.rr_total += n * n.saturating_sub(1) / 2 * t_max as u64;
    for t in 0..t_max {
        let sets: Vec<_> = paths.iter().map(|p| fk_scalar(&robots[p.robot], p.at(t), Frame::World)).collect();
        for i in 0..sets.len() {
            for j in i + 1..sets.len() {
                effort.rr_performed += 1;
                if sphere_sets_collide(&sets[i], &sets[j]) {
                    let (ri, rj) = (paths[i].robot, paths[j].robot);
                    return Some(Conflict { t, i: ri.min(rj), j: ri.max(rj) });
                }
            }
        }
    }
    None
}

pub fn oracle_first_conflict(robots: &[RobotSpec], paths: &[Path]) -> Option<Conflict> {
    oracle_first_conflict_counted(robots, paths, &mut EffortCounter::default())
}

/// Validity backend used by the planners: the batched primitives or the
/// sequential scalar scan. Both return identical verdicts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    Batched(MotValStrategy),
    Scalar,
}

impl Default for Backend {
    fn default() -> Self {
        Backend::Batched(MotValStrategy::default())
    }
}

impl Backend {
    pub fn name(&self) -> &'static str {
        match self {
            Backend::Batched(_) => "batched",
            Backend::Scalar => "scalar",
        }
    }

    pub fn motion_valid(
        &self,
        robots: &[RobotSpec],
        paths: &[Path],
        env: &Environment,
        cache: &TransformedEnvironmentCache,
        check_environment: bool,
        effort: &mut EffortCounter,
    ) -> Result<bool, ValidationError> {
        match *self {
            Backend::Batched(s) => motion_validation(robots, paths, env, cache, s.with_environment(check_environment), effort),
            Backend::Scalar => Ok(oracle_validate_counted(robots, paths, env, check_environment, effort)),
        }
    }

    /// `movers` against each other, the environment, and the fixed motions.
    #[allow(clippy::too_many_arguments)]
    pub fn group_valid(
        &self,
        robots: &[RobotSpec],
        movers: &[Path],
        fixed: &[Path],
        env: &Environment,
        cache: &TransformedEnvironmentCache,
        check_environment: bool,
        effort: &mut EffortCounter,
    ) -> Result<bool, ValidationError> {
        match *self {
            Backend::Batched(s) => {
                motion_validation_group(robots, movers, fixed, env, cache, s.with_environment(check_environment), effort)
            }
            Backend::Scalar => Ok(oracle_validate_group(robots, movers, fixed, env, check_environment, effort)),
        }
    }

    pub fn first_conflict(
        &self,
        robots: &[RobotSpec],
        paths: &[Path],
        effort: &mut EffortCounter,
    ) -> Result<Option<Conflict>, ValidationError> {
        match *self {
            Backend::Batched(s) => find_first_conflict(robots, paths, s.batch_size, effort),
            Backend::Scalar => Ok(oracle_first_conflict_counted(robots, paths, effort)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::build_env_cache;
    use crate::math::Vec3;
    use crate::model::{discretize_motion, Aabb, Configuration, Obstacle};
    use crate::reference;

    fn cfg(v: [f64; 3]) -> Configuration {
        Configuration(v.to_vec())
    }

    fn line(robot: usize, from: [f64; 3], to: [f64; 3], n: usize) -> Path {
        let waypoints = (0..n).map(|k| cfg(from).lerp(&cfg(to), k as f64 / (n - 1) as f64)).collect();
        Path::new(robot, waypoints).unwrap()
    }

    fn bots(n: usize, r: f64) -> Vec<RobotSpec> {
        (0..n).map(|_| reference::sphere_bot_with(r, 20.0)).collect()
    }

    fn open_env() -> Environment {
        Environment::empty(Aabb::new(Vec3::new(-20.0, -20.0, -20.0), Vec3::new(20.0, 20.0, 20.0)))
    }

    fn timesteps(b: usize, s: PackingStrategy) -> Vec<usize> {
        let path = Path::new(0, (0..16).map(|t| Configuration(vec![t as f64])).collect()).unwrap();
        let batch = pack_cfg_batch(&path, b, s, num_batches(16, 4), 4, 16).unwrap();
        (0..4).map(|k| batch.lane(k).0[0] as usize).collect()
    }

    #[test]
    fn packing_formulas() {
        assert_eq!(timesteps(0, PackingStrategy::Rake), vec![0, 4, 8, 12]);
        assert_eq!(timesteps(1, PackingStrategy::Rake), vec![1, 5, 9, 13]);
        assert_eq!(timesteps(2, PackingStrategy::Linear), vec![8, 9, 10, 11]);
        let path = Path::stationary(0, Configuration(vec![0.0]));
        assert_eq!(
            pack_cfg_batch(&path, 4, PackingStrategy::Rake, 4, 4, 16).unwrap_err(),
            ValidationError::BatchOutOfRange { b: 4, num_batches: 4 }
        );
    }

    #[test]
    fn packing_masks_beyond_horizon() {
        let path = Path::new(0, (0..10).map(|t| Configuration(vec![t as f64])).collect()).unwrap();
        let nb = num_batches(10, 4);
        let b = pack_cfg_batch(&path, 2, PackingStrategy::Rake, nb, 4, 10).unwrap();
        // rake batch 2 holds timesteps {2, 5, 8, 11}; 11 >= t_max
        assert_eq!(b.timesteps(), &[2, 5, 8, 11]);
        assert_eq!(b.active().0, 0b0111);
    }

    #[test]
    fn parallel_lines_are_valid() {
        let robots = bots(2, 1.0);
        let paths = vec![line(0, [0.0, 0.0, 0.0], [10.0, 0.0, 0.0], 11), line(1, [0.0, 10.0, 0.0], [10.0, 10.0, 0.0], 11)];
        let env = open_env();
        let cache = build_env_cache(&robots, &env);
        for s in MotValStrategy::all(8) {
            let mut e = EffortCounter::default();
            assert!(motion_validation(&robots, &paths, &env, &cache, s, &mut e).unwrap());
            assert_eq!(e.performed(), e.total_possible());
        }
        assert_eq!(find_first_conflict(&robots, &paths, 8, &mut EffortCounter::default()).unwrap(), None);
    }

    #[test]
    fn crossing_bots_conflict_at_five() {
        let robots = bots(2, 1.0);
        let paths = vec![line(0, [0.0, 0.0, 0.0], [10.0, 0.0, 0.0], 11), line(1, [10.0, 0.0, 0.0], [0.0, 0.0, 0.0], 11)];
        let env = open_env();
        let cache = build_env_cache(&robots, &env);
        // scalar oracle by hand: centers are |10 - 2t| apart
        let expected_t = (0..11).find(|&t| (10.0 - 2.0 * t as f64).abs() < 2.0).unwrap();
        assert_eq!(expected_t, 5);
        for s in MotValStrategy::all(8) {
            assert!(!motion_validation(&robots, &paths, &env, &cache, s, &mut EffortCounter::default()).unwrap());
        }
        for w in [1, 2, 4, 8, 16] {
            let got = find_first_conflict(&robots, &paths, w, &mut EffortCounter::default()).unwrap();
            assert_eq!(got, Some(Conflict { t: 5, i: 0, j: 1 }), "width {w}");
        }
        assert!(!oracle_validate(&robots, &paths, &env));
        assert_eq!(oracle_first_conflict(&robots, &paths), Some(Conflict { t: 5, i: 0, j: 1 }));
    }

    #[test]
    fn three_robot_tie_breaking() {
        let robots = bots(3, 0.5);
        // robot 0 still; robot 2 arrives at t = 3, robot 1 at t = 7
        let still = Path::new(0, vec![cfg([0.0, 0.0, 0.0]); 12]).unwrap();
        let mk = |robot: usize, hit: usize, dir: f64| {
            let wp = (0..12).map(|t| cfg([dir * (hit as f64 - t as f64).max(0.0) * 0.5 + dir * 0.5, 0.0, 0.0])).collect();
            Path::new(robot, wp).unwrap()
        };
        let paths = vec![still, mk(1, 7, 1.0), mk(2, 3, -1.0)];
        let oracle = oracle_first_conflict(&robots, &paths);
        assert_eq!(oracle, Some(Conflict { t: 3, i: 0, j: 2 }));
        let mut e = EffortCounter::default();
        assert_eq!(find_first_conflict(&robots, &paths, 4, &mut e).unwrap(), oracle);
        // conflict lies in batch window 0: exactly one window of three pairs evaluated
        assert_eq!(e.rr_performed, 3);
    }

    #[test]
    fn start_in_obstacle_fails_in_first_batch() {
        let robots = bots(2, 0.5);
        let env = Environment::new(
            vec![Obstacle::Sphere { center: Vec3::new(0.0, 0.0, 0.0), radius: 0.5 }],
            Aabb::new(Vec3::new(-20.0, -20.0, -20.0), Vec3::new(20.0, 20.0, 20.0)),
        )
        .unwrap();
        let cache = build_env_cache(&robots, &env);
        let paths = vec![line(0, [0.0, 0.0, 0.0], [10.0, 0.0, 0.0], 40), line(1, [0.0, 5.0, 0.0], [10.0, 5.0, 0.0], 40)];
        for order in [CheckOrder::Hierarchical, CheckOrder::Combined] {
            let s = MotValStrategy::new(order, PackingStrategy::Rake, 8);
            let mut e = EffortCounter::default();
            assert!(!motion_validation(&robots, &paths, &env, &cache, s, &mut e).unwrap());
            assert_eq!(e.env_performed, 1);
            assert_eq!(e.rr_performed, 0);
        }
    }

    #[test]
    fn team_mismatch_is_error() {
        let robots = bots(1, 0.5);
        let env = open_env();
        let cache = build_env_cache(&bots(2, 0.5), &env);
        let paths = vec![line(0, [0.0; 3], [1.0, 0.0, 0.0], 3)];
        assert!(matches!(
            motion_validation(&robots, &paths, &env, &cache, MotValStrategy::default(), &mut EffortCounter::default()),
            Err(ValidationError::CacheMismatch { .. })
        ));
        let stray = vec![line(3, [0.0; 3], [1.0, 0.0, 0.0], 3)];
        assert!(matches!(
            find_first_conflict(&robots, &stray, 8, &mut EffortCounter::default()),
            Err(ValidationError::UnknownRobot { .. })
        ));
    }

    #[test]
    fn subject_validation_without_others_skips_robot_robot() {
        let robots = bots(1, 0.5);
        let env = open_env();
        let cache = build_env_cache(&robots, &env);
        let p = discretize_motion(&robots[0], 0, &cfg([0.0; 3]), &cfg([3.0, 0.0, 0.0]));
        let mut e = EffortCounter::default();
        assert!(motion_validation_subject(&robots, &p, &[], &env, &cache, MotValStrategy::default(), &mut e).unwrap());
        assert_eq!(e.rr_performed, 0);
        assert_eq!(e.rr_total, 0);
    }

    fn random_paths(seed: u64, n: usize, len: usize) -> Vec<Path> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|r| {
                let a = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), 0.0];
                let b = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), 0.0];
                line(r, a, b, len - r)
            })
            .collect()
    }

    proptest::proptest! {
        #[test]
        fn packings_cover_every_timestep_once(t_max in 1usize..200, log_w in 0u32..7) {
            let w = 1usize << log_w;
            let nb = num_batches(t_max, w);
            for s in [PackingStrategy::Rake, PackingStrategy::Linear] {
                let mut all: Vec<usize> = (0..nb).flat_map(|b| batch_timesteps(b, s, nb, w)).collect();
                all.sort_unstable();
                proptest::prop_assert_eq!(all, (0..nb * w).collect::<Vec<_>>());
            }
        }

        #[test]
        fn group_and_full_validation_agree_with_oracles(seed in proptest::prelude::any::<u64>(), n in 2usize..5) {
            let robots = bots(n, 0.3);
            let env = Environment::new(
                vec![Obstacle::Sphere { center: Vec3::new(0.5, 0.5, 0.0), radius: 0.4 }],
                Aabb::new(Vec3::new(-20.0, -20.0, -20.0), Vec3::new(20.0, 20.0, 20.0)),
            ).unwrap();
            let cache = build_env_cache(&robots, &env);
            let paths = random_paths(seed, n, 12);
            let oracle = oracle_validate(&robots, &paths, &env);
            let (movers, fixed) = paths.split_at(1);
            let group_oracle = oracle_validate_group(&robots, movers, fixed, &env, true, &mut EffortCounter::default());
            for w in [1, 4, 8] {
                for s in MotValStrategy::all(w) {
                    let mut e = EffortCounter::default();
                    proptest::prop_assert_eq!(motion_validation(&robots, &paths, &env, &cache, s, &mut e).unwrap(), oracle);
                    proptest::prop_assert!(e.performed() <= e.total_possible());
                    let g = motion_validation_group(&robots, movers, fixed, &env, &cache, s, &mut EffortCounter::default()).unwrap();
                    proptest::prop_assert_eq!(g, group_oracle);
                }
                proptest::prop_assert_eq!(
                    find_first_conflict(&robots, &paths, w, &mut EffortCounter::default()).unwrap(),
                    oracle_first_conflict(&robots, &paths)
                );
            }
        }
    }
}
