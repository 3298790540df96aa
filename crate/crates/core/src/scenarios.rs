//! Seeded generators for the three evaluation scenario families.
//!
//! * Cage: two facing rows of arm7 robots sharing a boxed workspace.
//! * Cross: two facing lines of sphere-bots that swap places.
//! * Heterogeneous: arms lining a corridor through which two groups of
//!   sphere-bots swap ends.
//!
//! Robots are listed arms first, which is also the default priority order.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::collision::{sphere_sets_collide, spheres_hit_environment, EffortCounter};
use crate::kinematics::{fk_scalar, Frame, SphereSet};
use crate::math::{Quat, Vec3};
use crate::model::{Aabb, Configuration, Environment, Obstacle, Path, Pose, RobotSpec};
use crate::planners::{PlanningProblem, ProblemError};
use crate::reference;
use crate::validation::Backend;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ScenarioFamily {
    Cage,
    Cross,
    Heterogeneous,
}

impl ScenarioFamily {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioFamily::Cage => "cage",
            ScenarioFamily::Cross => "cross",
            ScenarioFamily::Heterogeneous => "heterogeneous",
        }
    }

    pub fn from_name(name: &str) -> Option<ScenarioFamily> {
        [ScenarioFamily::Cage, ScenarioFamily::Cross, ScenarioFamily::Heterogeneous].into_iter().find(|f| f.name() == name)
    }
}

/// Layout dimensions. Distances in metres.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Geometry {
    /// Distance between facing arm rows, as a multiple of arm reach.
    pub row_spacing: f64,
    /// Spacing of arm bases within a row.
    pub arm_spacing: f64,
    /// Corridor width as a multiple of the sphere-bot diameter.
    pub corridor_width: f64,
    /// Cross line spacing as a multiple of the sphere-bot diameter.
    pub line_spacing: f64,
    /// Distance of each cross line from the origin.
    pub cross_half_length: f64,
    /// Sampling attempts per configuration before giving up.
    pub max_retries: usize,
}

impl Default for Geometry {
    fn default() -> Self {
        Geometry {
            row_spacing: 1.2,
            arm_spacing: 0.8,
            corridor_width: 4.0,
            line_spacing: 4.0,
            cross_half_length: 2.0,
            max_retries: 20_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("{0} needs at least one robot of the required kind")]
    NoRobots(&'static str),
    #[error("no valid configuration for robot {robot} after {tries} samples")]
    Sampling { robot: usize, tries: usize },
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioSpec {
    pub family: ScenarioFamily,
    pub arms: usize,
    pub spheres: usize,
    pub seed: u64,
    pub geometry: Geometry,
    pub time_limit: f64,
}

impl ScenarioSpec {
    pub fn new(family: ScenarioFamily, arms: usize, spheres: usize, seed: u64) -> Self {
        ScenarioSpec { family, arms, spheres, seed, geometry: Geometry::default(), time_limit: 60.0 }
    }

    /// Short identifier such as `cage-4` or `heterogeneous-2-4`.
    pub fn id(&self) -> String {
        match self.family {
            ScenarioFamily::Cage => format!("cage-{}", self.arms),
            ScenarioFamily::Cross => format!("cross-{}", self.spheres),
            ScenarioFamily::Heterogeneous => format!("heterogeneous-{}-{}", self.arms, self.spheres),
        }
    }

    pub fn generate(&self) -> Result<PlanningProblem, ScenarioError> {
        let layout = match self.family {
            ScenarioFamily::Cage => cage_layout(self)?,
            ScenarioFamily::Cross => cross_layout(self)?,
            ScenarioFamily::Heterogeneous => heterogeneous_layout(self)?,
        };
        Ok(PlanningProblem::new(layout.robots, layout.env, layout.starts, layout.goals, self.time_limit, self.seed)?)
    }
}

pub fn gen_cage(n_arms: usize, seed: u64) -> Result<PlanningProblem, ScenarioError> {
    ScenarioSpec::new(ScenarioFamily::Cage, n_arms, 0, seed).generate()
}

pub fn gen_cross(n_spheres: usize, seed: u64) -> Result<PlanningProblem, ScenarioError> {
    ScenarioSpec::new(ScenarioFamily::Cross, 0, n_spheres, seed).generate()
}

pub fn gen_heterogeneous(n_arms: usize, n_spheres: usize, seed: u64) -> Result<PlanningProblem, ScenarioError> {
    ScenarioSpec::new(ScenarioFamily::Heterogeneous, n_arms, n_spheres, seed).generate()
}

struct Layout {
    robots: Vec<RobotSpec>,
    env: Environment,
    starts: Vec<Configuration>,
    goals: Vec<Configuration>,
}

fn rng_for(spec: &ScenarioSpec) -> ChaCha8Rng {
    let tag = match spec.family {
        ScenarioFamily::Cage => 0x6361_6765,
        ScenarioFamily::Cross => 0x6372_6f73,
        ScenarioFamily::Heterogeneous => 0x6865_7465,
    };
    ChaCha8Rng::seed_from_u64(spec.seed ^ (tag << 32))
}

fn yawed(robot: &RobotSpec, at: Vec3, yaw: f64) -> RobotSpec {
    robot.with_base_pose(Pose::new(at, Quat::from_axis_angle(Vec3::new(0.0, 0.0, 1.0), yaw)))
}

/// Two rows of arm bases at `y = -/+ half_gap`, the second row turned to
/// face the first. Returns the robots and the x-extent of the rows.
fn arm_rows(count: usize, half_gap: f64, spacing: f64) -> (Vec<RobotSpec>, f64) {
    let arm = reference::arm7();
    let per_row = count.div_ceil(2);
    let x0 = -0.5 * spacing * (per_row.saturating_sub(1)) as f64;
    let mut robots = Vec::with_capacity(count);
    for k in 0..count {
        let (row, slot) = (k % 2, k / 2);
        let x = x0 + spacing * slot as f64;
        let (y, yaw) = if row == 0 { (-half_gap, 0.0) } else { (half_gap, PI) };
        robots.push(yawed(&arm, Vec3::new(x, y, 0.0), yaw));
    }
    (robots, -x0)
}

/// Rejection-samples a configuration for `robot` that is obstacle- and
/// self-collision-free, clear of `placed`, and accepted by `keep`.
fn sample_free(
    rng: &mut ChaCha8Rng,
    robot: &RobotSpec,
    index: usize,
    env: &Environment,
    placed: &[SphereSet],
    max_retries: usize,
    keep: impl Fn(&SphereSet) -> bool,
) -> Result<(Configuration, SphereSet), ScenarioError> {
    for _ in 0..max_retries {
        let q = Configuration(robot.joints().iter().map(|j| rng.gen_range(j.limits[0]..j.limits[1])).collect());
        let set = fk_scalar(robot, &q, Frame::World);
        if keep(&set) && !spheres_hit_environment(robot, &set, env) && !placed.iter().any(|p| sphere_sets_collide(p, &set)) {
            return Ok((q, set));
        }
    }
    Err(ScenarioError::Sampling { robot: index, tries: max_retries })
}

fn end_effector(set: &SphereSet) -> Vec3 {
    *set.centers.last().expect("robots have spheres")
}

fn cage_layout(spec: &ScenarioSpec) -> Result<Layout, ScenarioError> {
    if spec.arms == 0 {
        return Err(ScenarioError::NoRobots("cage"));
    }
    let g = &spec.geometry;
    let reach = reference::arm7().reach();
    let half_gap = 0.5 * g.row_spacing * reach;
    let (robots, half_len) = arm_rows(spec.arms, half_gap, g.arm_spacing);
    let (xl, xh) = (-half_len - 0.4, half_len + 0.4);
    let ceiling = 1.25;
    let inner = half_gap - 0.3;
    let post = |x: f64, y: f64| Obstacle::Box(Aabb::new(Vec3::new(x - 0.02, y - 0.02, 0.0), Vec3::new(x + 0.02, y + 0.02, ceiling)));
    let obstacles = vec![
        Obstacle::Box(Aabb::new(Vec3::new(xl, -inner, -0.05), Vec3::new(xh, inner, 0.02))),
        Obstacle::Box(Aabb::new(Vec3::new(xl, -half_gap - 0.3, ceiling), Vec3::new(xh, half_gap + 0.3, ceiling + 0.05))),
        post(xl, -half_gap - 0.3),
        post(xl, half_gap + 0.3),
        post(xh, -half_gap - 0.3),
        post(xh, half_gap + 0.3),
    ];
    let bounds = Aabb::new(Vec3::new(xl - 1.0, -half_gap - 1.5, -0.5), Vec3::new(xh + 1.0, half_gap + 1.5, ceiling + 0.5));
    let env = Environment::new(obstacles, bounds).expect("cage obstacles lie in bounds");
    let cage = Aabb::new(Vec3::new(xl + 0.1, -inner, 0.15), Vec3::new(xh - 0.1, inner, ceiling - 0.2));
    let mut rng = rng_for(spec);
    let mut sides = [Vec::new(), Vec::new()];
    for side in sides.iter_mut() {
        let mut placed = Vec::new();
        for (r, robot) in robots.iter().enumerate() {
            let (q, set) = sample_free(&mut rng, robot, r, &env, &placed, g.max_retries, |s| cage.contains(end_effector(s)))?;
            placed.push(set);
            side.push(q);
        }
    }
    let [starts, goals] = sides;
    Ok(Layout { robots, env, starts, goals })
}

fn sphere_at(p: Vec3) -> Configuration {
    Configuration(vec![p.x, p.y, p.z])
}

fn cross_layout(spec: &ScenarioSpec) -> Result<Layout, ScenarioError> {
    let n = spec.spheres;
    if n == 0 {
        return Err(ScenarioError::NoRobots("cross"));
    }
    let g = &spec.geometry;
    let spacing = g.line_spacing * 2.0 * reference::SPHERE_BOT_RADIUS;
    let rows = n.div_ceil(2);
    let mut rng = rng_for(spec);
    let lateral: Vec<(f64, f64)> = (0..rows)
        .map(|k| (spacing * (k as f64 - 0.5 * (rows - 1) as f64), rng.gen_range(-0.1..0.1)))
        .collect();
    let mut starts = Vec::with_capacity(n);
    let mut goals = Vec::with_capacity(n);
    for k in 0..n {
        let (y, z) = lateral[k / 2];
        let side = if k % 2 == 0 { -1.0 } else { 1.0 };
        starts.push(sphere_at(Vec3::new(side * g.cross_half_length, y, z)));
        goals.push(sphere_at(Vec3::new(-side * g.cross_half_length, y, z)));
    }
    let extent = g.cross_half_length + 1.0 + spacing * rows as f64;
    let robots = vec![reference::sphere_bot_with(reference::SPHERE_BOT_RADIUS, extent); n];
    let env = Environment::empty(Aabb::new(Vec3::new(-extent, -extent, -extent), Vec3::new(extent, extent, extent)));
    Ok(Layout { robots, env, starts, goals })
}

fn heterogeneous_layout(spec: &ScenarioSpec) -> Result<Layout, ScenarioError> {
    if spec.arms + spec.spheres == 0 {
        return Err(ScenarioError::NoRobots("heterogeneous"));
    }
    let g = &spec.geometry;
    let diameter = 2.0 * reference::SPHERE_BOT_RADIUS;
    let half_width = 0.5 * g.corridor_width * diameter;
    let (arms, half_len) = arm_rows(spec.arms, half_width + 0.3, g.arm_spacing);
    let reach = reference::arm7().reach();
    let corridor_top = 0.2 + reach * 0.8;
    let corridor = Aabb::new(Vec3::new(-half_len - 0.3, -half_width, 0.2), Vec3::new(half_len + 0.3, half_width, corridor_top));

    // sphere groups stand in y-z grids beyond each corridor mouth
    let pitch = 1.4 * diameter;
    let per_side = spec.spheres.div_ceil(2);
    let cols = (((2.0 * half_width) / pitch) as usize + 1).max(1);
    let end = half_len + 1.2;
    let slot = |k: usize| {
        let (c, r) = (k % cols, k / cols);
        (pitch * (c as f64 - 0.5 * (cols - 1) as f64), 0.35 + pitch * r as f64)
    };
    let mut sphere_starts = Vec::with_capacity(spec.spheres);
    let mut sphere_goals = Vec::with_capacity(spec.spheres);
    for k in 0..spec.spheres {
        let (y, z) = slot(k / 2);
        let side = if k % 2 == 0 { -1.0 } else { 1.0 };
        sphere_starts.push(sphere_at(Vec3::new(side * end, y, z)));
        sphere_goals.push(sphere_at(Vec3::new(-side * end, y, z)));
    }
    let extent = end + 1.0 + pitch * per_side as f64;
    let bot = reference::sphere_bot_with(reference::SPHERE_BOT_RADIUS, extent);
    let env = Environment::empty(Aabb::new(Vec3::new(-extent, -extent, -1.0), Vec3::new(extent, extent, extent)));

    let sphere_sets = |qs: &[Configuration]| qs.iter().map(|q| fk_scalar(&bot, q, Frame::World)).collect::<Vec<_>>();
    let mut rng = rng_for(spec);
    let mut placed_starts = sphere_sets(&sphere_starts);
    let mut placed_goals = sphere_sets(&sphere_goals);
    let mut arm_starts = Vec::with_capacity(arms.len());
    let mut arm_goals = Vec::with_capacity(arms.len());
    for (r, arm) in arms.iter().enumerate() {
        let (q, set) = sample_free(&mut rng, arm, r, &env, &placed_starts, g.max_retries, |_| true)?;
        placed_starts.push(set);
        arm_starts.push(q);
        let (q, set) = sample_free(&mut rng, arm, r, &env, &placed_goals, g.max_retries, |s| corridor.contains(end_effector(s)))?;
        placed_goals.push(set);
        arm_goals.push(q);
    }
    let mut robots = arms;
    robots.extend(core::iter::repeat_n(bot, spec.spheres));
    arm_starts.extend(sphere_starts);
    arm_goals.extend(sphere_goals);
    Ok(Layout { robots, env, starts: arm_starts, goals: arm_goals })
}

/// Counts distinct conflicting pairs along `paths`: each earliest conflict's
/// pair is set aside and the rest rescanned until no conflict remains.
pub fn count_conflicting_pairs(robots: &[RobotSpec], paths: &[Path], backend: Backend) -> Vec<(usize, usize)> {
    let mut remaining: Vec<Path> = paths.to_vec();
    let mut pairs = Vec::new();
    let mut effort = EffortCounter::default();
    while let Some(c) = backend.first_conflict(robots, &remaining, &mut effort).expect("paths match robots") {
        pairs.push((c.i, c.j));
        remaining.retain(|p| p.robot != c.i && p.robot != c.j);
    }
    pairs
}
