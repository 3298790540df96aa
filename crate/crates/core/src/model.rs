//! Robots, environments, configurations and timestep-indexed paths.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::math::{Quat, Transform, Vec3};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("invariant violation: {what} at {path}: {reason}")]
    Invariant { what: &'static str, path: String, reason: String },
    #[error("configuration has {got} values, robot `{robot}` has {dof} DOF")]
    DofMismatch { robot: String, dof: usize, got: usize },
    #[error("path must contain at least one waypoint")]
    EmptyPath,
}

fn violation(what: &'static str, path: impl Into<String>, reason: impl Into<String>) -> ModelError {
    ModelError::Invariant { what, path: path.into(), reason: reason.into() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JointKind {
    Revolute,
    Prismatic,
}

impl JointKind {
    pub fn as_str(self) -> &'static str {
        match self {
            JointKind::Revolute => "revolute",
            JointKind::Prismatic => "prismatic",
        }
    }
}

/// Translation plus unit-quaternion rotation, the serialized form of a rigid transform.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    pub translation: Vec3,
    pub rotation: Quat,
}

impl Default for Pose {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Pose {
    pub const IDENTITY: Pose = Pose { translation: Vec3::ZERO, rotation: Quat::IDENTITY };

    pub fn new(translation: Vec3, rotation: Quat) -> Self {
        Self { translation, rotation }
    }

    pub fn from_translation(translation: Vec3) -> Self {
        Self { translation, rotation: Quat::IDENTITY }
    }

    pub fn to_transform(&self) -> Transform {
        Transform::from_quat(self.rotation, self.translation)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Joint {
    pub kind: JointKind,
    /// Unit axis in the joint frame.
    pub axis: Vec3,
    /// Fixed transform from the parent link frame to the joint frame.
    pub origin: Pose,
    pub limits: [f64; 2],
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkSphere {
    pub center: Vec3,
    pub radius: f64,
}

/// Everything needed to build a [`RobotSpec`]. Link 0 is the base link; link `k`
/// (for `k >= 1`) is the child of joint `k - 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct RobotSpecParts {
    pub name: String,
    pub joints: Vec<Joint>,
    pub base_pose: Pose,
    pub link_spheres: Vec<Vec<LinkSphere>>,
    pub self_collision_pairs: Vec<(usize, usize)>,
    pub max_step: Vec<f64>,
}

/// A serial chain with a sphere decomposition. Immutable after construction.
#[derive(Clone, Debug, PartialEq)]
pub struct RobotSpec {
    parts: RobotSpecParts,
    base: Transform,
    origins: Vec<Transform>,
    /// Flattened spheres in link order.
    spheres: Vec<LinkSphere>,
    /// `link_ranges[l]` is the slice of `spheres` owned by link `l`.
    link_ranges: Vec<(usize, usize)>,
}

impl RobotSpec {
    // negated comparisons also reject NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn new(parts: RobotSpecParts) -> Result<RobotSpec, ModelError> {
        let dof = parts.joints.len();
        if dof == 0 {
            return Err(violation("dof", "joints", "at least one joint is required"));
        }
        for (i, j) in parts.joints.iter().enumerate() {
            let n = j.axis.norm();
            if (n - 1.0).abs() > 1e-6 {
                return Err(violation("axis", format!("joints[{i}].axis"), "must be a unit vector"));
            }
            if !(j.limits[0] < j.limits[1]) {
                return Err(violation("limits", format!("joints[{i}].limits"), "lo must be < hi"));
            }
            if (j.origin.rotation.norm() - 1.0).abs() > 1e-6 {
                return Err(violation("rotation", format!("joints[{i}].origin.rotation"), "must be a unit quaternion"));
            }
        }
        if (parts.base_pose.rotation.norm() - 1.0).abs() > 1e-6 {
            return Err(violation("rotation", "base_pose.rotation", "must be a unit quaternion"));
        }
        if parts.link_spheres.len() != dof + 1 {
            return Err(violation(
                "link_spheres",
                "link_spheres",
                format!("expected {} links (base + one per joint), got {}", dof + 1, parts.link_spheres.len()),
            ));
        }
        let mut spheres = Vec::new();
        let mut link_ranges = Vec::with_capacity(dof + 1);
        for (l, link) in parts.link_spheres.iter().enumerate() {
            let start = spheres.len();
            for (s, sphere) in link.iter().enumerate() {
                if !(sphere.radius > 0.0) {
                    return Err(violation("radius", format!("link_spheres[{l}][{s}].radius"), "must be > 0"));
                }
                spheres.push(*sphere);
            }
            link_ranges.push((start, spheres.len()));
        }
        if spheres.is_empty() {
            return Err(violation("link_spheres", "link_spheres", "robot has no spheres"));
        }
        for (k, &(a, b)) in parts.self_collision_pairs.iter().enumerate() {
            if a > dof || b > dof {
                return Err(violation("self_collision_pairs", format!("self_collision_pairs[{k}]"), "link index out of range"));
            }
            if a.abs_diff(b) <= 1 {
                return Err(violation(
                    "self_collision_pairs",
                    format!("self_collision_pairs[{k}]"),
                    "adjacent or identical links may not be paired",
                ));
            }
        }
        if parts.max_step.len() != dof {
            return Err(violation("max_step", "max_step", format!("expected {dof} entries")));
        }
        for (i, &m) in parts.max_step.iter().enumerate() {
            if !(m > 0.0) {
                return Err(violation("max_step", format!("max_step[{i}]"), "must be > 0"));
            }
        }
        let base = parts.base_pose.to_transform();
        let origins = parts.joints.iter().map(|j| j.origin.to_transform()).collect();
        Ok(RobotSpec { parts, base, origins, spheres, link_ranges })
    }

    pub fn parts(&self) -> &RobotSpecParts {
        &self.parts
    }

    pub fn name(&self) -> &str {
        &self.parts.name
    }

    pub fn dof(&self) -> usize {
        self.parts.joints.len()
    }

    pub fn joints(&self) -> &[Joint] {
        &self.parts.joints
    }

    pub fn base_pose(&self) -> &Pose {
        &self.parts.base_pose
    }

    pub fn base_transform(&self) -> &Transform {
        &self.base
    }

    pub(crate) fn joint_origins(&self) -> &[Transform] {
        &self.origins
    }

    pub fn max_step(&self) -> &[f64] {
        &self.parts.max_step
    }

    pub fn self_collision_pairs(&self) -> &[(usize, usize)] {
        &self.parts.self_collision_pairs
    }

    pub fn spheres(&self) -> &[LinkSphere] {
        &self.spheres
    }

    pub fn sphere_count(&self) -> usize {
        self.spheres.len()
    }

    pub fn link_count(&self) -> usize {
        self.link_ranges.len()
    }

    /// Sphere index range `[start, end)` owned by `link`.
    pub fn link_range(&self, link: usize) -> (usize, usize) {
        self.link_ranges[link]
    }

    /// A copy of this robot mounted at a different base pose.
    pub fn with_base_pose(&self, base_pose: Pose) -> RobotSpec {
        let mut parts = self.parts.clone();
        parts.base_pose = base_pose;
        RobotSpec { base: base_pose.to_transform(), parts, ..self.clone() }
    }

    /// A copy with replaced joint limits; fails if any limit is inverted.
    pub fn with_limits(&self, limits: &[[f64; 2]]) -> Result<RobotSpec, ModelError> {
        let mut parts = self.parts.clone();
        for (j, l) in parts.joints.iter_mut().zip(limits) {
            j.limits = *l;
        }
        RobotSpec::new(parts)
    }

    /// Upper bound on the distance from the first joint to any sphere surface,
    /// computed from the chain geometry.
    pub fn reach(&self) -> f64 {
        let mut total = 0.0;
        for j in self.parts.joints.iter().skip(1) {
            total += j.origin.translation.norm();
        }
        let last = self.parts.link_spheres.last().map(|l| {
            l.iter().map(|s| s.center.norm() + s.radius).fold(0.0, f64::max)
        });
        total + last.unwrap_or(0.0)
    }

    pub fn check_configuration(&self, q: &Configuration) -> Result<(), ModelError> {
        if q.len() != self.dof() {
            return Err(ModelError::DofMismatch { robot: self.parts.name.clone(), dof: self.dof(), got: q.len() });
        }
        Ok(())
    }

    pub fn within_limits(&self, q: &Configuration) -> bool {
        q.len() == self.dof()
            && q.values().iter().zip(&self.parts.joints).all(|(v, j)| *v >= j.limits[0] && *v <= j.limits[1])
    }
}

/// Joint vector of a single robot.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Configuration(pub Vec<f64>);

impl Configuration {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `self + (other - self) * s`
    pub fn lerp(&self, other: &Configuration, s: f64) -> Configuration {
        Configuration(self.0.iter().zip(&other.0).map(|(a, b)| a + (b - a) * s).collect())
    }

    /// Largest per-DOF move measured in units of `max_step`.
    pub fn step_distance(&self, other: &Configuration, max_step: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .zip(max_step)
            .map(|((a, b), m)| (b - a).abs() / m)
            .fold(0.0, f64::max)
    }

    pub fn distance(&self, other: &Configuration) -> f64 {
        libm::sqrt(self.0.iter().zip(&other.0).map(|(a, b)| (a - b) * (a - b)).sum())
    }
}

impl From<Vec<f64>> for Configuration {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// Timestep-indexed sequence of configurations for one robot (index = timestep).
#[derive(Clone, Debug, PartialEq)]
pub struct Path {
    pub robot: usize,
    waypoints: Vec<Configuration>,
}

impl Path {
    pub fn new(robot: usize, waypoints: Vec<Configuration>) -> Result<Path, ModelError> {
        if waypoints.is_empty() {
            return Err(ModelError::EmptyPath);
        }
        Ok(Path { robot, waypoints })
    }

    pub fn stationary(robot: usize, q: Configuration) -> Path {
        Path { robot, waypoints: alloc::vec![q] }
    }

    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn waypoints(&self) -> &[Configuration] {
        &self.waypoints
    }

    pub fn into_waypoints(self) -> Vec<Configuration> {
        self.waypoints
    }

    pub fn first(&self) -> &Configuration {
        &self.waypoints[0]
    }

    pub fn last(&self) -> &Configuration {
        &self.waypoints[self.waypoints.len() - 1]
    }

    /// Configuration at timestep `t`; past the end the robot waits at its goal.
    pub fn at(&self, t: usize) -> &Configuration {
        &self.waypoints[t.min(self.waypoints.len() - 1)]
    }

    /// Append `other`, dropping its first waypoint when it repeats our last one.
    pub fn extend_from(&mut self, other: &[Configuration]) {
        let skip = usize::from(other.first() == Some(self.last()));
        self.waypoints.extend(other.iter().skip(skip).cloned());
    }

    /// Waypoints for absolute timesteps `start..start + len` (clamped at the end).
    pub fn window(&self, start: usize, len: usize) -> Path {
        Path { robot: self.robot, waypoints: (start..start + len).map(|t| self.at(t).clone()).collect() }
    }

    /// Pad with the goal configuration up to `len` waypoints.
    pub fn padded(&self, len: usize) -> Path {
        let mut p = self.clone();
        while p.waypoints.len() < len {
            let q = p.last().clone();
            p.waypoints.push(q);
        }
        p
    }

    /// Checks the per-DOF step bound between consecutive waypoints (with a small
    /// slack for interpolation round-off).
    pub fn respects_step_bound(&self, robot: &RobotSpec) -> bool {
        self.waypoints.windows(2).all(|w| w[0].step_distance(&w[1], robot.max_step()) <= 1.0 + 1e-9)
    }

    /// Path cost used by the planners: number of timesteps occupied.
    pub fn cost(&self) -> usize {
        self.waypoints.len()
    }
}

/// Largest timestep count `max |p_i|` over a path set.
pub fn horizon(paths: &[Path]) -> usize {
    paths.iter().map(Path::len).max().unwrap_or(0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        Self { min, max }
    }

    fn is_valid(&self) -> bool {
        self.min.x < self.max.x && self.min.y < self.max.y && self.min.z < self.max.z
    }

    pub fn intersects(&self, other: &Aabb) -> bool {
        self.min.x <= other.max.x
            && other.min.x <= self.max.x
            && self.min.y <= other.max.y
            && other.min.y <= self.max.y
            && self.min.z <= other.max.z
            && other.min.z <= self.max.z
    }

    pub fn contains(&self, p: Vec3) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y && p.z >= self.min.z && p.z <= self.max.z
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Obstacle {
    Sphere { center: Vec3, radius: f64 },
    Box(Aabb),
}

impl Obstacle {
    pub fn bounding_box(&self) -> Aabb {
        match *self {
            Obstacle::Sphere { center, radius } => {
                let r = Vec3::new(radius, radius, radius);
                Aabb::new(center - r, center + r)
            }
            Obstacle::Box(b) => b,
        }
    }

    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    fn validate(&self, k: usize) -> Result<(), ModelError> {
        match self {
            Obstacle::Sphere { radius, .. } if !(*radius > 0.0) => {
                Err(violation("radius", format!("obstacles[{k}].radius"), "must be > 0"))
            }
            Obstacle::Box(b) if !b.is_valid() => {
                Err(violation("box", format!("obstacles[{k}]"), "min must be < max componentwise"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Environment {
    obstacles: Vec<Obstacle>,
    bounds: Aabb,
}

impl Environment {
    pub fn new(obstacles: Vec<Obstacle>, bounds: Aabb) -> Result<Environment, ModelError> {
        if !bounds.is_valid() {
            return Err(violation("bounds", "bounds", "min must be < max componentwise"));
        }
        for (k, o) in obstacles.iter().enumerate() {
            o.validate(k)?;
            if !o.bounding_box().intersects(&bounds) {
                return Err(violation("obstacle", format!("obstacles[{k}]"), "lies outside bounds"));
            }
        }
        Ok(Environment { obstacles, bounds })
    }

    pub fn empty(bounds: Aabb) -> Environment {
        Environment { obstacles: Vec::new(), bounds }
    }

    pub fn obstacles(&self) -> &[Obstacle] {
        &self.obstacles
    }

    pub fn bounds(&self) -> &Aabb {
        &self.bounds
    }
}

/// Timesteps needed to move `a -> b` without exceeding `max_step` on any DOF.
pub fn steps_required(robot: &RobotSpec, a: &Configuration, b: &Configuration) -> usize {
    libm::ceil(a.step_distance(b, robot.max_step())) as usize
}

/// `steps + 1` evenly spaced waypoints from `a` to `b` (exact endpoints).
pub fn interpolate(robot: usize, a: &Configuration, b: &Configuration, steps: usize) -> Path {
    if steps == 0 {
        return Path::stationary(robot, a.clone());
    }
    let mut waypoints = Vec::with_capacity(steps + 1);
    waypoints.push(a.clone());
    for k in 1..steps {
        waypoints.push(a.lerp(b, k as f64 / steps as f64));
    }
    waypoints.push(b.clone());
    Path { robot, waypoints }
}

/// Straight-line motion `a -> b` with the fewest timesteps that respect `max_step`.
pub fn discretize_motion(robot: &RobotSpec, robot_index: usize, a: &Configuration, b: &Configuration) -> Path {
    interpolate(robot_index, a, b, steps_required(robot, a, b))
}

/// Synchronized straight-line motion for a team: every robot is interpolated
/// over the same number of timesteps, the largest any single robot needs.
pub fn discretize_composite(robots: &[RobotSpec], a: &[Configuration], b: &[Configuration]) -> Vec<Path> {
    let steps = robots
        .iter()
        .zip(a.iter().zip(b))
        .map(|(r, (qa, qb))| steps_required(r, qa, qb))
        .max()
        .unwrap_or(0);
    a.iter().zip(b).enumerate().map(|(i, (qa, qb))| interpolate(i, qa, qb, steps)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference;
    use alloc::string::ToString;
    use alloc::vec;
    use proptest::prelude::*;

    fn one_dof(max_step: f64) -> RobotSpec {
        let mut parts = reference::sphere_bot().parts().clone();
        parts.joints.truncate(1);
        parts.link_spheres.truncate(2);
        parts.link_spheres[1] = vec![LinkSphere { center: Vec3::ZERO, radius: 0.1 }];
        parts.max_step = vec![max_step];
        RobotSpec::new(parts).unwrap()
    }

    #[test]
    fn identity_motion_is_single_waypoint() {
        let r = reference::arm3();
        let q = Configuration::new(vec![0.1, 0.2, 0.3]);
        assert_eq!(discretize_motion(&r, 0, &q, &q).len(), 1);
    }

    #[test]
    fn ceiling_division_step_count() {
        let r = one_dof(0.25);
        let p = discretize_motion(&r, 0, &Configuration::new(vec![0.0]), &Configuration::new(vec![1.0]));
        let got: Vec<f64> = p.waypoints().iter().map(|q| q.0[0]).collect();
        assert_eq!(got, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn two_dof_shares_step_count() {
        let mut parts = reference::sphere_bot().parts().clone();
        parts.joints.truncate(2);
        parts.link_spheres.truncate(3);
        parts.link_spheres[2] = vec![LinkSphere { center: Vec3::ZERO, radius: 0.1 }];
        parts.max_step = vec![0.25, 0.25];
        let r = RobotSpec::new(parts).unwrap();
        let a = Configuration::new(vec![0.0, 0.0]);
        let b = Configuration::new(vec![1.0, 0.1]);
        let p = discretize_motion(&r, 0, &a, &b);
        assert_eq!(p.len(), 5);
        // brute-force: every consecutive delta on every DOF stays within the bound
        for w in p.waypoints().windows(2) {
            for d in 0..2 {
                assert!((w[1].0[d] - w[0].0[d]).abs() <= 0.25 + 1e-12);
            }
        }
        assert_eq!(p.last(), &b);
        assert!((p.waypoints()[2].0[1] - 0.05).abs() < 1e-12);
    }

    #[test]
    fn zero_radius_rejected() {
        let mut parts = reference::sphere_bot().parts().clone();
        parts.link_spheres[3][0].radius = 0.0;
        let err = RobotSpec::new(parts).unwrap_err();
        assert!(err.to_string().starts_with("invariant violation: radius"), "{err}");
    }

    #[test]
    fn adjacent_self_pair_rejected() {
        let mut parts = reference::arm3().parts().clone();
        parts.self_collision_pairs.push((1, 2));
        assert!(RobotSpec::new(parts).is_err());
    }

    #[test]
    fn inverted_box_rejected() {
        let bounds = Aabb::new(Vec3::new(-1.0, -1.0, -1.0), Vec3::new(1.0, 1.0, 1.0));
        let bad = Obstacle::Box(Aabb::new(Vec3::new(0.5, 0.0, 0.0), Vec3::new(0.0, 1.0, 1.0)));
        assert!(Environment::new(vec![bad], bounds).is_err());
        let ok = Environment::new(
            vec![
                Obstacle::Sphere { center: Vec3::ZERO, radius: 0.2 },
                Obstacle::Box(Aabb::new(Vec3::new(0.5, 0.0, 0.0), Vec3::new(0.6, 1.0, 1.0))),
            ],
            bounds,
        )
        .unwrap();
        assert_eq!(ok.obstacles().len(), 2);
    }

    #[test]
    fn clamps_past_end() {
        let p = Path::new(0, vec![Configuration::new(vec![1.0]), Configuration::new(vec![2.0])]).unwrap();
        assert_eq!(p.at(7).0, vec![2.0]);
        assert!(Path::new(0, vec![]).is_err());
    }

    proptest! {
        #[test]
        fn discretized_paths_respect_step_bound(
            a in proptest::collection::vec(-3.0f64..3.0, 3),
            b in proptest::collection::vec(-3.0f64..3.0, 3),
        ) {
            let r = reference::arm3();
            let (a, b) = (Configuration::new(a), Configuration::new(b));
            let p = discretize_motion(&r, 0, &a, &b);
            prop_assert!(p.respects_step_bound(&r));
            prop_assert_eq!(p.first(), &a);
            prop_assert_eq!(p.last(), &b);
        }

        #[test]
        fn discretization_is_symmetric(
            a in proptest::collection::vec(-3.0f64..3.0, 3),
            b in proptest::collection::vec(-3.0f64..3.0, 3),
        ) {
            let r = reference::arm3();
            let (a, b) = (Configuration::new(a), Configuration::new(b));
            let fwd = discretize_motion(&r, 0, &a, &b);
            let mut rev: Vec<Configuration> = discretize_motion(&r, 0, &b, &a).into_waypoints();
            rev.reverse();
            prop_assert_eq!(fwd.len(), rev.len());
            for (x, y) in fwd.waypoints().iter().zip(&rev) {
                for (u, v) in x.values().iter().zip(y.values()) {
                    prop_assert!((u - v).abs() < 1e-12);
                }
            }
        }
    }
}
