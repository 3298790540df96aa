//! TOML file formats for robots, environments, scenarios and problems.
//!
//! Unknown keys are rejected. Vectors are `[x, y, z]` arrays, quaternions
//! `[w, x, y, z]`; omitted poses default to the identity.

use std::path::Path as FsPath;

use anyhow::{Context, Result};
use mrmp_core::math::{Quat, Vec3};
use mrmp_core::model::{Aabb, Joint, JointKind, LinkSphere, Pose, RobotSpecParts};
use mrmp_core::planners::PlanningProblem;
use mrmp_core::scenarios::{Geometry, ScenarioFamily, ScenarioSpec};
use mrmp_core::{Configuration, Environment, Obstacle, RobotSpec};
use serde::{Deserialize, Serialize};

fn identity_rotation() -> [f64; 4] {
    [1.0, 0.0, 0.0, 0.0]
}

fn is_identity_rotation(r: &[f64; 4]) -> bool {
    *r == identity_rotation()
}

fn is_zero(v: &[f64; 3]) -> bool {
    *v == [0.0; 3]
}

fn is_identity_pose(p: &PoseFile) -> bool {
    *p == PoseFile::default()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseFile {
    #[serde(default, skip_serializing_if = "is_zero")]
    pub translation: [f64; 3],
    #[serde(default = "identity_rotation", skip_serializing_if = "is_identity_rotation")]
    pub rotation: [f64; 4],
}

impl Default for PoseFile {
    fn default() -> Self {
        PoseFile { translation: [0.0; 3], rotation: identity_rotation() }
    }
}

impl From<&Pose> for PoseFile {
    fn from(p: &Pose) -> Self {
        let r = p.rotation;
        PoseFile { translation: p.translation.to_array(), rotation: [r.w, r.x, r.y, r.z] }
    }
}

impl From<&PoseFile> for Pose {
    fn from(p: &PoseFile) -> Self {
        let [w, x, y, z] = p.rotation;
        Pose::new(Vec3::from_array(p.translation), Quat::new(w, x, y, z))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointKindFile {
    Revolute,
    Prismatic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointFile {
    pub kind: JointKindFile,
    pub axis: [f64; 3],
    #[serde(default)]
    pub origin: PoseFile,
    pub limits: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphereFile {
    pub center: [f64; 3],
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotFile {
    pub name: String,
    pub max_step: Vec<f64>,
    #[serde(default)]
    pub self_collision_pairs: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "is_identity_pose")]
    pub base_pose: PoseFile,
    pub joints: Vec<JointFile>,
    /// Spheres per link; entry 0 is the base link.
    pub link_spheres: Vec<Vec<SphereFile>>,
}

impl From<&RobotSpec> for RobotFile {
    fn from(r: &RobotSpec) -> Self {
        let p = r.parts();
        RobotFile {
            name: p.name.clone(),
            max_step: p.max_step.clone(),
            self_collision_pairs: p.self_collision_pairs.iter().map(|&(a, b)| [a, b]).collect(),
            base_pose: (&p.base_pose).into(),
            joints: p
                .joints
                .iter()
                .map(|j| JointFile {
                    kind: match j.kind {
                        JointKind::Revolute => JointKindFile::Revolute,
                        JointKind::Prismatic => JointKindFile::Prismatic,
                    },
                    axis: j.axis.to_array(),
                    origin: (&j.origin).into(),
                    limits: j.limits,
                })
                .collect(),
            link_spheres: p
                .link_spheres
                .iter()
                .map(|l| l.iter().map(|s| SphereFile { center: s.center.to_array(), radius: s.radius }).collect())
                .collect(),
        }
    }
}

impl RobotFile {
    pub fn to_spec(&self) -> Result<RobotSpec> {
        let parts = RobotSpecParts {
            name: self.name.clone(),
            joints: self
                .joints
                .iter()
                .map(|j| Joint {
                    kind: match j.kind {
                        JointKindFile::Revolute => JointKind::Revolute,
                        JointKindFile::Prismatic => JointKind::Prismatic,
                    },
                    axis: Vec3::from_array(j.axis),
                    origin: (&j.origin).into(),
                    limits: j.limits,
                })
                .collect(),
            base_pose: (&self.base_pose).into(),
            link_spheres: self
                .link_spheres
                .iter()
                .map(|l| l.iter().map(|s| LinkSphere { center: Vec3::from_array(s.center), radius: s.radius }).collect())
                .collect(),
            self_collision_pairs: self.self_collision_pairs.iter().map(|p| (p[0], p[1])).collect(),
            max_step: self.max_step.clone(),
        };
        Ok(RobotSpec::new(parts)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsFile {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ObstacleFile {
    Sphere { center: [f64; 3], radius: f64 },
    Box { min: [f64; 3], max: [f64; 3] },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentFile {
    pub bounds: BoundsFile,
    #[serde(default)]
    pub obstacles: Vec<ObstacleFile>,
}

impl From<&Environment> for EnvironmentFile {
    fn from(e: &Environment) -> Self {
        EnvironmentFile {
            bounds: BoundsFile { min: e.bounds().min.to_array(), max: e.bounds().max.to_array() },
            obstacles: e
                .obstacles()
                .iter()
                .map(|o| match o {
                    Obstacle::Sphere { center, radius } => ObstacleFile::Sphere { center: center.to_array(), radius: *radius },
                    Obstacle::Box(b) => ObstacleFile::Box { min: b.min.to_array(), max: b.max.to_array() },
                })
                .collect(),
        }
    }
}

impl EnvironmentFile {
    pub fn to_environment(&self) -> Result<Environment> {
        let aabb = |min: [f64; 3], max: [f64; 3]| Aabb { min: Vec3::from_array(min), max: Vec3::from_array(max) };
        let obstacles = self
            .obstacles
            .iter()
            .map(|o| match *o {
                ObstacleFile::Sphere { center, radius } => Obstacle::Sphere { center: Vec3::from_array(center), radius },
                ObstacleFile::Box { min, max } => Obstacle::Box(aabb(min, max)),
            })
            .collect();
        Ok(Environment::new(obstacles, aabb(self.bounds.min, self.bounds.max))?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryFile {
    pub row_spacing: f64,
    pub arm_spacing: f64,
    pub corridor_width: f64,
    pub line_spacing: f64,
    pub cross_half_length: f64,
    pub max_retries: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub family: String,
    #[serde(default)]
    pub arms: usize,
    #[serde(default)]
    pub spheres: usize,
    pub seed: u64,
    #[serde(default = "default_time_limit")]
    pub time_limit: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<GeometryFile>,
}

fn default_time_limit() -> f64 {
    60.0
}

impl From<&ScenarioSpec> for ScenarioFile {
    fn from(s: &ScenarioSpec) -> Self {
        let g = s.geometry;
        ScenarioFile {
            family: s.family.name().to_string(),
            arms: s.arms,
            spheres: s.spheres,
            seed: s.seed,
            time_limit: s.time_limit,
            geometry: Some(GeometryFile {
                row_spacing: g.row_spacing,
                arm_spacing: g.arm_spacing,
                corridor_width: g.corridor_width,
                line_spacing: g.line_spacing,
                cross_half_length: g.cross_half_length,
                max_retries: g.max_retries,
            }),
        }
    }
}

impl ScenarioFile {
    pub fn to_spec(&self) -> Result<ScenarioSpec> {
        let family = ScenarioFamily::from_name(&self.family).with_context(|| format!("unknown scenario family `{}`", self.family))?;
        let mut spec = ScenarioSpec::new(family, self.arms, self.spheres, self.seed);
        spec.time_limit = self.time_limit;
        if let Some(g) = &self.geometry {
            spec.geometry = Geometry {
                row_spacing: g.row_spacing,
                arm_spacing: g.arm_spacing,
                corridor_width: g.corridor_width,
                line_spacing: g.line_spacing,
                cross_half_length: g.cross_half_length,
                max_retries: g.max_retries,
            };
        }
        Ok(spec)
    }
}

/// A fully expanded problem instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub seed: u64,
    pub time_limit: f64,
    pub starts: Vec<Vec<f64>>,
    pub goals: Vec<Vec<f64>>,
    pub environment: EnvironmentFile,
    pub robots: Vec<RobotFile>,
}

impl From<&PlanningProblem> for ProblemFile {
    fn from(p: &PlanningProblem) -> Self {
        ProblemFile {
            seed: p.seed,
            time_limit: p.time_limit,
            starts: p.starts.iter().map(|q| q.0.clone()).collect(),
            goals: p.goals.iter().map(|q| q.0.clone()).collect(),
            environment: (&p.env).into(),
            robots: p.robots.iter().map(RobotFile::from).collect(),
        }
    }
}

impl ProblemFile {
    pub fn to_problem(&self) -> Result<PlanningProblem> {
        let robots = self.robots.iter().map(RobotFile::to_spec).collect::<Result<Vec<_>>>()?;
        let qs = |v: &[Vec<f64>]| v.iter().cloned().map(Configuration).collect::<Vec<_>>();
        Ok(PlanningProblem::new(
            robots,
            self.environment.to_environment()?,
            qs(&self.starts),
            qs(&self.goals),
            self.time_limit,
            self.seed,
        )?)
    }
}

fn read(path: &FsPath) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn parse_robot_spec(text: &str) -> Result<RobotSpec> {
    toml::from_str::<RobotFile>(text)?.to_spec()
}

pub fn load_robot_spec(path: &FsPath) -> Result<RobotSpec> {
    parse_robot_spec(&read(path)?).with_context(|| format!("in {}", path.display()))
}

pub fn robot_spec_to_toml(robot: &RobotSpec) -> Result<String> {
    Ok(toml::to_string(&RobotFile::from(robot))?)
}

pub fn parse_environment(text: &str) -> Result<Environment> {
    toml::from_str::<EnvironmentFile>(text)?.to_environment()
}

pub fn load_environment(path: &FsPath) -> Result<Environment> {
    parse_environment(&read(path)?).with_context(|| format!("in {}", path.display()))
}

pub fn environment_to_toml(env: &Environment) -> Result<String> {
    Ok(toml::to_string(&EnvironmentFile::from(env))?)
}

pub fn parse_scenario(text: &str) -> Result<ScenarioSpec> {
    toml::from_str::<ScenarioFile>(text)?.to_spec()
}

pub fn scenario_to_toml(spec: &ScenarioSpec) -> Result<String> {
    Ok(toml::to_string(&ScenarioFile::from(spec))?)
}

pub fn parse_problem(text: &str) -> Result<PlanningProblem> {
    toml::from_str::<ProblemFile>(text)?.to_problem()
}

pub fn load_problem(path: &FsPath) -> Result<PlanningProblem> {
    parse_problem(&read(path)?).with_context(|| format!("in {}", path.display()))
}

pub fn problem_to_toml(problem: &PlanningProblem) -> Result<String> {
    Ok(toml::to_string(&ProblemFile::from(problem))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use mrmp_core::reference;

    #[test]
    fn zero_radius_reports_invariant() {
        let text = r#"
name = "bad"
max_step = [0.1]
joints = [{ kind = "prismatic", axis = [1.0, 0.0, 0.0], limits = [-1.0, 1.0] }]
link_spheres = [[], [{ center = [0.0, 0.0, 0.0], radius = 0.0 }]]
"#;
        let err = parse_robot_spec(text).unwrap_err().to_string();
        assert!(err.starts_with("invariant violation: radius"), "{err}");
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut text = robot_spec_to_toml(&reference::arm3()).unwrap();
        text.push_str("colour = \"red\"\n");
        assert!(parse_robot_spec(&text).is_err());
        let env = "bounds = { min = [0.0, 0.0, 0.0], max = [1.0, 1.0, 1.0] }\nobstacles = [{ kind = \"box\", min = [0.0, 0.0, 0.0], max = [1.0, 1.0, 1.0], size = 2 }]\n";
        assert!(parse_environment(env).is_err());
    }

    #[test]
    fn two_obstacle_environment() {
        let env = r#"
bounds = { min = [-2.0, -2.0, -2.0], max = [2.0, 2.0, 2.0] }
[[obstacles]]
kind = "box"
min = [0.0, 0.0, 0.0]
max = [0.5, 0.5, 0.5]
[[obstacles]]
kind = "sphere"
center = [-1.0, 0.0, 0.0]
radius = 0.3
"#;
        let e = parse_environment(env).unwrap();
        assert_eq!(e.obstacles().len(), 2);
        assert_eq!(parse_environment(&environment_to_toml(&e).unwrap()).unwrap(), e);
    }

    #[test]
    fn inverted_box_rejected() {
        let env = "bounds = { min = [-2.0, -2.0, -2.0], max = [2.0, 2.0, 2.0] }\nobstacles = [{ kind = \"box\", min = [1.0, 0.0, 0.0], max = [0.0, 1.0, 1.0] }]\n";
        assert!(parse_environment(env).is_err());
    }

    #[test]
    fn scenario_and_problem_round_trip() {
        let spec = ScenarioSpec::new(ScenarioFamily::Cage, 2, 0, 4);
        assert_eq!(parse_scenario(&scenario_to_toml(&spec).unwrap()).unwrap(), spec);
        let p = spec.generate().unwrap();
        let back = parse_problem(&problem_to_toml(&p).unwrap()).unwrap();
        assert_eq!(back.starts, p.starts);
        assert_eq!(back.goals, p.goals);
        assert_eq!(back.env, p.env);
        assert_eq!(back.robots.iter().map(|r| r.parts().clone()).collect::<Vec<_>>(), p.robots.iter().map(|r| r.parts().clone()).collect::<Vec<_>>());
    }
}
