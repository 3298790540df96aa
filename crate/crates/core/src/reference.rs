//! Reference robot models shipped with the library.
//!
//! * `sphere-bot`: free-flying sphere, three prismatic DOF (x, y, z).
//! * `arm7`: generic 7-revolute-joint serial arm with two spheres per link,
//!   roughly the size of a collaborative manipulator (reach ~1 m).
//! * `arm3`: small 3-joint arm for fast tests.
//!
//! Per-timestep motion bounds (`max_step`) are our own defaults: 0.1 m for the
//! sphere-bot and 0.05 rad for the arms.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::math::Vec3;
use crate::model::{Joint, JointKind, LinkSphere, Pose, RobotSpec, RobotSpecParts};

pub const SPHERE_BOT_RADIUS: f64 = 0.15;

fn sphere(x: f64, y: f64, z: f64, radius: f64) -> LinkSphere {
    LinkSphere { center: Vec3::new(x, y, z), radius }
}

fn joint(kind: JointKind, axis: Vec3, offset: Vec3, limits: [f64; 2]) -> Joint {
    Joint { kind, axis, origin: Pose::from_translation(offset), limits }
}

const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

/// Sphere-bot with `radius` and position limits `[-extent, extent]` on every axis.
pub fn sphere_bot_with(radius: f64, extent: f64) -> RobotSpec {
    let lim = [-extent, extent];
    RobotSpec::new(RobotSpecParts {
        name: String::from("sphere-bot"),
        joints: vec![
            joint(JointKind::Prismatic, X, Vec3::ZERO, lim),
            joint(JointKind::Prismatic, Y, Vec3::ZERO, lim),
            joint(JointKind::Prismatic, Z, Vec3::ZERO, lim),
        ],
        base_pose: Pose::IDENTITY,
        link_spheres: vec![vec![], vec![], vec![], vec![sphere(0.0, 0.0, 0.0, radius)]],
        self_collision_pairs: vec![],
        max_step: vec![0.1; 3],
    })
    .expect("sphere-bot reference spec is valid")
}

pub fn sphere_bot() -> RobotSpec {
    sphere_bot_with(SPHERE_BOT_RADIUS, 5.0)
}

/// Every non-adjacent link pair of an `links`-link chain.
fn non_adjacent_pairs(links: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for a in 0..links {
        for b in a + 2..links {
            pairs.push((a, b));
        }
    }
    pairs
}

/// Segment lengths along the arm7 chain: base->j0, j0->j1, ..., j5->j6.
const ARM7_SEGMENTS: [f64; 7] = [0.2, 0.13, 0.16, 0.16, 0.16, 0.16, 0.1];

pub fn arm7() -> RobotSpec {
    let axes = [Z, Y, Z, Y, Z, Y, Z];
    let mut joints = Vec::with_capacity(7);
    for (k, axis) in axes.iter().enumerate() {
        let limit = if k % 2 == 0 { 2.8 } else { 2.0 };
        joints.push(joint(JointKind::Revolute, *axis, Vec3::new(0.0, 0.0, ARM7_SEGMENTS[k]), [-limit, limit]));
    }
    let mut link_spheres = vec![vec![sphere(0.0, 0.0, 0.05, 0.08), sphere(0.0, 0.0, 0.15, 0.07)]];
    // link k+1 spans from joint k to joint k+1
    for seg in &ARM7_SEGMENTS[1..] {
        link_spheres.push(vec![sphere(0.0, 0.0, seg / 3.0, 0.06), sphere(0.0, 0.0, 2.0 * seg / 3.0, 0.06)]);
    }
    link_spheres.push(vec![sphere(0.0, 0.0, 0.05, 0.05), sphere(0.0, 0.0, 0.12, 0.05)]);
    RobotSpec::new(RobotSpecParts {
        name: String::from("arm7"),
        joints,
        base_pose: Pose::IDENTITY,
        link_spheres,
        self_collision_pairs: non_adjacent_pairs(8),
        max_step: vec![0.05; 7],
    })
    .expect("arm7 reference spec is valid")
}

pub fn arm3() -> RobotSpec {
    RobotSpec::new(RobotSpecParts {
        name: String::from("arm3"),
        joints: vec![
            joint(JointKind::Revolute, Z, Vec3::new(0.0, 0.0, 0.1), [-3.0, 3.0]),
            joint(JointKind::Revolute, Y, Vec3::new(0.0, 0.0, 0.1), [-2.0, 2.0]),
            joint(JointKind::Revolute, Y, Vec3::new(0.0, 0.0, 0.3), [-2.5, 2.5]),
        ],
        base_pose: Pose::IDENTITY,
        link_spheres: vec![
            vec![sphere(0.0, 0.0, 0.05, 0.05)],
            vec![sphere(0.0, 0.0, 0.05, 0.05)],
            vec![sphere(0.0, 0.0, 0.1, 0.05), sphere(0.0, 0.0, 0.2, 0.05)],
            vec![sphere(0.0, 0.0, 0.1, 0.05), sphere(0.0, 0.0, 0.2, 0.05)],
        ],
        self_collision_pairs: non_adjacent_pairs(4),
        max_step: vec![0.1; 3],
    })
    .expect("arm3 reference spec is valid")
}

/// Looks up a reference robot by name.
pub fn by_name(name: &str) -> Option<RobotSpec> {
    match name {
        "sphere-bot" => Some(sphere_bot()),
        "arm7" => Some(arm7()),
        "arm3" => Some(arm3()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_dofs() {
        assert_eq!(sphere_bot().dof(), 3);
        assert_eq!(arm7().dof(), 7);
        assert_eq!(arm7().sphere_count(), 16);
        assert_eq!(arm3().dof(), 3);
    }

    #[test]
    fn arm7_reach() {
        let r = arm7().reach();
        assert!(r > 0.9 && r < 1.1, "{r}");
    }
}
