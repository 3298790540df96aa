//! Batched collision kernels and validation-effort accounting.
//!
//! Kernels compare squared distances in f32 lanes. A lane whose margin
//! `r_sum^2 - d^2` lies within [`NEAR_BAND`] of zero is reported as
//! *uncertain* instead of being decided in single precision; callers settle
//! those lanes with the double-precision routines at the bottom of this module.
//! Collision is strict overlap: touching spheres are free.

use alloc::vec::Vec;

use crate::kinematics::{dispatch_width, Frame, KernelObstacle, LaneMask, SphereBatch, SphereSet, TransformedEnvironmentCache};
use crate::model::{Environment, Obstacle, RobotSpec};

/// Half-width (m^2) of the near-touching band around `d^2 = r_sum^2`.
pub const NEAR_BAND: f64 = 1e-4;
const BAND: f32 = NEAR_BAND as f32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum CollisionError {
    #[error("batch width mismatch: {0} vs {1}")]
    WidthMismatch(usize, usize),
    #[error("sphere batch is in the wrong frame")]
    WrongFrame,
}

/// Per-lane outcome of one kernel invocation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CollisionVerdict {
    /// Active lanes that certainly collide.
    pub hits: LaneMask,
    /// Active lanes, not in `hits`, with at least one near-touching pair.
    pub uncertain: LaneMask,
}

impl CollisionVerdict {
    pub fn any_collision(&self) -> bool {
        !self.hits.is_empty()
    }

    /// Minimum colliding active lane.
    pub fn first_lane(&self) -> Option<usize> {
        self.hits.lowest()
    }

    fn finish(hits: LaneMask, uncertain: LaneMask) -> Self {
        CollisionVerdict { hits, uncertain: uncertain.and_not(hits) }
    }
}

/// Whether a kernel may return as soon as any lane is known to collide.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scan {
    AnyHit,
    Full,
}

/// Lanes whose largest margin is a certain hit, and lanes within the band.
#[inline]
fn classify<const W: usize>(worst: &[f32; W], active: u64) -> (u64, u64) {
    let mut h = 0u64;
    let mut u = 0u64;
    for k in 0..W {
        h |= u64::from(worst[k] > BAND) << k;
        u |= u64::from(worst[k] >= -BAND) << k;
    }
    (h & active, u & active)
}

/// `max` without NaN handling, so the lane loops lower to packed max.
#[inline(always)]
fn fmax(a: f32, b: f32) -> f32 {
    if a > b {
        a
    } else {
        b
    }
}

#[inline]
fn lanes<const W: usize>(v: &[f32]) -> &[f32; W] {
    v.try_into().expect("lane slice")
}

/// Folds sphere-pair margins `rs - |a - b|^2` into `worst`.
#[inline]
fn pair_margins<const W: usize>(worst: &mut [f32; W], a: (&[f32], &[f32], &[f32]), b: (&[f32], &[f32], &[f32]), rs: f32) {
    let (ax, ay, az) = (lanes::<W>(a.0), lanes::<W>(a.1), lanes::<W>(a.2));
    let (bx, by, bz) = (lanes::<W>(b.0), lanes::<W>(b.1), lanes::<W>(b.2));
    for k in 0..W {
        let (dx, dy, dz) = (ax[k] - bx[k], ay[k] - by[k], az[k] - bz[k]);
        worst[k] = fmax(worst[k], rs - (dx * dx + dy * dy + dz * dz));
    }
}

fn cc_env_lanes<const W: usize>(spheres: &SphereBatch, robot: &RobotSpec, obstacles: &[KernelObstacle], scan: Scan) -> CollisionVerdict {
    let active = spheres.active().0;
    // largest overlap margin seen so far in each lane
    let mut worst = [f32::NEG_INFINITY; W];
    for s in 0..spheres.sphere_count() {
        let (xs, ys, zs) = spheres.sphere(s);
        let (xs, ys, zs) = (lanes::<W>(xs), lanes::<W>(ys), lanes::<W>(zs));
        let r = spheres.radius(s);
        for o in obstacles {
            match *o {
                KernelObstacle::Sphere { center: c, radius } => {
                    let rs = (r + radius) * (r + radius);
                    for k in 0..W {
                        let (dx, dy, dz) = (xs[k] - c[0], ys[k] - c[1], zs[k] - c[2]);
                        worst[k] = fmax(worst[k], rs - (dx * dx + dy * dy + dz * dz));
                    }
                }
                KernelObstacle::Aabb { center: c, half: h } => {
                    let rr = r * r;
                    for k in 0..W {
                        let dx = fmax((xs[k] - c[0]).abs() - h[0], 0.0);
                        let dy = fmax((ys[k] - c[1]).abs() - h[1], 0.0);
                        let dz = fmax((zs[k] - c[2]).abs() - h[2], 0.0);
                        worst[k] = fmax(worst[k], rr - (dx * dx + dy * dy + dz * dz));
                    }
                }
                KernelObstacle::Obb { center: c, half: h, rot: m } => {
                    let rr = r * r;
                    for k in 0..W {
                        let (px, py, pz) = (xs[k] - c[0], ys[k] - c[1], zs[k] - c[2]);
                        // box-local coordinates: rot^T * p
                        let lx = m[0][0] * px + m[1][0] * py + m[2][0] * pz;
                        let ly = m[0][1] * px + m[1][1] * py + m[2][1] * pz;
                        let lz = m[0][2] * px + m[1][2] * py + m[2][2] * pz;
                        let dx = fmax(lx.abs() - h[0], 0.0);
                        let dy = fmax(ly.abs() - h[1], 0.0);
                        let dz = fmax(lz.abs() - h[2], 0.0);
                        worst[k] = fmax(worst[k], rr - (dx * dx + dy * dy + dz * dz));
                    }
                }
            }
        }
        if scan == Scan::AnyHit {
            let (hits, uncertain) = classify(&worst, active);
            if hits != 0 {
                return CollisionVerdict::finish(LaneMask(hits), LaneMask(uncertain));
            }
        }
    }

    for &(la, lb) in robot.self_collision_pairs() {
        let (a0, a1) = robot.link_range(la);
        let (b0, b1) = robot.link_range(lb);
        for sa in a0..a1 {
            let ra = spheres.radius(sa);
            for sb in b0..b1 {
                let rs = (ra + spheres.radius(sb)) * (ra + spheres.radius(sb));
                pair_margins(&mut worst, spheres.sphere(sa), spheres.sphere(sb), rs);
            }
        }
        if scan == Scan::AnyHit && classify(&worst, active).0 != 0 {
            break;
        }
    }
    let (hits, uncertain) = classify(&worst, active);
    CollisionVerdict::finish(LaneMask(hits), LaneMask(uncertain))
}

/// Robot-vs-environment (including self-collision) over a robot-frame batch.
pub fn cc_env(
    spheres: &SphereBatch,
    robot: &RobotSpec,
    obstacles: &[KernelObstacle],
    scan: Scan,
) -> Result<CollisionVerdict, CollisionError> {
    if spheres.frame != Frame::Robot {
        return Err(CollisionError::WrongFrame);
    }
    Ok(dispatch_width!(spheres.width(), cc_env_lanes(spheres, robot, obstacles, scan)))
}

/// Convenience wrapper taking the cache entry for robot `spheres.robot`.
pub fn cc_env_cached(
    spheres: &SphereBatch,
    robot: &RobotSpec,
    cache: &TransformedEnvironmentCache,
    scan: Scan,
) -> Result<CollisionVerdict, CollisionError> {
    cc_env(spheres, robot, cache.kernel_obstacles(spheres.robot), scan)
}

fn cc_rr_lanes<const W: usize>(a: &SphereBatch, b: &SphereBatch, scan: Scan) -> CollisionVerdict {
    let active = a.active().and(b.active()).0;
    let mut worst = [f32::NEG_INFINITY; W];
    for sa in 0..a.sphere_count() {
        let ra = a.radius(sa);
        let pa = a.sphere(sa);
        for sb in 0..b.sphere_count() {
            let rs = (ra + b.radius(sb)) * (ra + b.radius(sb));
            pair_margins(&mut worst, pa, b.sphere(sb), rs);
        }
        if scan == Scan::AnyHit && classify(&worst, active).0 != 0 {
            break;
        }
    }
    let (hits, uncertain) = classify(&worst, active);
    CollisionVerdict::finish(LaneMask(hits), LaneMask(uncertain))
}

/// Robot-vs-robot over two world-frame batches whose lane `k` share a timestep.
pub fn cc_robot_robot(a: &SphereBatch, b: &SphereBatch, scan: Scan) -> Result<CollisionVerdict, CollisionError> {
    if a.width() != b.width() {
        return Err(CollisionError::WidthMismatch(a.width(), b.width()));
    }
    if a.frame != Frame::World || b.frame != Frame::World {
        return Err(CollisionError::WrongFrame);
    }
    Ok(dispatch_width!(a.width(), cc_rr_lanes(a, b, scan)))
}

/// Batch-kernel invocations performed versus the number a full validation needs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EffortCounter {
    pub env_performed: u64,
    pub env_total: u64,
    pub rr_performed: u64,
    pub rr_total: u64,
}

impl EffortCounter {
    /// Denominators for `robots` robots over `num_batches` batches: robot-obstacle
    /// terms grow linearly with team size, robot-robot terms quadratically.
    pub fn for_validation(robots: usize, num_batches: usize, check_environment: bool) -> EffortCounter {
        let n = robots as u64;
        let nb = num_batches as u64;
        EffortCounter {
            env_performed: 0,
            env_total: if check_environment { n * nb } else { 0 },
            rr_performed: 0,
            rr_total: n * n.saturating_sub(1) / 2 * nb,
        }
    }

    pub fn performed(&self) -> u64 {
        self.env_performed + self.rr_performed
    }

    pub fn total_possible(&self) -> u64 {
        self.env_total + self.rr_total
    }

    fn ratio(a: u64, b: u64) -> f64 {
        if b == 0 {
            1.0
        } else {
            a as f64 / b as f64
        }
    }

    /// Fraction of the full validation performed, in `[0, 1]`.
    pub fn fraction(&self) -> f64 {
        Self::ratio(self.performed(), self.total_possible())
    }

    pub fn env_fraction(&self) -> f64 {
        Self::ratio(self.env_performed, self.env_total)
    }

    pub fn rr_fraction(&self) -> f64 {
        Self::ratio(self.rr_performed, self.rr_total)
    }

    /// Accumulates another counter (used by planners that validate many motions).
    pub fn absorb(&mut self, other: &EffortCounter) {
        self.env_performed += other.env_performed;
        self.env_total += other.env_total;
        self.rr_performed += other.rr_performed;
        self.rr_total += other.rr_total;
    }
}

// Double-precision routines shared by uncertain-lane resolution and the
// sequential validators.

fn box_distance_squared(p: crate::math::Vec3, b: &crate::model::Aabb) -> f64 {
    let mut d2 = 0.0;
    for axis in 0..3 {
        let (v, lo, hi) = (p.get(axis), b.min.get(axis), b.max.get(axis));
        let d = if v < lo {
            lo - v
        } else if v > hi {
            v - hi
        } else {
            0.0
        };
        d2 += d * d;
    }
    d2
}

/// Strict sphere-vs-obstacle overlap in double precision.
pub fn sphere_hits_obstacle(center: crate::math::Vec3, radius: f64, obstacle: &Obstacle) -> bool {
    match obstacle {
        Obstacle::Sphere { center: c, radius: r } => (center - *c).norm_squared() < (radius + r) * (radius + r),
        Obstacle::Box(b) => box_distance_squared(center, b) < radius * radius,
    }
}

/// World-frame sphere set of `robot` against the environment and itself.
pub fn spheres_hit_environment(robot: &RobotSpec, spheres: &SphereSet, env: &Environment) -> bool {
    for (c, r) in spheres.centers.iter().zip(&spheres.radii) {
        if env.obstacles().iter().any(|o| sphere_hits_obstacle(*c, *r, o)) {
            return true;
        }
    }
    for &(la, lb) in robot.self_collision_pairs() {
        let (a0, a1) = robot.link_range(la);
        let (b0, b1) = robot.link_range(lb);
        for i in a0..a1 {
            for j in b0..b1 {
                let rs = spheres.radii[i] + spheres.radii[j];
                if (spheres.centers[i] - spheres.centers[j]).norm_squared() < rs * rs {
                    return true;
                }
            }
        }
    }
    false
}

/// Strict overlap between any sphere of `a` and any sphere of `b`.
pub fn sphere_sets_collide(a: &SphereSet, b: &SphereSet) -> bool {
    a.centers.iter().zip(&a.radii).any(|(ca, ra)| {
        b.centers.iter().zip(&b.radii).any(|(cb, rb)| (*ca - *cb).norm_squared() < (ra + rb) * (ra + rb))
    })
}

/// Collects world-frame sphere sets for several lanes; used by tests and tools.
pub fn lane_sets(batch: &SphereBatch) -> Vec<SphereSet> {
    (0..batch.width())
        .map(|k| SphereSet {
            centers: (0..batch.sphere_count()).map(|s| batch.center(s, k)).collect(),
            radii: (0..batch.sphere_count()).map(|s| batch.radius(s) as f64).collect(),
        })
        .collect()
}
