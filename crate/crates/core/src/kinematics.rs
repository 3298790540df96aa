//! Scalar (f64) and lane-parallel (f32) forward kinematics to sphere positions,
//! plus the per-robot cache of obstacles expressed in each robot's base frame.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{Mat3, Transform, Vec3};
use crate::model::{Configuration, Environment, JointKind, Obstacle, Path, RobotSpec};

/// Largest supported lane count (lane masks are `u64`).
pub const MAX_WIDTH: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Frame {
    Robot,
    World,
}

/// Bit `k` set means lane `k` is selected.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LaneMask(pub u64);

impl LaneMask {
    pub const NONE: LaneMask = LaneMask(0);

    pub fn first_n(n: usize) -> LaneMask {
        if n >= 64 {
            LaneMask(u64::MAX)
        } else {
            LaneMask((1u64 << n) - 1)
        }
    }

    pub fn set(&mut self, lane: usize) {
        self.0 |= 1 << lane;
    }

    pub fn contains(self, lane: usize) -> bool {
        self.0 >> lane & 1 == 1
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn count(self) -> u32 {
        self.0.count_ones()
    }

    pub fn lowest(self) -> Option<usize> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize)
    }

    pub fn and(self, o: LaneMask) -> LaneMask {
        LaneMask(self.0 & o.0)
    }

    pub fn and_not(self, o: LaneMask) -> LaneMask {
        LaneMask(self.0 & !o.0)
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        core::iter::from_fn(move || {
            if bits == 0 {
                return None;
            }
            let lane = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            Some(lane)
        })
    }
}

/// Sphere centers and radii for one configuration (f64).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SphereSet {
    pub centers: Vec<Vec3>,
    pub radii: Vec<f64>,
}

fn joint_motion(kind: JointKind, axis: Vec3, q: f64) -> Transform {
    match kind {
        JointKind::Revolute => Transform::new(Mat3::from_axis_angle(axis, q), Vec3::ZERO),
        JointKind::Prismatic => Transform::from_translation(axis * q),
    }
}

/// Link frames (base link first) for configuration `q`.
pub fn link_frames(robot: &RobotSpec, q: &Configuration, frame: Frame) -> Vec<Transform> {
    let mut t = match frame {
        Frame::Robot => Transform::IDENTITY,
        Frame::World => *robot.base_transform(),
    };
    let mut frames = Vec::with_capacity(robot.dof() + 1);
    frames.push(t);
    for ((joint, origin), &value) in robot.joints().iter().zip(robot.joint_origins()).zip(q.values()) {
        t = t.compose(origin).compose(&joint_motion(joint.kind, joint.axis, value));
        frames.push(t);
    }
    frames
}

/// Forward kinematics for a single configuration in double precision.
pub fn fk_scalar(robot: &RobotSpec, q: &Configuration, frame: Frame) -> SphereSet {
    let frames = link_frames(robot, q, frame);
    let mut centers = Vec::with_capacity(robot.sphere_count());
    let mut radii = Vec::with_capacity(robot.sphere_count());
    for (link, t) in frames.iter().enumerate() {
        let (start, end) = robot.link_range(link);
        for s in &robot.spheres()[start..end] {
            centers.push(t.apply(s.center));
            radii.push(s.radius);
        }
    }
    SphereSet { centers, radii }
}

/// `width` configurations of one robot in structure-of-lanes layout:
/// `lanes[d * width + k]` is DOF `d` of lane `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigurationBatch {
    pub robot: usize,
    width: usize,
    dof: usize,
    lanes: Vec<f32>,
    /// Source timestep of each lane (before clamping to the path end).
    timesteps: Vec<usize>,
    active: LaneMask,
}

impl ConfigurationBatch {
    /// Packs the configurations of `path` at the given timesteps. Timesteps past
    /// the path end are clamped to the last waypoint; lanes whose timestep is
    /// `>= horizon` are inactive.
    pub fn from_timesteps(path: &Path, dof: usize, timesteps: &[usize], horizon: usize) -> ConfigurationBatch {
        let width = timesteps.len();
        assert!(width.is_power_of_two() && width <= MAX_WIDTH, "batch width must be a power of two <= 64");
        let mut lanes = vec![0.0f32; dof * width];
        let mut active = LaneMask::NONE;
        for (k, &t) in timesteps.iter().enumerate() {
            if t < horizon {
                active.set(k);
            }
            let q = path.at(t.min(horizon.saturating_sub(1)));
            for d in 0..dof {
                lanes[d * width + k] = q.values()[d] as f32;
            }
        }
        ConfigurationBatch { robot: path.robot, width, dof, lanes, timesteps: timesteps.to_vec(), active }
    }

    /// All lanes hold `q` and are active.
    pub fn broadcast(robot: usize, q: &Configuration, width: usize) -> ConfigurationBatch {
        let path = Path::stationary(robot, q.clone());
        let ts: Vec<usize> = vec![0; width];
        ConfigurationBatch::from_timesteps(&path, q.len(), &ts, 1)
    }

    pub fn from_configurations(robot: usize, qs: &[Configuration]) -> ConfigurationBatch {
        let path = Path::new(robot, qs.to_vec()).expect("at least one configuration");
        let ts: Vec<usize> = (0..qs.len()).collect();
        ConfigurationBatch::from_timesteps(&path, qs[0].len(), &ts, qs.len())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dof(&self) -> usize {
        self.dof
    }

    pub fn active(&self) -> LaneMask {
        self.active
    }

    pub fn set_active(&mut self, mask: LaneMask) {
        self.active = mask.and(LaneMask::first_n(self.width));
    }

    pub fn timesteps(&self) -> &[usize] {
        &self.timesteps
    }

    /// Contiguous lane values for DOF `d`.
    pub fn dof_lanes(&self, d: usize) -> &[f32] {
        &self.lanes[d * self.width..(d + 1) * self.width]
    }

    pub fn dof_lanes_mut(&mut self, d: usize) -> &mut [f32] {
        &mut self.lanes[d * self.width..(d + 1) * self.width]
    }

    pub fn lane(&self, k: usize) -> Configuration {
        Configuration((0..self.dof).map(|d| self.lanes[d * self.width + k] as f64).collect())
    }
}

/// Sphere centers for every lane of a batch; `xs[s * width + k]` is the x
/// coordinate of sphere `s` in lane `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct SphereBatch {
    pub robot: usize,
    pub frame: Frame,
    width: usize,
    xs: Vec<f32>,
    ys: Vec<f32>,
    zs: Vec<f32>,
    radii: Vec<f32>,
    active: LaneMask,
}

impl SphereBatch {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn sphere_count(&self) -> usize {
        self.radii.len()
    }

    pub fn active(&self) -> LaneMask {
        self.active
    }

    pub fn radius(&self, s: usize) -> f32 {
        self.radii[s]
    }

    /// Lane vectors `(x, y, z)` of sphere `s`.
    pub fn sphere(&self, s: usize) -> (&[f32], &[f32], &[f32]) {
        let r = s * self.width..(s + 1) * self.width;
        (&self.xs[r.clone()], &self.ys[r.clone()], &self.zs[r])
    }

    pub fn center(&self, s: usize, lane: usize) -> Vec3 {
        let i = s * self.width + lane;
        Vec3::new(self.xs[i] as f64, self.ys[i] as f64, self.zs[i] as f64)
    }

    /// Builds a batch from per-lane sphere sets (all of equal length).
    pub fn from_sphere_sets(robot: usize, frame: Frame, sets: &[SphereSet], active: LaneMask) -> SphereBatch {
        let width = sets.len();
        let n = sets[0].radii.len();
        let mut b = SphereBatch {
            robot,
            frame,
            width,
            xs: vec![0.0; n * width],
            ys: vec![0.0; n * width],
            zs: vec![0.0; n * width],
            radii: sets[0].radii.iter().map(|&r| r as f32).collect(),
            active,
        };
        for (k, set) in sets.iter().enumerate() {
            for (s, c) in set.centers.iter().enumerate() {
                b.xs[s * width + k] = c.x as f32;
                b.ys[s * width + k] = c.y as f32;
                b.zs[s * width + k] = c.z as f32;
            }
        }
        b
    }
}

/// Calls `$f::<W>($args)` for the runtime width `$w`, which must be a power
/// of two up to [`MAX_WIDTH`].
macro_rules! dispatch_width {
    ($w:expr, $f:ident($($arg:expr),*)) => {
        match $w {
            1 => $f::<1>($($arg),*),
            2 => $f::<2>($($arg),*),
            4 => $f::<4>($($arg),*),
            8 => $f::<8>($($arg),*),
            16 => $f::<16>($($arg),*),
            32 => $f::<32>($($arg),*),
            64 => $f::<64>($($arg),*),
            w => panic!("unsupported batch width {w}"),
        }
    };
}
pub(crate) use dispatch_width;

/// Lane-wise `(sin q, cos q)` in single precision: quadrant reduction by
/// pi/2 in three parts, then minimax polynomials on [-pi/4, pi/4]. Absolute
/// error stays below 1e-6 for |q| up to a few hundred radians.
pub fn sincos_lanes<const W: usize>(q: &[f32; W]) -> ([f32; W], [f32; W]) {
    const DP1: f32 = 1.570_312_5;
    const DP2: f32 = 4.837_513e-4;
    const DP3: f32 = 7.549_79e-8;
    let mut s = [0.0f32; W];
    let mut c = [0.0f32; W];
    for k in 0..W {
        let x = q[k];
        let y = x * core::f32::consts::FRAC_2_PI;
        let n = (y + if y >= 0.0 { 0.5 } else { -0.5 }) as i32;
        let nf = n as f32;
        let r = ((x - nf * DP1) - nf * DP2) - nf * DP3;
        let z = r * r;
        let sp = r + r * z * (-1.666_665_5e-1 + z * (8.332_161e-3 + z * -1.951_529_6e-4));
        let cp = 1.0 - 0.5 * z + z * z * (4.166_664_6e-2 + z * (-1.388_731_6e-3 + z * 2.443_315_7e-5));
        let quad = n & 3;
        let (a, b) = if quad & 1 == 0 { (sp, cp) } else { (cp, sp) };
        s[k] = if quad & 2 == 0 { a } else { -a };
        c[k] = if (quad + 1) & 2 == 0 { b } else { -b };
    }
    (s, c)
}

/// Per-lane rigid transform state: rotation entries `r[i*3+j]` and translation `p[i]`.
struct LaneFrames<const W: usize> {
    r: [[f32; W]; 9],
    p: [[f32; W]; 3],
}

impl<const W: usize> LaneFrames<W> {
    fn broadcast(t: &Transform) -> Self {
        let mut r = [[0.0; W]; 9];
        let mut p = [[0.0; W]; 3];
        for i in 0..3 {
            for j in 0..3 {
                r[i * 3 + j] = [t.rot.0[i][j] as f32; W];
            }
            p[i] = [t.trans.get(i) as f32; W];
        }
        LaneFrames { r, p }
    }

    /// `self = self * c` for a constant transform `c`.
    fn compose_const(&mut self, c: &Transform) {
        let cr = c.rot.0.map(|row| row.map(|v| v as f32));
        let ct = [c.trans.x as f32, c.trans.y as f32, c.trans.z as f32];
        for i in 0..3 {
            let (r0, r1, r2) = (self.r[i * 3], self.r[i * 3 + 1], self.r[i * 3 + 2]);
            for k in 0..W {
                self.p[i][k] += r0[k] * ct[0] + r1[k] * ct[1] + r2[k] * ct[2];
            }
            for j in 0..3 {
                let out = &mut self.r[i * 3 + j];
                for k in 0..W {
                    out[k] = r0[k] * cr[0][j] + r1[k] * cr[1][j] + r2[k] * cr[2][j];
                }
            }
        }
    }

    /// `self = self * Rot(axis, q_k)` per lane.
    fn rotate(&mut self, axis: Vec3, q: &[f32; W]) {
        let (ax, ay, az) = (axis.x as f32, axis.y as f32, axis.z as f32);
        let (s, c) = sincos_lanes(q);
        let mut m = [[0.0f32; W]; 9];
        for k in 0..W {
            let t = 1.0 - c[k];
            m[0][k] = t * ax * ax + c[k];
            m[1][k] = t * ax * ay - s[k] * az;
            m[2][k] = t * ax * az + s[k] * ay;
            m[3][k] = t * ax * ay + s[k] * az;
            m[4][k] = t * ay * ay + c[k];
            m[5][k] = t * ay * az - s[k] * ax;
            m[6][k] = t * ax * az - s[k] * ay;
            m[7][k] = t * ay * az + s[k] * ax;
            m[8][k] = t * az * az + c[k];
        }
        for i in 0..3 {
            let (r0, r1, r2) = (self.r[i * 3], self.r[i * 3 + 1], self.r[i * 3 + 2]);
            for j in 0..3 {
                let out = &mut self.r[i * 3 + j];
                let (m0, m1, m2) = (&m[j], &m[3 + j], &m[6 + j]);
                for k in 0..W {
                    out[k] = r0[k] * m0[k] + r1[k] * m1[k] + r2[k] * m2[k];
                }
            }
        }
    }

    /// `self = self * Trans(axis * q_k)` per lane.
    fn translate(&mut self, axis: Vec3, q: &[f32; W]) {
        let a = [axis.x as f32, axis.y as f32, axis.z as f32];
        for i in 0..3 {
            let (r0, r1, r2) = (&self.r[i * 3], &self.r[i * 3 + 1], &self.r[i * 3 + 2]);
            for k in 0..W {
                self.p[i][k] += (r0[k] * a[0] + r1[k] * a[1] + r2[k] * a[2]) * q[k];
            }
        }
    }

    fn emit_spheres(&self, robot: &RobotSpec, link: usize, out: &mut SphereBatch) {
        let (start, end) = robot.link_range(link);
        for (s, sphere) in robot.spheres()[start..end].iter().enumerate() {
            let c = [sphere.center.x as f32, sphere.center.y as f32, sphere.center.z as f32];
            let base = (start + s) * W;
            for (i, dst) in [&mut out.xs, &mut out.ys, &mut out.zs].into_iter().enumerate() {
                let (r0, r1, r2) = (&self.r[i * 3], &self.r[i * 3 + 1], &self.r[i * 3 + 2]);
                let p = &self.p[i];
                let dst: &mut [f32; W] = (&mut dst[base..base + W]).try_into().expect("lane slice");
                for k in 0..W {
                    dst[k] = r0[k] * c[0] + r1[k] * c[1] + r2[k] * c[2] + p[k];
                }
            }
        }
    }
}

fn fk_lanes<const W: usize>(robot: &RobotSpec, batch: &ConfigurationBatch, start: &Transform, out: &mut SphereBatch) {
    let mut lf = LaneFrames::<W>::broadcast(start);
    lf.emit_spheres(robot, 0, out);
    for (d, (joint, origin)) in robot.joints().iter().zip(robot.joint_origins()).enumerate() {
        lf.compose_const(origin);
        let q: &[f32; W] = batch.dof_lanes(d).try_into().expect("lane slice");
        match joint.kind {
            JointKind::Revolute => lf.rotate(joint.axis, q),
            JointKind::Prismatic => lf.translate(joint.axis, q),
        }
        lf.emit_spheres(robot, d + 1, out);
    }
}

/// Lane-parallel forward kinematics: one chain walk advances all lanes.
pub fn spheres_fk(robot: &RobotSpec, batch: &ConfigurationBatch, frame: Frame) -> SphereBatch {
    let w = batch.width();
    let n = robot.sphere_count();
    let mut out = SphereBatch {
        robot: batch.robot,
        frame,
        width: w,
        xs: vec![0.0; n * w],
        ys: vec![0.0; n * w],
        zs: vec![0.0; n * w],
        radii: robot.spheres().iter().map(|s| s.radius as f32).collect(),
        active: batch.active(),
    };
    let start = match frame {
        Frame::Robot => Transform::IDENTITY,
        Frame::World => *robot.base_transform(),
    };
    dispatch_width!(w, fk_lanes(robot, batch, &start, &mut out));
    out
}

/// An obstacle expressed in a robot's base frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LocalObstacle {
    Sphere { center: Vec3, radius: f64 },
    /// Box with half extents along its own axes; `rot` maps box axes into the robot frame.
    OrientedBox { center: Vec3, half_extents: Vec3, rot: Mat3 },
}

impl LocalObstacle {
    fn from_world(o: &Obstacle, inv: &Transform) -> LocalObstacle {
        match *o {
            Obstacle::Sphere { center, radius } => LocalObstacle::Sphere { center: inv.apply(center), radius },
            Obstacle::Box(b) => {
                let half = (b.max - b.min) * 0.5;
                let center = inv.apply(b.center());
                // a signed axis permutation keeps the box axis-aligned in the robot frame
                match axis_permutation(&inv.rot) {
                    Some(perm) => LocalObstacle::OrientedBox {
                        center,
                        half_extents: Vec3::new(half.get(perm[0]), half.get(perm[1]), half.get(perm[2])),
                        rot: Mat3::IDENTITY,
                    },
                    None => LocalObstacle::OrientedBox { center, half_extents: half, rot: inv.rot },
                }
            }
        }
    }

    /// Maps this obstacle back to the world frame through the robot's base transform.
    /// Boxes are returned as their world-frame bounding box, which is exact when
    /// the composed rotation is an axis permutation.
    pub fn to_world(&self, base: &Transform) -> Obstacle {
        match *self {
            LocalObstacle::Sphere { center, radius } => Obstacle::Sphere { center: base.apply(center), radius },
            LocalObstacle::OrientedBox { center, half_extents, rot } => {
                let r = base.rot.mul_mat(&rot);
                let c = base.apply(center);
                let ext = Vec3::new(
                    (0..3).map(|j| r.0[0][j].abs() * half_extents.get(j)).sum(),
                    (0..3).map(|j| r.0[1][j].abs() * half_extents.get(j)).sum(),
                    (0..3).map(|j| r.0[2][j].abs() * half_extents.get(j)).sum(),
                );
                Obstacle::Box(crate::model::Aabb::new(c - ext, c + ext))
            }
        }
    }

    pub fn is_axis_aligned(&self) -> bool {
        match self {
            LocalObstacle::Sphere { .. } => true,
            LocalObstacle::OrientedBox { rot, .. } => rot.is_identity(0.0),
        }
    }
}

/// For a rotation whose rows are signed unit axes, `perm[i]` is the world axis
/// that robot-frame axis `i` draws from.
fn axis_permutation(rot: &Mat3) -> Option<[usize; 3]> {
    const TOL: f64 = 1e-12;
    let mut perm = [0usize; 3];
    for (i, row) in rot.0.iter().enumerate() {
        let mut hit = None;
        for (j, v) in row.iter().enumerate() {
            if (v.abs() - 1.0).abs() <= TOL {
                hit = Some(j);
            } else if v.abs() > TOL {
                return None;
            }
        }
        perm[i] = hit?;
    }
    Some(perm)
}

/// f32 obstacle data consumed by the environment kernel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KernelObstacle {
    Sphere { center: [f32; 3], radius: f32 },
    Aabb { center: [f32; 3], half: [f32; 3] },
    Obb { center: [f32; 3], half: [f32; 3], rot: [[f32; 3]; 3] },
}

impl From<&LocalObstacle> for KernelObstacle {
    fn from(o: &LocalObstacle) -> Self {
        let f = |v: Vec3| [v.x as f32, v.y as f32, v.z as f32];
        match *o {
            LocalObstacle::Sphere { center, radius } => KernelObstacle::Sphere { center: f(center), radius: radius as f32 },
            LocalObstacle::OrientedBox { center, half_extents, rot } if rot.is_identity(0.0) => {
                KernelObstacle::Aabb { center: f(center), half: f(half_extents) }
            }
            LocalObstacle::OrientedBox { center, half_extents, rot } => KernelObstacle::Obb {
                center: f(center),
                half: f(half_extents),
                rot: rot.0.map(|row| row.map(|v| v as f32)),
            },
        }
    }
}

/// World obstacles transformed once into every robot's base frame.
#[derive(Clone, Debug, PartialEq)]
pub struct TransformedEnvironmentCache {
    local: Vec<Vec<LocalObstacle>>,
    kernel: Vec<Vec<KernelObstacle>>,
}

impl TransformedEnvironmentCache {
    pub fn robot_count(&self) -> usize {
        self.local.len()
    }

    pub fn obstacles(&self, robot: usize) -> &[LocalObstacle] {
        &self.local[robot]
    }

    pub fn kernel_obstacles(&self, robot: usize) -> &[KernelObstacle] {
        &self.kernel[robot]
    }
}

pub fn build_env_cache(robots: &[RobotSpec], env: &Environment) -> TransformedEnvironmentCache {
    let local: Vec<Vec<LocalObstacle>> = robots
        .iter()
        .map(|r| {
            let inv = r.base_transform().inverse();
            env.obstacles().iter().map(|o| LocalObstacle::from_world(o, &inv)).collect()
        })
        .collect();
    let kernel = local.iter().map(|os| os.iter().map(KernelObstacle::from).collect()).collect();
    TransformedEnvironmentCache { local, kernel }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Quat;
    use crate::model::{Aabb, Pose};
    use crate::reference;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_q(robot: &RobotSpec, rng: &mut ChaCha8Rng) -> Configuration {
        Configuration(robot.joints().iter().map(|j| rng.gen_range(j.limits[0]..j.limits[1])).collect())
    }

    #[test]
    fn sphere_bot_zero_and_translation() {
        let r = reference::sphere_bot();
        let s = fk_scalar(&r, &Configuration(vec![0.0; 3]), Frame::Robot);
        assert_eq!(s.centers, vec![Vec3::ZERO]);
        let s = fk_scalar(&r, &Configuration(vec![1.0, 2.0, 3.0]), Frame::World);
        assert_eq!(s.centers, vec![Vec3::new(1.0, 2.0, 3.0)]);
        assert_eq!(s.radii, vec![reference::SPHERE_BOT_RADIUS]);
    }

    #[test]
    fn sincos_lanes_match_libm() {
        let mut q = [0.0f32; 64];
        for step in 0..2000 {
            for (k, v) in q.iter_mut().enumerate() {
                *v = -20.0 + 40.0 * (step * 64 + k) as f32 / (2000.0 * 64.0);
            }
            let (s, c) = sincos_lanes(&q);
            for k in 0..64 {
                let x = q[k] as f64;
                assert!((s[k] as f64 - libm::sin(x)).abs() < 1e-6, "sin {x}");
                assert!((c[k] as f64 - libm::cos(x)).abs() < 1e-6, "cos {x}");
            }
        }
    }

    #[test]
    fn broadcast_batch_gives_identical_lanes() {
        let r = reference::arm7();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = random_q(&r, &mut rng);
        let b = spheres_fk(&r, &ConfigurationBatch::broadcast(0, &q, 8), Frame::World);
        for s in 0..b.sphere_count() {
            let (x, y, z) = b.sphere(s);
            assert!(x.iter().all(|v| *v == x[0]) && y.iter().all(|v| *v == y[0]) && z.iter().all(|v| *v == z[0]));
        }
    }

    #[test]
    fn batch_matches_scalar_per_lane() {
        let robots = [reference::arm7(), reference::arm3(), reference::sphere_bot()];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for robot in &robots {
            let based = robot.with_base_pose(Pose::new(
                Vec3::new(0.4, -1.0, 0.2),
                Quat::from_axis_angle(Vec3::new(0.0, 0.0, 1.0), 2.0),
            ));
            for _ in 0..200 {
                let qs: Vec<Configuration> = (0..8).map(|_| random_q(&based, &mut rng)).collect();
                let batch = ConfigurationBatch::from_configurations(0, &qs);
                for frame in [Frame::Robot, Frame::World] {
                    let sb = spheres_fk(&based, &batch, frame);
                    for (k, q) in qs.iter().enumerate() {
                        let s = fk_scalar(&based, q, frame);
                        for (i, c) in s.centers.iter().enumerate() {
                            assert!((sb.center(i, k) - *c).norm() < 1e-5);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn partial_batch_masks_inactive_lanes() {
        let r = reference::arm3();
        let qs: Vec<Configuration> = (0..3).map(|i| Configuration(vec![0.1 * i as f64; 3])).collect();
        let path = Path::new(0, qs).unwrap();
        let b = ConfigurationBatch::from_timesteps(&path, 3, &[0, 1, 2, 3, 4, 5, 6, 7], 3);
        assert_eq!(b.active(), LaneMask(0b111));
        let sb = spheres_fk(&r, &b, Frame::Robot);
        assert_eq!(sb.active().count(), 3);
    }

    #[test]
    fn identity_cache_equals_world() {
        let env = Environment::new(
            vec![
                Obstacle::Sphere { center: Vec3::new(0.5, 0.0, 0.0), radius: 0.1 },
                Obstacle::Box(Aabb::new(Vec3::new(-1.0, -1.0, -0.1), Vec3::new(1.0, 1.0, 0.0))),
            ],
            Aabb::new(Vec3::new(-2.0, -2.0, -2.0), Vec3::new(2.0, 2.0, 2.0)),
        )
        .unwrap();
        let cache = build_env_cache(&[reference::arm3()], &env);
        for (local, world) in cache.obstacles(0).iter().zip(env.obstacles()) {
            assert_eq!(local.to_world(&Transform::IDENTITY), *world);
        }
    }

    #[test]
    fn translated_base_shifts_obstacles() {
        let env = Environment::new(
            vec![Obstacle::Sphere { center: Vec3::new(0.5, 0.0, 0.0), radius: 0.1 }],
            Aabb::new(Vec3::new(-2.0, -2.0, -2.0), Vec3::new(2.0, 2.0, 2.0)),
        )
        .unwrap();
        let r = reference::arm3().with_base_pose(Pose::from_translation(Vec3::new(1.0, 0.0, 0.0)));
        let cache = build_env_cache(&[r], &env);
        assert_eq!(cache.obstacles(0)[0], LocalObstacle::Sphere { center: Vec3::new(-0.5, 0.0, 0.0), radius: 0.1 });
    }

    #[test]
    fn rotated_base_round_trips() {
        let env = Environment::new(
            vec![
                Obstacle::Sphere { center: Vec3::new(0.5, 0.3, 0.2), radius: 0.1 },
                Obstacle::Box(Aabb::new(Vec3::new(0.2, -0.4, 0.0), Vec3::new(0.9, 0.1, 0.3))),
            ],
            Aabb::new(Vec3::new(-2.0, -2.0, -2.0), Vec3::new(2.0, 2.0, 2.0)),
        )
        .unwrap();
        for angle in [0.3, core::f64::consts::FRAC_PI_2, core::f64::consts::PI] {
            let base = Pose::new(Vec3::new(0.3, 1.0, -0.2), Quat::from_axis_angle(Vec3::new(0.0, 0.0, 1.0), angle));
            let r = reference::arm3().with_base_pose(base);
            let cache = build_env_cache(core::slice::from_ref(&r), &env);
            for (local, world) in cache.obstacles(0).iter().zip(env.obstacles()) {
                let back = local.to_world(r.base_transform());
                match (back, world) {
                    (Obstacle::Sphere { center: a, .. }, Obstacle::Sphere { center: b, .. }) => {
                        assert!((a - *b).norm() < 1e-9)
                    }
                    (Obstacle::Box(a), Obstacle::Box(b)) => {
                        assert!((a.min - b.min).norm() < 1e-9 && (a.max - b.max).norm() < 1e-9)
                    }
                    _ => panic!("shape changed"),
                }
            }
            let generic = angle == 0.3;
            assert_eq!(cache.obstacles(0)[1].is_axis_aligned(), !generic);
        }
    }

    /// Independent forward kinematics: a product of homogeneous matrices.
    fn matrix_chain(robot: &RobotSpec, q: &Configuration) -> Vec<nalgebra::Point3<f64>> {
        use nalgebra::{Matrix4, Point3, Rotation3, Translation3, Unit, UnitQuaternion, Vector3};
        let pose = |p: &Pose| {
            let r = UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(p.rotation.w, p.rotation.x, p.rotation.y, p.rotation.z));
            Translation3::new(p.translation.x, p.translation.y, p.translation.z).to_homogeneous() * r.to_homogeneous()
        };
        let mut m: Matrix4<f64> = pose(robot.base_pose());
        let mut frames = vec![m];
        for (joint, &v) in robot.joints().iter().zip(q.values()) {
            let axis = Vector3::new(joint.axis.x, joint.axis.y, joint.axis.z);
            let motion = match joint.kind {
                crate::model::JointKind::Revolute => Rotation3::from_axis_angle(&Unit::new_normalize(axis), v).to_homogeneous(),
                crate::model::JointKind::Prismatic => Translation3::from(axis * v).to_homogeneous(),
            };
            m = m * pose(&joint.origin) * motion;
            frames.push(m);
        }
        let mut out = Vec::new();
        for (link, f) in frames.iter().enumerate() {
            let (a, b) = robot.link_range(link);
            for s in &robot.spheres()[a..b] {
                out.push(f.transform_point(&Point3::new(s.center.x, s.center.y, s.center.z)));
            }
        }
        out
    }

    #[test]
    fn scalar_fk_matches_matrix_chain() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let base = Pose::new(Vec3::new(0.3, 0.2, -0.1), Quat::from_axis_angle(Vec3::new(0.6, 0.0, 0.8), 0.7));
        for robot in [reference::arm3(), reference::arm7(), reference::sphere_bot()] {
            for r in [robot.clone(), robot.with_base_pose(base)] {
                for _ in 0..100 {
                    let q = random_q(&r, &mut rng);
                    let ours = fk_scalar(&r, &q, Frame::World);
                    for (c, p) in ours.centers.iter().zip(matrix_chain(&r, &q)) {
                        assert!((c.x - p.x).abs() < 1e-9 && (c.y - p.y).abs() < 1e-9 && (c.z - p.z).abs() < 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn world_frame_is_base_pose_applied_to_robot_frame() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let r = reference::arm7().with_base_pose(Pose::new(Vec3::new(1.0, -2.0, 0.5), Quat::from_axis_angle(Vec3::new(0.0, 1.0, 0.0), 1.1)));
        for _ in 0..50 {
            let q = random_q(&r, &mut rng);
            let local = fk_scalar(&r, &q, Frame::Robot);
            let world = fk_scalar(&r, &q, Frame::World);
            for (l, w) in local.centers.iter().zip(&world.centers) {
                assert!((r.base_transform().apply(*l) - *w).norm() < 1e-12);
            }
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(10_000))]
        #[test]
        fn lane_equals_scalar(seed in proptest::prelude::any::<u64>(), lane in 0usize..8) {
            let robot = reference::arm7();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let qs: Vec<Configuration> = (0..8).map(|_| random_q(&robot, &mut rng)).collect();
            let sb = spheres_fk(&robot, &ConfigurationBatch::from_configurations(0, &qs), Frame::World);
            let s = fk_scalar(&robot, &qs[lane], Frame::World);
            for (i, c) in s.centers.iter().enumerate() {
                proptest::prop_assert!((sb.center(i, lane) - *c).norm() < 1e-5);
            }
        }
    }
}
