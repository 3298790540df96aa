use mrmp::format::{environment_to_toml, load_robot_spec, parse_environment, parse_robot_spec, robot_spec_to_toml};
use mrmp_core::math::{Quat, Vec3};
use mrmp_core::model::{Aabb, Joint, JointKind, LinkSphere, Pose, RobotSpecParts};
use mrmp_core::{reference, Environment, Obstacle, RobotSpec};
use proptest::prelude::*;

fn specs_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("specs")
}

#[test]
fn shipped_robot_files_match_builtins() {
    for name in ["sphere-bot", "arm7", "arm3"] {
        let loaded = load_robot_spec(&specs_dir().join(format!("{name}.toml"))).unwrap();
        assert_eq!(loaded, reference::by_name(name).unwrap(), "{name}");
    }
}

fn vec3() -> impl Strategy<Value = Vec3> {
    (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn pose() -> impl Strategy<Value = Pose> {
    (vec3(), -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, 0.1..1.0f64).prop_map(|(t, x, y, z, w)| {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        Pose::new(t, Quat::new(w / n, x / n, y / n, z / n))
    })
}

fn joint() -> impl Strategy<Value = Joint> {
    (any::<bool>(), 0..3usize, pose(), 0.1..3.0f64).prop_map(|(revolute, a, origin, lim)| {
        let mut axis = [0.0; 3];
        axis[a] = 1.0;
        Joint {
            kind: if revolute { JointKind::Revolute } else { JointKind::Prismatic },
            axis: Vec3::from_array(axis),
            origin,
            limits: [-lim, lim],
        }
    })
}

fn robot() -> impl Strategy<Value = RobotSpec> {
    (1..5usize)
        .prop_flat_map(|dof| {
            (
                prop::collection::vec(joint(), dof),
                pose(),
                prop::collection::vec(prop::collection::vec((vec3(), 0.01..0.5f64), 1..3), dof + 1),
                prop::collection::vec(0.01..0.5f64, dof),
            )
        })
        .prop_map(|(joints, base_pose, spheres, max_step)| {
            let links = spheres.len();
            RobotSpec::new(RobotSpecParts {
                name: "random".into(),
                joints,
                base_pose,
                link_spheres: spheres.into_iter().map(|l| l.into_iter().map(|(center, radius)| LinkSphere { center, radius }).collect()).collect(),
                self_collision_pairs: if links > 2 { vec![(0, links - 1)] } else { vec![] },
                max_step,
            })
            .unwrap()
        })
}

fn environment() -> impl Strategy<Value = Environment> {
    let obstacle = prop_oneof![
        (vec3(), 0.01..1.0f64).prop_map(|(center, radius)| Obstacle::Sphere { center, radius }),
        (vec3(), vec3()).prop_map(|(a, b)| {
            let min = Vec3::new(a.x.min(b.x), a.y.min(b.y), a.z.min(b.z));
            let max = Vec3::new(a.x.max(b.x) + 0.01, a.y.max(b.y) + 0.01, a.z.max(b.z) + 0.01);
            Obstacle::Box(Aabb::new(min, max))
        }),
    ];
    prop::collection::vec(obstacle, 0..6)
        .prop_map(|obs| Environment::new(obs, Aabb::new(Vec3::new(-5.0, -5.0, -5.0), Vec3::new(5.0, 5.0, 5.0))).unwrap())
}

proptest! {
    #[test]
    fn robot_toml_round_trip(r in robot()) {
        let text = robot_spec_to_toml(&r).unwrap();
        prop_assert_eq!(parse_robot_spec(&text).unwrap(), r);
    }

    #[test]
    fn environment_toml_round_trip(e in environment()) {
        let text = environment_to_toml(&e).unwrap();
        prop_assert_eq!(parse_environment(&text).unwrap(), e);
    }
}

#[test]
fn shipped_configs_parse() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let bench: mrmp::bench::BenchConfig = toml::from_str(&std::fs::read_to_string(dir.join("bench-small.toml")).unwrap()).unwrap();
    assert_eq!(bench.planners.len(), 5);
    let v: mrmp::motions::ValidateBenchConfig = toml::from_str(&std::fs::read_to_string(dir.join("validate.toml")).unwrap()).unwrap();
    assert_eq!(v.robot_counts, vec![4, 8, 16]);
}
