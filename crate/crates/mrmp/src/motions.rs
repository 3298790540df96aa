//! Random multi-robot motion sets and the validation-effort benchmark.

use std::path::{Path as FsPath, PathBuf};
use std::time::Instant;

use anyhow::Result;
use mrmp_core::model::discretize_motion;
use mrmp_core::scenarios::{ScenarioFamily, ScenarioSpec};
use mrmp_core::validation::{motion_validation, oracle_validate, oracle_validate_counted, CheckOrder, PackingStrategy};
use mrmp_core::{build_env_cache, Configuration, EffortCounter, Environment, MotValStrategy, Path, RobotSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Which sampled motions to keep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Keep {
    All,
    Invalid,
}

/// An arm7 team in the cage layout; `obstacles = false` keeps only the bounds.
pub fn arm_team(n: usize, obstacles: bool) -> Result<(Vec<RobotSpec>, Environment)> {
    let p = ScenarioSpec::new(ScenarioFamily::Cage, n, 0, 0).generate()?;
    let env = if obstacles { p.env } else { Environment::empty(*p.env.bounds()) };
    Ok((p.robots, env))
}

fn random_q(robot: &RobotSpec, rng: &mut ChaCha8Rng) -> Configuration {
    Configuration(robot.joints().iter().map(|j| rng.gen_range(j.limits[0]..j.limits[1])).collect())
}

/// `count` straight-line motions, one uniformly random start/goal pair per
/// robot. With `isolate`, each robot's own motion is resampled until it is
/// free of obstacles and self-collision, so only robot-robot checks can fail.
pub fn sample_motions(robots: &[RobotSpec], env: &Environment, count: usize, seed: u64, keep: Keep, isolate: bool) -> Vec<Vec<Path>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let paths: Vec<Path> = robots
            .iter()
            .enumerate()
            .map(|(r, robot)| loop {
                let p = discretize_motion(robot, r, &random_q(robot, &mut rng), &random_q(robot, &mut rng));
                if !isolate || oracle_validate(robots, std::slice::from_ref(&p), env) {
                    break p;
                }
            })
            .collect();
        if keep == Keep::All || !oracle_validate(robots, &paths, env) {
            out.push(paths);
        }
    }
    out
}

pub fn strategy_label(s: &MotValStrategy) -> String {
    let order = match s.order {
        CheckOrder::Hierarchical => "hierarchical",
        CheckOrder::Combined => "combined",
    };
    let packing = match s.packing {
        PackingStrategy::Rake => "rake",
        PackingStrategy::Linear => "linear",
    };
    format!("{order}-{packing}")
}

/// Aggregate over one motion set for one strategy (or the scalar oracle).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyRow {
    pub robots: usize,
    pub obstacles: bool,
    pub strategy: String,
    pub batch_size: usize,
    pub lane_precision: String,
    pub motions: usize,
    pub invalid: usize,
    /// Mean percentage of kernel calls performed before the verdict.
    pub effort_pct: f64,
    pub env_effort_pct: f64,
    pub rr_effort_pct: f64,
    pub wall_time: f64,
    pub speedup_vs_oracle: f64,
    /// Motions whose verdict differs from the oracle.
    pub disagreements: usize,
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Runs every order/packing combination and the oracle over `motions`.
pub fn run_validation_bench(robots: &[RobotSpec], env: &Environment, motions: &[Vec<Path>], batch_size: usize, obstacles: bool) -> Vec<StrategyRow> {
    let cache = build_env_cache(robots, env);
    let started = Instant::now();
    let mut oracle_verdicts = Vec::with_capacity(motions.len());
    let mut oracle_effort = Vec::with_capacity(motions.len());
    for m in motions {
        let mut e = EffortCounter::default();
        oracle_verdicts.push(oracle_validate_counted(robots, m, env, true, &mut e));
        oracle_effort.push(e);
    }
    let oracle_time = started.elapsed().as_secs_f64();
    let invalid = oracle_verdicts.iter().filter(|v| !**v).count();
    let row = |strategy: String, bs: usize, precision: &str, effort: &[EffortCounter], wall_time: f64, disagreements: usize| StrategyRow {
        robots: robots.len(),
        obstacles,
        strategy,
        batch_size: bs,
        lane_precision: precision.to_string(),
        motions: motions.len(),
        invalid,
        effort_pct: 100.0 * mean(effort.iter().map(EffortCounter::fraction)),
        env_effort_pct: 100.0 * mean(effort.iter().map(EffortCounter::env_fraction)),
        rr_effort_pct: 100.0 * mean(effort.iter().map(EffortCounter::rr_fraction)),
        wall_time,
        speedup_vs_oracle: if wall_time > 0.0 { oracle_time / wall_time } else { f64::INFINITY },
        disagreements,
    };
    let mut rows = Vec::new();
    for s in MotValStrategy::all(batch_size) {
        let started = Instant::now();
        let mut effort = Vec::with_capacity(motions.len());
        let mut verdicts = Vec::with_capacity(motions.len());
        for m in motions {
            let mut e = EffortCounter::default();
            verdicts.push(motion_validation(robots, m, env, &cache, s, &mut e).expect("sampled motions match the team"));
            effort.push(e);
        }
        let t = started.elapsed().as_secs_f64();
        let disagreements = verdicts.iter().zip(&oracle_verdicts).filter(|(a, b)| a != b).count();
        rows.push(row(strategy_label(&s), batch_size, "f32", &effort, t, disagreements));
    }
    rows.push(row("scalar-oracle".to_string(), 1, "f64", &oracle_effort, oracle_time, 0));
    rows
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateBenchConfig {
    pub robot_counts: Vec<usize>,
    pub motions: usize,
    #[serde(default = "both")]
    pub obstacles: Vec<bool>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_width")]
    pub batch_size: usize,
    #[serde(default = "keep_all")]
    pub keep: Keep,
}

fn both() -> Vec<bool> {
    vec![false, true]
}

fn default_width() -> usize {
    8
}

fn keep_all() -> Keep {
    Keep::All
}

/// Writes `validate_bench.csv` into `out` and returns the rows.
pub fn cmd_validate_bench(config: &ValidateBenchConfig, out: &FsPath) -> Result<(PathBuf, Vec<StrategyRow>)> {
    anyhow::ensure!(config.batch_size.is_power_of_two() && config.batch_size <= 64, "batch size must be a power of two up to 64");
    anyhow::ensure!(!config.robot_counts.is_empty() && config.robot_counts.iter().all(|&n| n >= 1), "robot counts must be positive");
    let mut rows = Vec::new();
    for &n in &config.robot_counts {
        for &obstacles in &config.obstacles {
            let (robots, env) = arm_team(n, obstacles)?;
            let seed = config.seed ^ ((n as u64) << 16) ^ u64::from(obstacles);
            let motions = sample_motions(&robots, &env, config.motions, seed, config.keep, !obstacles);
            rows.extend(run_validation_bench(&robots, &env, &motions, config.batch_size, obstacles));
        }
    }
    std::fs::create_dir_all(out)?;
    let path = out.join("validate_bench.csv");
    let mut w = csv::Writer::from_path(&path)?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok((path, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use mrmp_core::reference;
    use mrmp_core::model::Aabb;
    use mrmp_core::math::Vec3;

    fn bots() -> (Vec<RobotSpec>, Environment) {
        let env = Environment::empty(Aabb::new(Vec3::new(-9.0, -9.0, -9.0), Vec3::new(9.0, 9.0, 9.0)));
        (vec![reference::sphere_bot_with(0.1, 8.0); 2], env)
    }

    #[test]
    fn valid_motions_cost_full_effort() {
        let (robots, env) = bots();
        let motions = vec![vec![
            discretize_motion(&robots[0], 0, &Configuration(vec![0.0, 0.0, 0.0]), &Configuration(vec![3.0, 0.0, 0.0])),
            discretize_motion(&robots[1], 1, &Configuration(vec![0.0, 1.0, 0.0]), &Configuration(vec![3.0, 1.0, 0.0])),
        ]];
        for row in run_validation_bench(&robots, &env, &motions, 8, false) {
            assert_eq!(row.effort_pct, 100.0, "{}", row.strategy);
            assert_eq!(row.disagreements, 0);
        }
    }

    #[test]
    fn collision_at_start_stops_in_first_batch() {
        let (robots, env) = bots();
        // 31 timesteps -> 4 batches of 8; both robots start coincident
        let motions = vec![vec![
            discretize_motion(&robots[0], 0, &Configuration(vec![0.0, 0.0, 0.0]), &Configuration(vec![3.0, 0.0, 0.0])),
            discretize_motion(&robots[1], 1, &Configuration(vec![0.0, 0.0, 0.0]), &Configuration(vec![-3.0, 0.0, 0.0])),
        ]];
        let rows = run_validation_bench(&robots, &env, &motions, 8, false);
        for row in &rows[..4] {
            // env sweep: 2 robots x 4 batches, robot-robot: 1 pair x 4 batches
            let expected = if row.strategy.starts_with("hierarchical") { (8.0 + 1.0) / 12.0 } else { 3.0 / 12.0 };
            assert!((row.effort_pct - 100.0 * expected).abs() < 1e-9, "{} {}", row.strategy, row.effort_pct);
            assert!((row.rr_effort_pct - 25.0).abs() < 1e-9);
        }
    }

    #[test]
    fn schema_has_four_strategies_and_oracle() {
        let dir = tempfile::tempdir().unwrap();
        let config = ValidateBenchConfig { robot_counts: vec![2], motions: 20, obstacles: vec![false], seed: 1, batch_size: 8, keep: Keep::All };
        let (path, rows) = cmd_validate_bench(&config, dir.path()).unwrap();
        assert_eq!(rows.len(), 5);
        assert!(rows.iter().all(|r| (0.0..=100.0).contains(&r.effort_pct) && r.disagreements == 0));
        let text = std::fs::read_to_string(path).unwrap();
        assert_eq!(text.lines().count(), 6);
    }

    #[test]
    fn isolated_sampling_keeps_robots_individually_free() {
        let (robots, env) = arm_team(2, false).unwrap();
        for m in sample_motions(&robots, &env, 10, 3, Keep::All, true) {
            for p in &m {
                assert!(oracle_validate(&robots, std::slice::from_ref(p), &env));
            }
        }
    }
}
