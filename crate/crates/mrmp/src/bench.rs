//! Planner trials: single runs, the planner x backend x scenario sweep, and
//! the speedup and CDF aggregates.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path as FsPath, PathBuf};

use anyhow::{bail, Context, Result};
use mrmp_core::planners::{Failure, PlanOutcome, Planner, PlannerConfig, PlanningProblem, ProblemError};
use mrmp_core::scenarios::ScenarioError;
use mrmp_core::validation::{CheckOrder, PackingStrategy};
use mrmp_core::{Backend, MotValStrategy};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::motions::strategy_label;
use crate::{parse_scenario_id, WallClock};

/// One planner run. Every field is populated, failures included.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub scenario: String,
    pub planner: String,
    pub backend: String,
    pub strategy: String,
    pub batch_size: usize,
    pub lane_precision: String,
    pub seed: u64,
    pub success: bool,
    pub outcome: String,
    pub wall_time: f64,
    pub effort_env_pct: f64,
    pub effort_rr_pct: f64,
    pub effort_pct: f64,
    pub cc_calls: u64,
    pub iterations: u64,
    pub branches: u64,
    /// Sum of path lengths; 0 when unsolved.
    pub cost: usize,
}

pub fn backend_name(b: &Backend) -> &'static str {
    match b {
        Backend::Batched(_) => "batched",
        Backend::Scalar => "scalar-oracle",
    }
}

pub fn parse_backend(name: &str, strategy: MotValStrategy) -> Result<Backend> {
    match name {
        "batched" => Ok(Backend::Batched(strategy)),
        "scalar" | "scalar-oracle" => Ok(Backend::Scalar),
        _ => bail!("unknown backend `{name}` (batched | scalar)"),
    }
}

/// Parses `<order>-<packing>`, e.g. `hierarchical-rake`.
pub fn parse_strategy(name: &str, batch_size: usize) -> Result<MotValStrategy> {
    let (order, packing) = name.split_once('-').with_context(|| format!("strategy `{name}` is not <order>-<packing>"))?;
    let order = match order {
        "hierarchical" => CheckOrder::Hierarchical,
        "combined" => CheckOrder::Combined,
        _ => bail!("unknown check order `{order}`"),
    };
    let packing = match packing {
        "rake" => PackingStrategy::Rake,
        "linear" => PackingStrategy::Linear,
        _ => bail!("unknown packing `{packing}`"),
    };
    if !batch_size.is_power_of_two() || batch_size > 64 {
        bail!("batch size {batch_size} must be a power of two up to 64");
    }
    Ok(MotValStrategy::new(order, packing, batch_size))
}

fn outcome_name(outcome: &PlanOutcome) -> &'static str {
    match outcome.failure {
        None => "solved",
        Some(Failure::Timeout) => "timeout",
        Some(Failure::Exhausted) => "exhausted",
        Some(Failure::Disconnected { .. }) => "disconnected",
    }
}

/// Runs one planner on `problem`; wall time covers the planner call only.
pub fn run_trial(problem: &PlanningProblem, scenario: &str, planner: Planner, config: &PlannerConfig) -> (TrialRecord, PlanOutcome) {
    let clock = WallClock::start();
    let outcome = planner.plan(problem, config, &clock);
    let wall_time = mrmp_core::planners::Clock::elapsed(&clock);
    let s = &outcome.stats;
    let (strategy, batch_size, precision) = match config.backend {
        Backend::Batched(st) => (strategy_label(&st), st.batch_size, "f32"),
        Backend::Scalar => ("sequential".to_string(), 1, "f64"),
    };
    let record = TrialRecord {
        scenario: scenario.to_string(),
        planner: planner.name().to_string(),
        backend: backend_name(&config.backend).to_string(),
        strategy,
        batch_size,
        lane_precision: precision.to_string(),
        seed: problem.seed,
        success: outcome.solution.is_some(),
        outcome: outcome_name(&outcome).to_string(),
        wall_time,
        effort_env_pct: 100.0 * s.cc_calls.env_fraction(),
        effort_rr_pct: 100.0 * s.cc_calls.rr_fraction(),
        effort_pct: 100.0 * s.cc_calls.fraction(),
        cc_calls: s.cc_calls.performed(),
        iterations: s.iterations,
        branches: s.branches,
        cost: outcome.solution.as_ref().map_or(0, |sol| sol.cost()),
    };
    (record, outcome)
}

/// Process exit codes of `mrmp plan`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlanExit {
    Solved = 0,
    Timeout = 2,
    Infeasible = 3,
    Exhausted = 4,
}

/// True when `err` stems from a problem whose starts or goals are invalid.
pub fn is_infeasible_input(err: &anyhow::Error) -> bool {
    err.chain().any(|e| {
        e.downcast_ref::<ProblemError>().is_some() || matches!(e.downcast_ref::<ScenarioError>(), Some(ScenarioError::Problem(_)))
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub scenario: String,
    pub planner: String,
    pub seed: u64,
    /// `paths[robot][timestep]` is a joint vector.
    pub paths: Vec<Vec<Vec<f64>>>,
}

/// Runs one trial and writes `solution.json` (when solved) and appends the
/// record to `trials.jsonl` in `out`.
pub fn cmd_plan(problem: &PlanningProblem, scenario: &str, planner: Planner, config: &PlannerConfig, out: &FsPath) -> Result<(PlanExit, TrialRecord)> {
    let (record, outcome) = run_trial(problem, scenario, planner, config);
    std::fs::create_dir_all(out)?;
    if let Some(sol) = &outcome.solution {
        let file = SolutionFile {
            scenario: scenario.to_string(),
            planner: planner.name().to_string(),
            seed: problem.seed,
            paths: sol.paths.iter().map(|p| p.waypoints().iter().map(|q| q.0.clone()).collect()).collect(),
        };
        std::fs::write(out.join("solution.json"), serde_json::to_string_pretty(&file)?)?;
    }
    let mut f = std::fs::OpenOptions::new().create(true).append(true).open(out.join("trials.jsonl"))?;
    writeln!(f, "{}", serde_json::to_string(&record)?)?;
    let exit = match outcome.failure {
        None => PlanExit::Solved,
        Some(Failure::Timeout) => PlanExit::Timeout,
        Some(_) => PlanExit::Exhausted,
    };
    Ok((exit, record))
}

/// Sweep description; see the README for the file layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub planners: Vec<String>,
    #[serde(default = "both_backends")]
    pub backends: Vec<String>,
    pub scenarios: Vec<String>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_time_limit")]
    pub time_limit: f64,
    #[serde(default = "default_strategy")]
    pub strategy: String,
    #[serde(default = "default_width")]
    pub batch_size: usize,
    #[serde(default = "one")]
    pub jobs: usize,
    /// Overrides the per-search iteration cap.
    #[serde(default)]
    pub max_iterations: Option<usize>,
}

fn both_backends() -> Vec<String> {
    vec!["batched".into(), "scalar".into()]
}

fn default_time_limit() -> f64 {
    60.0
}

fn default_strategy() -> String {
    "hierarchical-rake".into()
}

fn default_width() -> usize {
    8
}

fn one() -> usize {
    1
}

/// Mean scalar/batched wall-time ratio over (scenario, seed) pairs solved by
/// both backends.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedupEstimate {
    pub planner: String,
    pub scenario: String,
    pub mean_speedup: Option<f64>,
    pub pairs: usize,
    /// Fewer than 10 pairs.
    pub sparse: bool,
}

pub fn speedups(records: &[TrialRecord]) -> Vec<SpeedupEstimate> {
    // (planner, scenario) -> seed -> [batched, scalar] solve times
    type Cells = BTreeMap<(String, String), BTreeMap<u64, [Option<f64>; 2]>>;
    let mut cells: Cells = BTreeMap::new();
    for r in records {
        let slot = match r.backend.as_str() {
            "batched" => 0,
            _ => 1,
        };
        let seeds = cells.entry((r.planner.clone(), r.scenario.clone())).or_default();
        seeds.entry(r.seed).or_default()[slot] = r.success.then_some(r.wall_time);
    }
    cells
        .into_iter()
        .map(|((planner, scenario), seeds)| {
            let ratios: Vec<f64> = seeds.values().filter_map(|[b, s]| Some(s.as_ref()? / b.as_ref()?.max(1e-9))).collect();
            let pairs = ratios.len();
            SpeedupEstimate {
                planner,
                scenario,
                mean_speedup: (pairs > 0).then(|| ratios.iter().sum::<f64>() / pairs as f64),
                pairs,
                sparse: pairs < 10,
            }
        })
        .collect()
}

/// Row of a solve-time CDF: fraction of trials solved within `wall_time`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CdfRow {
    pub planner: String,
    pub scenario: String,
    pub backend: String,
    pub wall_time: f64,
    pub solved_fraction: f64,
}

pub fn cdf_rows(records: &[TrialRecord]) -> Vec<CdfRow> {
    let mut groups: BTreeMap<(String, String, String), (usize, Vec<f64>)> = BTreeMap::new();
    for r in records {
        let g = groups.entry((r.planner.clone(), r.scenario.clone(), r.backend.clone())).or_default();
        g.0 += 1;
        if r.success {
            g.1.push(r.wall_time);
        }
    }
    let mut rows = Vec::new();
    for ((planner, scenario, backend), (trials, mut times)) in groups {
        times.sort_by(f64::total_cmp);
        for (k, t) in times.iter().enumerate() {
            rows.push(CdfRow {
                planner: planner.clone(),
                scenario: scenario.clone(),
                backend: backend.clone(),
                wall_time: *t,
                solved_fraction: (k + 1) as f64 / trials as f64,
            });
        }
    }
    rows
}

pub struct BenchReport {
    pub records: Vec<TrialRecord>,
    pub speedups: Vec<SpeedupEstimate>,
    pub trials_path: PathBuf,
}

/// Runs the full sweep. Both backends of a (planner, scenario, seed) cell
/// share one generated problem; records are written in cell order whatever
/// the number of worker threads.
pub fn cmd_bench(config: &BenchConfig, out: &FsPath) -> Result<BenchReport> {
    let strategy = parse_strategy(&config.strategy, config.batch_size)?;
    let planners = config
        .planners
        .iter()
        .map(|p| Planner::from_name(p).with_context(|| format!("unknown planner `{p}`")))
        .collect::<Result<Vec<_>>>()?;
    let backends = config.backends.iter().map(|b| parse_backend(b, strategy)).collect::<Result<Vec<_>>>()?;
    let mut problems = Vec::new();
    for id in &config.scenarios {
        for &seed in &config.seeds {
            let mut spec = parse_scenario_id(id, seed)?;
            spec.time_limit = config.time_limit;
            problems.push((id.clone(), spec.generate().with_context(|| format!("generating {id} seed {seed}"))?));
        }
    }
    let mut cells = Vec::new();
    for (k, _) in problems.iter().enumerate() {
        for &planner in &planners {
            for &backend in &backends {
                let mut pc = PlannerConfig { backend, ..PlannerConfig::default() };
                if let Some(m) = config.max_iterations {
                    pc.max_iterations = m;
                }
                cells.push((k, planner, pc));
            }
        }
    }
    // Backends of one (problem, planner) run back to back; which goes first
    // alternates between problems so warm caches favour neither side.
    let per_group = backends.len().max(1);
    let order: Vec<usize> = (0..cells.len())
        .map(|c| {
            let (group, slot) = (c / per_group, c % per_group);
            if cells[c].0 % 2 == 1 {
                group * per_group + per_group - 1 - slot
            } else {
                c
            }
        })
        .collect();
    let run = |&c: &usize| {
        let (k, planner, pc) = &cells[c];
        let (id, problem) = &problems[*k];
        (c, run_trial(problem, id, *planner, pc).0)
    };
    let mut indexed: Vec<(usize, TrialRecord)> = if config.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(config.jobs).build()?;
        pool.install(|| order.par_iter().map(run).collect())
    } else {
        order.iter().map(run).collect()
    };
    indexed.sort_by_key(|(c, _)| *c);
    let records: Vec<TrialRecord> = indexed.into_iter().map(|(_, r)| r).collect();

    std::fs::create_dir_all(out)?;
    let trials_path = out.join("trials.jsonl");
    let mut w = BufWriter::new(File::create(&trials_path)?);
    for r in &records {
        writeln!(w, "{}", serde_json::to_string(r)?)?;
    }
    w.flush()?;
    let speedups = speedups(&records);
    let mut csv_w = csv::Writer::from_path(out.join("speedups.csv"))?;
    for s in &speedups {
        csv_w.serialize(s)?;
    }
    csv_w.flush()?;
    let mut cdf_w = csv::Writer::from_path(out.join("cdf.csv"))?;
    for row in cdf_rows(&records) {
        cdf_w.serialize(row)?;
    }
    cdf_w.flush()?;
    Ok(BenchReport { records, speedups, trials_path })
}

/// JSON-lines records with every `wall_time` field removed, for comparing
/// reruns.
pub fn records_without_wall_time(jsonl: &str) -> Result<Vec<serde_json::Value>> {
    jsonl
        .lines()
        .map(|line| {
            let mut v: serde_json::Value = serde_json::from_str(line)?;
            if let Some(o) = v.as_object_mut() {
                o.remove("wall_time");
            }
            Ok(v)
        })
        .collect()
}
