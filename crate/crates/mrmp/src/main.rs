use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mrmp::bench::{cmd_bench, cmd_plan, is_infeasible_input, parse_backend, parse_strategy, BenchConfig, PlanExit};
use mrmp::format::{load_problem, load_robot_spec, problem_to_toml, robot_spec_to_toml, scenario_to_toml};
use mrmp::motions::{cmd_validate_bench, Keep, ValidateBenchConfig};
use mrmp::{parse_scenario_id, OUT_DIR_VAR};
use mrmp_core::planners::{Planner, PlannerConfig};
use mrmp_core::reference;

#[derive(Parser)]
#[command(name = "mrmp", version, about = "Batched motion validation and multi-robot planning benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutArg {
    /// Output directory.
    #[arg(long, env = OUT_DIR_VAR, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Compare validation strategies against the scalar oracle on random arm motions.
    ValidateBench(ValidateBenchArgs),
    /// Solve one problem with one planner.
    Plan(PlanArgs),
    /// Run a planner x backend x scenario x seed sweep from a TOML file.
    Bench {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `jobs` in the config.
        #[arg(long)]
        jobs: Option<usize>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Scenario utilities.
    #[command(subcommand)]
    Scenario(ScenarioCmd),
    /// Robot description utilities.
    #[command(subcommand)]
    Robot(RobotCmd),
}

#[derive(Subcommand)]
enum RobotCmd {
    /// Print a built-in robot (`sphere-bot`, `arm7`, `arm3`) as TOML.
    Show { name: String },
    /// Load a robot TOML file and report its size.
    Check { path: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Obstacles {
    On,
    Off,
    Both,
}

#[derive(Args)]
struct ValidateBenchArgs {
    /// TOML file; command-line values are ignored when given.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_values_t = [4usize, 8, 16])]
    robots: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    motions: usize,
    #[arg(long, value_enum, default_value_t = Obstacles::Both)]
    obstacles: Obstacles,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 8)]
    batch_size: usize,
    /// Keep only motions the oracle rejects.
    #[arg(long)]
    invalid_only: bool,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct PlanArgs {
    /// Scenario id such as `cross-4`, `cage-2` or `heterogeneous-2-4`.
    #[arg(long, conflicts_with = "problem", required_unless_present = "problem")]
    scenario: Option<String>,
    /// Problem TOML file.
    #[arg(long)]
    problem: Option<PathBuf>,
    #[arg(long, default_value = "arc")]
    planner: String,
    /// `batched` or `scalar`.
    #[arg(long, default_value = "batched")]
    backend: String,
    #[arg(long, default_value = "hierarchical-rake")]
    strategy: String,
    #[arg(long, default_value_t = 8)]
    batch_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Subcommand)]
enum ScenarioCmd {
    /// Print a scenario as TOML.
    Gen {
        #[arg(long)]
        scenario: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Emit the fully expanded problem (robots, environment, starts, goals).
        #[arg(long)]
        expand: bool,
        /// Write to this file instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn validate_bench(args: ValidateBenchArgs) -> Result<()> {
    let config = match &args.config {
        Some(path) => toml::from_str(&std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?)?,
        None => ValidateBenchConfig {
            robot_counts: args.robots,
            motions: args.motions,
            obstacles: match args.obstacles {
                Obstacles::On => vec![true],
                Obstacles::Off => vec![false],
                Obstacles::Both => vec![false, true],
            },
            seed: args.seed,
            batch_size: args.batch_size,
            keep: if args.invalid_only { Keep::Invalid } else { Keep::All },
        },
    };
    let (path, rows) = cmd_validate_bench(&config, &args.out.out)?;
    println!("{:>6} {:>9} {:<20} {:>9} {:>9} {:>9} {:>8}", "robots", "obstacles", "strategy", "effort%", "env%", "rr%", "speedup");
    for r in rows {
        println!(
            "{:>6} {:>9} {:<20} {:>9.2} {:>9.2} {:>9.2} {:>8.2}",
            r.robots, r.obstacles, r.strategy, r.effort_pct, r.env_effort_pct, r.rr_effort_pct, r.speedup_vs_oracle
        );
    }
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn plan(args: PlanArgs) -> Result<PlanExit> {
    let planner = Planner::from_name(&args.planner).with_context(|| format!("unknown planner `{}`", args.planner))?;
    let strategy = parse_strategy(&args.strategy, args.batch_size)?;
    let backend = parse_backend(&args.backend, strategy)?;
    let (id, mut problem) = match (&args.scenario, &args.problem) {
        (Some(id), _) => (id.clone(), parse_scenario_id(id, args.seed)?.generate()?),
        (None, Some(path)) => (path.display().to_string(), load_problem(path)?),
        (None, None) => bail!("either --scenario or --problem is required"),
    };
    if args.problem.is_some() {
        problem.seed = args.seed;
    }
    if let Some(t) = args.time_limit {
        problem.time_limit = t;
    }
    let config = PlannerConfig { backend, ..PlannerConfig::default() };
    let (exit, record) = cmd_plan(&problem, &id, planner, &config, &args.out.out)?;
    println!("{}", serde_json::to_string(&record)?);
    Ok(exit)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::ValidateBench(args) => validate_bench(args)?,
        Command::Plan(args) => {
            return match plan(args) {
                Ok(exit) => Ok(ExitCode::from(exit as u8)),
                Err(e) if is_infeasible_input(&e) => {
                    eprintln!("infeasible problem: {e:#}");
                    Ok(ExitCode::from(PlanExit::Infeasible as u8))
                }
                Err(e) => Err(e),
            };
        }
        Command::Bench { config, jobs, out } => {
            let text = std::fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let mut config: BenchConfig = toml::from_str(&text)?;
            if let Some(j) = jobs {
                config.jobs = j;
            }
            let report = cmd_bench(&config, &out.out)?;
            let solved = report.records.iter().filter(|r| r.success).count();
            println!("{solved}/{} trials solved", report.records.len());
            for s in &report.speedups {
                let mean = s.mean_speedup.map_or("n/a".to_string(), |m| format!("{m:.2}x"));
                let flag = if s.pairs == 0 { " (omitted: no paired successes)" } else if s.sparse { " (sparse)" } else { "" };
                println!("{:<14} {:<22} {mean} over {} pairs{flag}", s.planner, s.scenario, s.pairs);
            }
            eprintln!("wrote {}", report.trials_path.display());
        }
        Command::Scenario(ScenarioCmd::Gen { scenario, seed, expand, output }) => {
            let spec = parse_scenario_id(&scenario, seed)?;
            let text = if expand { problem_to_toml(&spec.generate()?)? } else { scenario_to_toml(&spec)? };
            match output {
                Some(path) => std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?,
                None => print!("{text}"),
            }
        }
        Command::Robot(RobotCmd::Show { name }) => {
            let robot = reference::by_name(&name).with_context(|| format!("no built-in robot `{name}`"))?;
            print!("{}", robot_spec_to_toml(&robot)?);
        }
        Command::Robot(RobotCmd::Check { path }) => {
            let r = load_robot_spec(&path)?;
            println!("{}: {} dof, {} links, {} spheres", r.name(), r.dof(), r.link_count(), r.sphere_count());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
