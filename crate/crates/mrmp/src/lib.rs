//! Std companion to `mrmp-core`: TOML file formats, a wall clock for the
//! planners, the validation-effort and planner benchmarks, and the CLI
//! plumbing behind the `mrmp` binary.

pub mod bench;
pub mod format;
pub mod motions;

use std::time::Instant;

use anyhow::{bail, Context, Result};
use mrmp_core::planners::Clock;
use mrmp_core::scenarios::{ScenarioFamily, ScenarioSpec};

/// Environment variable naming the default output directory.
pub const OUT_DIR_VAR: &str = "MRMP_OUT_DIR";

/// Wall clock started at construction.
#[derive(Clone, Copy, Debug)]
pub struct WallClock(Instant);

impl WallClock {
    pub fn start() -> Self {
        WallClock(Instant::now())
    }
}

impl Clock for WallClock {
    fn elapsed(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

/// Parses `cage-N`, `cross-N` or `heterogeneous-A-S`.
pub fn parse_scenario_id(id: &str, seed: u64) -> Result<ScenarioSpec> {
    let mut parts = id.split('-');
    let family = parts.next().unwrap_or_default();
    let counts = parts.map(|p| p.parse::<usize>().with_context(|| format!("bad count `{p}` in scenario `{id}`"))).collect::<Result<Vec<_>>>()?;
    let family = ScenarioFamily::from_name(family).with_context(|| format!("unknown scenario family in `{id}`"))?;
    let (arms, spheres) = match (family, counts.as_slice()) {
        (ScenarioFamily::Cage, [n]) => (*n, 0),
        (ScenarioFamily::Cross, [n]) => (0, *n),
        (ScenarioFamily::Heterogeneous, [a, s]) => (*a, *s),
        _ => bail!("scenario `{id}` has the wrong number of counts"),
    };
    Ok(ScenarioSpec::new(family, arms, spheres, seed))
}
