//! Named experiments over the `ergolab` engines, with seeded ensemble
//! scheduling and CSV/JSON output.
//!
//! Each registry entry pairs a default configuration with a function that
//! runs the ensemble and returns an [`Outcome`]: scaling reports, exact
//! checks and process traces. The [`runner`] writes those to disk together
//! with a manifest of content digests, and can replay a manifest.

pub mod config;
mod experiments;
pub mod registry;
pub mod runner;

use ergolab::estimators::ScalingReport;
use ergolab::processes::ProcessTrace;
use ergolab::rng::OrbitSeed;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{ConfigError, ExperimentConfig, RawConfig};
pub use registry::{find, registry, Experiment};
pub use runner::{Replay, RunManifest, RunOptions, RunResult};

/// A pass/fail property that is checked exactly rather than estimated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Check { name: name.into(), pass, detail: detail.into() }
    }

    /// Passes when `result` is `Ok`; the error text becomes the detail.
    pub fn from_result(name: impl Into<String>, result: Result<String, String>) -> Self {
        match result {
            Ok(d) => Check::new(name, true, d),
            Err(e) => Check::new(name, false, e),
        }
    }
}

/// Per-orbit traces of one process, written as one CSV file.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceSet {
    pub name: String,
    pub rows: Vec<(u64, ProcessTrace)>,
}

impl TraceSet {
    pub fn new(name: impl Into<String>, traces: impl IntoIterator<Item = ProcessTrace>) -> Self {
        TraceSet { name: name.into(), rows: traces.into_iter().enumerate().map(|(i, t)| (i as u64, t)).collect() }
    }
}

/// Everything an experiment produces.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub reports: Vec<ScalingReport>,
    pub checks: Vec<Check>,
    pub traces: Vec<TraceSet>,
}

impl Outcome {
    pub fn pass(&self) -> bool {
        self.reports.iter().all(|r| r.pass) && self.checks.iter().all(|c| c.pass)
    }
}

/// Execution context handed to experiments.
pub struct Ctx {
    pool: rayon::ThreadPool,
}

impl Ctx {
    pub fn new(threads: usize) -> anyhow::Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
        Ok(Ctx { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// Runs `f(i)` for `i < n` on the pool and returns the results in index
    /// order, so the thread count never changes the output.
    pub fn ensemble<T, F>(&self, n: usize, f: F) -> anyhow::Result<Vec<T>>
    where
        T: Send,
        F: Fn(u64) -> anyhow::Result<T> + Sync,
    {
        self.pool.install(|| (0..n as u64).into_par_iter().map(|i| f(i).map_err(|e| e.context(format!("orbit {i}")))).collect())
    }
}

/// Seed of orbit `index` in sub-experiment `variant`.
pub fn orbit_seed(master: u64, variant: u64, index: u64) -> OrbitSeed {
    OrbitSeed::new(master, (variant << 40) | index)
}
