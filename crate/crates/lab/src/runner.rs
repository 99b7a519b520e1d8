//! Runs experiments, writes their outputs and replays manifests.
//!
//! Layout of an output directory:
//!
//! ```text
//! out/
//!   manifest.json           configs, code version, timings, file digests
//!   <experiment>/report.json
//!   <experiment>/<trace>.csv   columns checkpoint,value,orbit_id
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use ergolab::estimators::ScalingReport;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::registry::find;
use crate::{Check, Ctx, Outcome, TraceSet};

/// Where and how to run.
#[derive(Clone, Debug)]
pub struct RunOptions {
    pub out: PathBuf,
    pub threads: usize,
}

/// The `report.json` of one experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub pass: bool,
    pub config: ExperimentConfig,
    pub reports: Vec<ScalingReport>,
    pub checks: Vec<Check>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub experiment: String,
    pub config: ExperimentConfig,
    pub pass: bool,
    pub wall_seconds: f64,
    /// Path relative to the output directory -> SHA-256 hex digest.
    pub files: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub code_version: String,
    pub threads: usize,
    pub wall_seconds: f64,
    pub pass: bool,
    pub experiments: Vec<ManifestEntry>,
}

impl RunManifest {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

/// Everything a run produced, in memory and on disk.
#[derive(Debug)]
pub struct RunResult {
    pub manifest: RunManifest,
    pub outcomes: Vec<Outcome>,
}

pub fn code_version() -> String {
    format!("ergolab {}", env!("CARGO_PKG_VERSION"))
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn trace_csv(set: &TraceSet) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["checkpoint", "value", "orbit_id"])?;
    for (id, trace) in &set.rows {
        for (n, v) in trace.checkpoints().iter().zip(trace.values()) {
            w.write_record([n.to_string(), v.to_string(), id.to_string()])?;
        }
    }
    Ok(w.into_inner()?)
}

/// Writes one experiment's outputs under `out/<experiment>/` and returns
/// the digests keyed by path relative to `out`.
pub fn write_outcome(out: &Path, cfg: &ExperimentConfig, outcome: &Outcome) -> anyhow::Result<BTreeMap<String, String>> {
    let dir = out.join(&cfg.experiment);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut files = BTreeMap::new();
    let mut put = |name: String, bytes: Vec<u8>| -> anyhow::Result<()> {
        let rel = format!("{}/{name}", cfg.experiment);
        fs::write(out.join(&rel), &bytes).with_context(|| format!("writing {rel}"))?;
        files.insert(rel, sha256_hex(&bytes));
        Ok(())
    };
    let report = ExperimentReport {
        experiment: cfg.experiment.clone(),
        pass: outcome.pass(),
        config: cfg.clone(),
        reports: outcome.reports.clone(),
        checks: outcome.checks.clone(),
    };
    put("report.json".into(), serde_json::to_vec_pretty(&report)?)?;
    for set in &outcome.traces {
        put(format!("{}.csv", set.name), trace_csv(set)?)?;
    }
    Ok(files)
}

/// Runs `plan` in order, writing every output and the manifest.
///
/// All experiment names are checked before anything is written.
pub fn run(plan: &[ExperimentConfig], opts: &RunOptions) -> anyhow::Result<RunResult> {
    let experiments = plan
        .iter()
        .map(|cfg| find(&cfg.experiment).with_context(|| format!("unknown experiment `{}`", cfg.experiment)))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let mut seen = std::collections::BTreeSet::new();
    for cfg in plan {
        if !seen.insert(&cfg.experiment) {
            bail!("experiment `{}` appears twice in one run", cfg.experiment);
        }
    }
    let ctx = Ctx::new(opts.threads)?;
    fs::create_dir_all(&opts.out).with_context(|| format!("creating {}", opts.out.display()))?;
    let start = Instant::now();
    let mut entries = Vec::new();
    let mut outcomes = Vec::new();
    for (exp, cfg) in experiments.iter().zip(plan) {
        let t0 = Instant::now();
        let outcome = exp.run(cfg, &ctx).with_context(|| format!("experiment `{}`", cfg.experiment))?;
        let files = write_outcome(&opts.out, cfg, &outcome)?;
        entries.push(ManifestEntry {
            experiment: cfg.experiment.clone(),
            config: cfg.clone(),
            pass: outcome.pass(),
            wall_seconds: t0.elapsed().as_secs_f64(),
            files,
        });
        outcomes.push(outcome);
    }
    let manifest = RunManifest {
        code_version: code_version(),
        threads: ctx.threads(),
        wall_seconds: start.elapsed().as_secs_f64(),
        pass: entries.iter().all(|e| e.pass),
        experiments: entries,
    };
    fs::write(opts.out.join("manifest.json"), serde_json::to_vec_pretty(&manifest)?)?;
    Ok(RunResult { manifest, outcomes })
}

/// Result of replaying a manifest.
#[derive(Debug)]
pub struct Replay {
    pub result: RunResult,
    /// One line per file whose digest differs, is missing or is new.
    pub mismatches: Vec<String>,
}

impl Replay {
    pub fn identical(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Reruns every experiment of `manifest` with its recorded config and
/// compares the output digests.
pub fn replay(manifest: &RunManifest, opts: &RunOptions) -> anyhow::Result<Replay> {
    let plan: Vec<ExperimentConfig> = manifest.experiments.iter().map(|e| e.config.clone()).collect();
    let result = run(&plan, opts)?;
    let mut mismatches = Vec::new();
    for (old, new) in manifest.experiments.iter().zip(&result.manifest.experiments) {
        for (path, digest) in &old.files {
            match new.files.get(path) {
                None => mismatches.push(format!("{path}: not produced")),
                Some(d) if d != digest => mismatches.push(format!("{path}: digest {d} != recorded {digest}")),
                Some(_) => {}
            }
        }
        for path in new.files.keys().filter(|p| !old.files.contains_key(*p)) {
            mismatches.push(format!("{path}: not in the recorded run"));
        }
    }
    Ok(Replay { result, mismatches })
}
