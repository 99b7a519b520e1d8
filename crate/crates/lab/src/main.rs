use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use ergolab_lab::runner::{self, RunManifest, RunOptions};
use ergolab_lab::{find, registry, ExperimentConfig, RawConfig};

#[derive(Parser)]
#[command(name = "ergolab", version, about = "Run the ergolab experiment registry")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List experiments, or print one experiment's default config.
    List {
        #[arg(long, value_name = "NAME")]
        defaults: Option<String>,
    },
    /// Run experiments and write reports, traces and a manifest.
    Run {
        /// Experiment names, or `all`. May be omitted when the config names one.
        names: Vec<String>,
        /// Flat TOML config overlaid on the defaults.
        #[arg(long, short)]
        config: Option<PathBuf>,
        #[arg(long, short, default_value = "ergolab-out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        n_max: Option<u64>,
        #[arg(long)]
        ensemble: Option<u64>,
        /// Extra `key=value` overrides, value in TOML syntax.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
        #[arg(long, env = "ERGOLAB_THREADS", default_value_t = default_threads())]
        threads: usize,
    },
    /// Rerun a manifest and compare output digests.
    Replay {
        manifest: PathBuf,
        #[arg(long, short, default_value = "ergolab-replay")]
        out: PathBuf,
        #[arg(long, env = "ERGOLAB_THREADS", default_value_t = default_threads())]
        threads: usize,
    },
}

fn default_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn parse_set(s: &str) -> anyhow::Result<(String, toml::Value)> {
    let (k, v) = s.split_once('=').with_context(|| format!("`{s}` is not KEY=VALUE"))?;
    let (k, v) = (k.trim(), v.trim());
    let value = match format!("x = {v}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("x").expect("parsed key"),
        Err(_) => toml::Value::String(v.to_owned()),
    };
    Ok((k.to_owned(), value))
}

#[allow(clippy::too_many_arguments)]
fn plan(
    names: Vec<String>,
    config: Option<PathBuf>,
    seed: Option<u64>,
    n_max: Option<u64>,
    ensemble: Option<u64>,
    sets: Vec<String>,
) -> anyhow::Result<(Vec<ExperimentConfig>, Option<PathBuf>)> {
    let mut raw = match &config {
        Some(p) => RawConfig::load(p)?,
        None => RawConfig::default(),
    };
    for (k, v) in [("seed", seed), ("n_max", n_max), ("ensemble", ensemble)] {
        if let Some(v) = v {
            raw.set(k, toml::Value::Integer(i64::try_from(v).context("value too large")?));
        }
    }
    for s in &sets {
        let (k, v) = parse_set(s)?;
        raw.set(&k, v);
    }
    let mut names = names;
    if names.is_empty() {
        match &raw.experiment {
            Some(e) => names.push(e.clone()),
            None => bail!("name an experiment (see `ergolab list`) or pass a config with `experiment = ...`"),
        }
    }
    if names.iter().any(|n| n == "all") {
        names = registry().iter().map(|e| e.name.to_owned()).collect();
    }
    let mut out = Vec::new();
    for name in &names {
        let exp = find(name).with_context(|| format!("unknown experiment `{name}` (see `ergolab list`)"))?;
        out.push(exp.configure(&raw).with_context(|| format!("configuring `{name}`"))?);
    }
    Ok((out, raw.out))
}

fn report(manifest: &RunManifest) {
    for e in &manifest.experiments {
        println!("{:<22} {} ({:.1} s)", e.experiment, if e.pass { "PASS" } else { "FAIL" }, e.wall_seconds);
    }
}

fn main_inner() -> anyhow::Result<bool> {
    match Cli::parse().command {
        Command::List { defaults: None } => {
            for e in registry() {
                println!("{:<22} {}", e.name, e.summary);
            }
            Ok(true)
        }
        Command::List { defaults: Some(name) } => {
            let exp = find(&name).with_context(|| format!("unknown experiment `{name}`"))?;
            print!("{}", exp.default_config().to_toml());
            Ok(true)
        }
        Command::Run { names, config, out, seed, n_max, ensemble, sets, threads } => {
            let (plan, cfg_out) = plan(names, config, seed, n_max, ensemble, sets)?;
            let out = cfg_out.unwrap_or(out);
            let result = runner::run(&plan, &RunOptions { out: out.clone(), threads })?;
            for (cfg, outcome) in plan.iter().zip(&result.outcomes) {
                for r in &outcome.reports {
                    println!("{}: {} = {:.4} [{}] {}", cfg.experiment, r.metric, r.fitted_slope, r.tolerance, if r.pass { "ok" } else { "FAILED" });
                }
                for c in &outcome.checks {
                    println!("{}: {}: {} {}", cfg.experiment, c.name, c.detail, if c.pass { "ok" } else { "FAILED" });
                }
            }
            report(&result.manifest);
            println!("outputs in {}", out.display());
            Ok(result.manifest.pass)
        }
        Command::Replay { manifest, out, threads } => {
            let recorded = RunManifest::load(&manifest)?;
            let replay = runner::replay(&recorded, &RunOptions { out, threads })?;
            for m in &replay.mismatches {
                println!("mismatch: {m}");
            }
            println!("{}", if replay.identical() { "replay identical" } else { "replay differs" });
            Ok(replay.identical())
        }
    }
}

fn main() -> ExitCode {
    match main_inner() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
