use ergolab::dynamics::{MapSpec, Orbit};
use ergolab::processes::{ErdosRenyiMonitor, RunLengthMonitor, WindowRule};

use super::{median_report, schedule};
use crate::config::ExperimentConfig;
use crate::{orbit_seed, Ctx, Outcome, TraceSet};

pub(crate) const RUNLENGTH_DEFAULTS: &str = r#"
n_max = 10_000_000
ratio = 1.2
ensemble = 100
seed = 10
alpha = 2.0
tol_xi1_lo = 0.35
tol_xi1_hi = 0.65
tol_xi0_lo = 0.9
tol_xi0_hi = 1.05
"#;

pub(crate) const ER_DEFAULTS: &str = r#"
n_max = 10_000_000
ratio = 1.2
ensemble = 100
seed = 11
alpha = 2.0
c = 0.8
tol_lo = 0.95
tol_hi = 1.0
"#;

pub(crate) fn runlength(cfg: &ExperimentConfig, ctx: &Ctx) -> anyhow::Result<Outcome> {
    let sched = schedule(cfg)?;
    let alpha = cfg.f64("alpha")?;
    let map = MapSpec::lsv(alpha)?;
    let runs = ctx.ensemble(cfg.usize("ensemble")?, |i| {
        let mut orbit = Orbit::random(&map, &[], orbit_seed(cfg.u64("seed")?, 0, i))?;
        let mut ones = RunLengthMonitor::new(1);
        let mut zeros = RunLengthMonitor::new(0);
        orbit.run(&sched, &mut (&mut ones, &mut zeros))?;
        Ok((ones.into_trace(), zeros.into_trace()))
    })?;
    let n = sched.n_max() as f64;
    let xi1: Vec<f64> = runs.iter().map(|(t, _)| t.last().map_or(f64::NAN, |l| l.1) / n.log2()).collect();
    let xi0: Vec<f64> = runs.iter().map(|(_, t)| t.last().map_or(f64::NAN, |l| l.1).ln() / n.ln()).collect();
    let mut out = Outcome::default();
    let mut r1 = median_report("runlength", format!("xi1_n / log2 n at n = {}", sched.n_max()), &xi1, (cfg.f64("tol_xi1_lo")?, cfg.f64("tol_xi1_hi")?))?;
    r1.predicted = Some(1.0 / alpha);
    out.reports.push(r1);
    let mut r0 = median_report("runlength", format!("log xi0_n / log n at n = {}", sched.n_max()), &xi0, (cfg.f64("tol_xi0_lo")?, cfg.f64("tol_xi0_hi")?))?;
    r0.predicted = Some(1.0);
    out.reports.push(r0);
    let (ones, zeros): (Vec<_>, Vec<_>) = runs.into_iter().unzip();
    out.traces.push(TraceSet::new("runs_of_ones", ones));
    out.traces.push(TraceSet::new("runs_of_zeros", zeros));
    Ok(out)
}

pub(crate) fn erdos_renyi(cfg: &ExperimentConfig, ctx: &Ctx) -> anyhow::Result<Outcome> {
    let sched = schedule(cfg)?;
    let alpha = cfg.f64("alpha")?;
    let rule = WindowRule::LogScaled { c: cfg.f64("c")?, alpha };
    let map = MapSpec::lsv(alpha)?;
    let traces = ctx.ensemble(cfg.usize("ensemble")?, |i| {
        let mut orbit = Orbit::random(&map, &[], orbit_seed(cfg.u64("seed")?, 0, i))?;
        let mut er = ErdosRenyiMonitor::new(1, rule, &sched);
        orbit.run(&sched, &mut er)?;
        Ok(er.into_trace())
    })?;
    let k = rule.k(sched.n_max());
    anyhow::ensure!(k > 0, "window length K(n_max) is zero");
    let ratios: Vec<f64> = traces.iter().map(|t| t.last().map_or(f64::NAN, |l| l.1) / k as f64).collect();
    let mut out = Outcome::default();
    let mut report = median_report("erdos-renyi", format!("window maximum / K at n = {}, K = {k}", sched.n_max()), &ratios, (cfg.f64("tol_lo")?, cfg.f64("tol_hi")?))?;
    report.diagnostics.insert("window".into(), k as f64);
    out.reports.push(report);
    out.traces.push(TraceSet::new("window_maxima", traces));
    Ok(out)
}
