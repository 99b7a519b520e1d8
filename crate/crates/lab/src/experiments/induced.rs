use anyhow::bail;
use ergolab::dynamics::{CheckpointSchedule, InducedMode, InducedOrbit, InducedSystem};
use ergolab::estimators::{loglog_slope, ScalingReport};
use ergolab::processes::{ProcessTrace, TraceKind};
use ergolab::rng::{DigitStream, OrbitSeed};

use super::{citation, schedule, single, slope_report, slope_sample, trace_from, Sample};
use crate::config::ExperimentConfig;
use crate::{orbit_seed, Check, Ctx, Outcome, TraceSet};

pub(crate) const GM_DEFAULTS: &str = r#"
n_max = 1_000_000
ratio = 1.2
ensemble = 100
seed = 2
alpha = 2.0
ff_depth = 1024
fit_from = 10_000
tol_slope = 0.25
cells_from = 100
cells_to = 100_000
tol_cells_slope = 0.05
x_at = 1_000_000
x_scale = 2.0
tol_x_lo = 0.9
tol_x_hi = 1.1
"#;

pub(crate) const GAMMA_DEFAULTS: &str = r#"
n_max = 10_000
ratio = 1.5
ensemble = 10_000
seed = 3
alpha = 2.0
eps = 0.2
ff_depth = 1024
at = [1_000, 10_000]
bound_constant = 10.0
tol_sigmas = 3.0
"#;

fn start(seed: OrbitSeed) -> f64 {
    0.5 + 0.5 * DigitStream::from_seed(seed).uniform()
}

/// Running maximum of the return times at each checkpoint (induced time).
/// Stops early once the maximum reaches `stop`, repeating it at the
/// remaining checkpoints.
fn return_maxima(sys: &InducedSystem, depth: u64, sched: &CheckpointSchedule, seed: OrbitSeed, stop: f64) -> anyhow::Result<ProcessTrace> {
    let mut orbit = InducedOrbit::new(sys, start(seed), InducedMode::FastForward { depth })?;
    let mut trace = ProcessTrace::new(TraceKind::Maximum);
    let mut k = 0u64;
    let mut m = 0.0f64;
    for &n in sched.points() {
        while k < n && m < stop {
            m = m.max(orbit.advance()?.1 as f64);
            k += 1;
        }
        trace.push(n, m);
    }
    Ok(trace)
}

pub(crate) fn gm_maxima(cfg: &ExperimentConfig, ctx: &Ctx) -> anyhow::Result<Outcome> {
    let alpha = cfg.f64("alpha")?;
    let depth = cfg.u64("ff_depth")?;
    let from = cfg.u64("fit_from")?;
    let sched = schedule(cfg)?;
    if alpha < 1.0 {
        bail!("alpha = {alpha}: return times need an infinite mean (alpha >= 1)");
    }
    let sys = InducedSystem::with_depth(alpha, depth as usize)?;
    // the return tail is n^(-beta-1) with beta = 1/alpha
    let predicted = alpha;
    let runs = ctx.ensemble(cfg.usize("ensemble")?, |i| {
        return_maxima(&sys, depth, &sched, orbit_seed(cfg.u64("seed")?, 0, i), f64::INFINITY)
    })?;
    let samples: Vec<Sample> = runs.iter().map(|t| slope_sample(&trace_from(t, from), 1.0)).collect();
    let mut out = Outcome::default();
    out.reports.push(slope_report(
        "gm-maxima",
        format!("slope of log M_k over induced time k in [{from}, {}]", sched.n_max()),
        &samples,
        predicted,
        cfg.f64("tol_slope")?,
    )?);
    out.traces.push(TraceSet::new("return_maxima", runs));
    let (report, check) = cell_tail(cfg, alpha)?;
    out.reports.push(report);
    out.checks.push(check);
    Ok(out)
}

/// Slope of the induced cell measures and the preimage constant, from the
/// deterministic table.
fn cell_tail(cfg: &ExperimentConfig, alpha: f64) -> anyhow::Result<(ScalingReport, Check)> {
    let (lo, hi) = (cfg.u64("cells_from")?, cfg.u64("cells_to")?);
    let at = cfg.u64("x_at")?;
    let tol = cfg.f64("tol_cells_slope")?;
    let sys = InducedSystem::with_depth(alpha, hi.max(at) as usize + 2)?;
    let sched = CheckpointSchedule::geometric(1.05, hi)?;
    let (n, v): (Vec<u64>, Vec<f64>) =
        sched.points().iter().filter(|&&n| n >= lo).map(|&n| (n, sys.cell_measure(n))).unzip();
    let cells = ProcessTrace::from_parts(TraceKind::Series, n, v)?;
    let fit = loglog_slope(&cells, 1.0)?;
    let predicted = -1.0 / alpha - 1.0;
    let report = ScalingReport {
        experiment: "gm-maxima".into(),
        metric: format!("slope of log |Y_n| over n in [{lo}, {hi}]"),
        fitted_slope: fit.slope,
        stderr: fit.stderr,
        tail_lo: f64::NAN,
        tail_hi: f64::NAN,
        predicted: Some(predicted),
        tolerance: format!("within {tol} of {predicted} (deterministic)"),
        ensemble: single(fit.slope),
        citation: citation("gm-maxima"),
        pass: (fit.slope - predicted).abs() <= tol,
        diagnostics: Default::default(),
    };
    let scale = cfg.f64("x_scale")?;
    let (xlo, xhi) = (cfg.f64("tol_x_lo")?, cfg.f64("tol_x_hi")?);
    let value = sys.x(at as i64) * (scale * at as f64).powf(1.0 / alpha);
    let check = Check::new(
        format!("x_n ({scale} n)^(1/{alpha}) at n = {at} in [{xlo}, {xhi}]"),
        (xlo..=xhi).contains(&value),
        format!("x_n ({scale} n)^(1/{alpha}) = {value:.6}"),
    );
    Ok((report, check))
}

/// `gamma_n = n^(1/beta) (log n)^(-1/beta - eps)`.
fn gamma_n(beta: f64, eps: f64, n: u64) -> f64 {
    let n = n as f64;
    n.powf(1.0 / beta) * n.ln().powf(-1.0 / beta - eps)
}

pub(crate) fn gamma_bound(cfg: &ExperimentConfig, ctx: &Ctx) -> anyhow::Result<Outcome> {
    let alpha = cfg.f64("alpha")?;
    let beta = 1.0 / alpha;
    let eps = cfg.f64("eps")?;
    let depth = cfg.u64("ff_depth")?;
    let at = cfg.u64_list("at")?;
    let c = cfg.f64("bound_constant")?;
    let sigmas = cfg.f64("tol_sigmas")?;
    let mut pts = schedule(cfg)?.points().to_vec();
    pts.extend(at.iter().copied());
    pts.retain(|&n| n >= 4);
    pts.sort_unstable();
    pts.dedup();
    let sched = CheckpointSchedule::explicit(pts)?;
    let gammas: Vec<f64> = sched.points().iter().map(|&n| gamma_n(beta, eps, n)).collect();
    if gammas.windows(2).any(|w| w[1] < w[0]) {
        bail!("gamma_n must increase over the checkpoints; raise the first checkpoint");
    }
    let stop = *gammas.last().expect("non-empty schedule");
    let n_orbits = cfg.usize("ensemble")?;
    let sys = InducedSystem::with_depth(alpha, depth as usize)?;
    let runs = ctx.ensemble(n_orbits, |i| return_maxima(&sys, depth, &sched, orbit_seed(cfg.u64("seed")?, 0, i), stop))?;

    let mut out = Outcome::default();
    // fraction of orbits still below gamma_n at each checkpoint
    let fractions: Vec<f64> = sched
        .points()
        .iter()
        .enumerate()
        .map(|(j, _)| runs.iter().filter(|t| t.values()[j] < gammas[j]).count() as f64 / n_orbits as f64)
        .collect();
    out.traces.push(TraceSet::new(
        "small_maxima_fraction",
        [ProcessTrace::from_parts(TraceKind::Ratio, sched.points().to_vec(), fractions.clone())?],
    ));
    for &n in &at {
        let j = sched.points().iter().position(|&p| p == n).expect("inserted above");
        let p = fractions[j];
        let se = (p * (1.0 - p) / n_orbits as f64).sqrt();
        let bound = c * (n as f64).powi(-2) + sigmas * se;
        out.checks.push(Check::new(
            format!("P_{n} <= {c} n^-2 + {sigmas} se"),
            p <= bound,
            format!("P_{n} = {p:.5} (gamma_n = {:.1}), bound {bound:.5}, se {se:.5}", gammas[j]),
        ));
    }
    Ok(out)
}
