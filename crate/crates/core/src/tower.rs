//! Young towers over a full-branch affine base with return tail
//! `nu{R = i} ~ i^{-beta-1}`.

use crate::dynamics::CheckpointSchedule;
use crate::error::{Error, Result};
use crate::estimators::{ensemble_aggregate, median, tail_liminf_limsup, ScalingReport};
use crate::processes::{bc_series, ProcessTrace, TraceKind};
use crate::rng::{DigitStream, OrbitSeed};
use std::collections::BTreeMap;

const TABLE: usize = 1 << 16;

/// Hurwitz zeta `sum_{k>=0} (a + k)^-s` for `s > 1`, `a >= 1`, by
/// Euler–Maclaurin summation.
pub fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    let shift = if a < 12.0 { (12.0 - a).ceil() as usize } else { 0 };
    let mut sum = 0.0;
    for k in 0..shift {
        sum += (a + k as f64).powf(-s);
    }
    let b = a + shift as f64;
    sum += b.powf(1.0 - s) / (s - 1.0) + 0.5 * b.powf(-s);
    // B_{2j} / (2j)!
    const COEF: [f64; 5] = [1.0 / 12.0, -1.0 / 720.0, 1.0 / 30240.0, -1.0 / 1209600.0, 1.0 / 47900160.0];
    let mut rising = s;
    let mut pw = b.powf(-s - 1.0);
    for (j, c) in COEF.iter().enumerate() {
        sum += c * rising * pw;
        let m = 2.0 * j as f64;
        rising *= (s + m + 1.0) * (s + m + 2.0);
        pw /= b * b;
    }
    sum
}

/// Tower with branches `i = 1..=i_max` of Lebesgue length `l_i` proportional
/// to `i^{-beta-1}` and return time `R = i`. The mass beyond `i_max` is
/// folded into the last branch.
///
/// Branch `i` is the interval `[T(i+1), T(i))` where `T(i)` is the
/// normalised tail `sum_{j>=i} l_j`, so branch 1 sits at the right end and
/// long branches accumulate at 0, where `f64` keeps full relative precision.
#[derive(Clone, Debug)]
pub struct TowerSpec {
    beta: f64,
    i_max: u64,
    norm: f64,
    tail: Vec<f64>,
}

impl TowerSpec {
    pub fn new(beta: f64, i_max: u64) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::Parameter(format!("beta must lie in (0, 1), got {beta}")));
        }
        if i_max < 2 {
            return Err(Error::Parameter("i_max must be at least 2".into()));
        }
        let s = beta + 1.0;
        let norm = hurwitz_zeta(s, 1.0);
        let top = (TABLE as u64).min(i_max);
        let tail = (1..=top + 1).map(|i| hurwitz_zeta(s, i as f64) / norm).collect();
        Ok(TowerSpec { beta, i_max, norm, tail })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn i_max(&self) -> u64 {
        self.i_max
    }

    /// `T(i)`: total length of branches `i, i+1, ...`; `T(i) = 0` past `i_max`.
    pub fn tail(&self, i: u64) -> f64 {
        if i > self.i_max {
            0.0
        } else if (i as usize) <= self.tail.len() {
            self.tail[i as usize - 1]
        } else {
            hurwitz_zeta(self.beta + 1.0, i as f64) / self.norm
        }
    }

    pub fn branch_length(&self, i: u64) -> f64 {
        self.tail(i) - self.tail(i + 1)
    }

    /// Mass moved into branch `i_max` by truncation.
    pub fn folded_mass(&self) -> f64 {
        hurwitz_zeta(self.beta + 1.0, self.i_max as f64 + 1.0) / self.norm
    }

    /// Branch containing `x` in `[0, 1)`.
    pub fn branch_of(&self, x: f64) -> u64 {
        let t_tab = self.tail[self.tail.len() - 1];
        if x >= t_tab {
            // tail is decreasing; count entries above x
            let k = self.tail.partition_point(|&t| t > x) as u64;
            return k.clamp(1, self.i_max);
        }
        if x < self.tail(self.i_max) {
            return self.i_max;
        }
        let guess = (self.beta * self.norm * x).powf(-1.0 / self.beta);
        let mut i = (guess as u64).clamp(self.tail.len() as u64, self.i_max);
        while i > 1 && self.tail(i) <= x {
            i -= 1;
        }
        while self.tail(i + 1) > x {
            i += 1;
        }
        i
    }

    /// Affine image of `x` under the base map on its branch `i`.
    pub fn map_base(&self, x: f64, i: u64) -> f64 {
        let lo = self.tail(i + 1);
        let len = self.tail(i) - lo;
        ((x - lo) / len).clamp(0.0, 1.0 - f64::EPSILON / 2.0)
    }
}

/// A point `(x, level)` of the tower.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TowerPoint {
    pub base: f64,
    pub level: u64,
}

/// One tower step: climb a level, or apply the base map at the top.
pub fn tower_step(spec: &TowerSpec, p: TowerPoint) -> TowerPoint {
    let i = spec.branch_of(p.base);
    if p.level + 1 < i {
        TowerPoint { base: p.base, level: p.level + 1 }
    } else {
        TowerPoint { base: spec.map_base(p.base, i), level: 0 }
    }
}

/// A tower orbit whose base coordinate is refreshed at each return.
///
/// The affine expansion by `1/l_i` magnifies the unknown part of an `f64`
/// below its last bit; the refresh draws that part uniformly, which is the
/// exact conditional law of the image of a Lebesgue-typical point.
#[derive(Clone, Debug)]
pub struct TowerOrbit<'a> {
    spec: &'a TowerSpec,
    point: TowerPoint,
    branch: u64,
    digits: DigitStream,
    time: u64,
}

impl<'a> TowerOrbit<'a> {
    pub fn new(spec: &'a TowerSpec, base: f64, seed: OrbitSeed) -> Result<Self> {
        if !(0.0..1.0).contains(&base) {
            return Err(Error::Domain(format!("base coordinate {base} outside [0, 1)")));
        }
        Ok(TowerOrbit {
            spec,
            point: TowerPoint { base, level: 0 },
            branch: spec.branch_of(base),
            digits: DigitStream::from_seed(seed),
            time: 0,
        })
    }

    /// Starts at level 0 with a uniformly drawn base point.
    pub fn random(spec: &'a TowerSpec, seed: OrbitSeed) -> Self {
        let mut digits = DigitStream::from_seed(seed);
        let base = digits.uniform();
        TowerOrbit { spec, point: TowerPoint { base, level: 0 }, branch: spec.branch_of(base), digits, time: 0 }
    }

    pub fn point(&self) -> TowerPoint {
        self.point
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    fn refresh(&mut self, x: f64, i: u64) -> f64 {
        let len = self.spec.branch_length(i);
        let spread = ulp(x) / len;
        let y = self.spec.map_base(x, i) + (self.digits.uniform() - 0.5) * spread;
        y.clamp(0.0, 1.0 - f64::EPSILON / 2.0)
    }

    /// One clock step.
    pub fn step(&mut self) {
        if self.point.level + 1 < self.branch {
            self.point.level += 1;
        } else {
            let y = self.refresh(self.point.base, self.branch);
            self.point = TowerPoint { base: y, level: 0 };
            self.branch = self.spec.branch_of(y);
        }
        self.time += 1;
    }

    /// Jumps to the next visit of level 0 and returns the elapsed time.
    pub fn next_return(&mut self) -> u64 {
        let gap = self.branch - self.point.level;
        let y = self.refresh(self.point.base, self.branch);
        self.point = TowerPoint { base: y, level: 0 };
        self.branch = self.spec.branch_of(y);
        self.time += gap;
        gap
    }
}

fn ulp(x: f64) -> f64 {
    let b = x.abs().max(f64::MIN_POSITIVE).to_bits();
    f64::from_bits(b + 1) - f64::from_bits(b)
}

/// Nested base intervals at level 0, `B_k = [c - m_k/2, c + m_k/2]` with
/// Lebesgue measure `m_k = min(scale * k^-zeta, cap)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BaseTargets {
    pub center: f64,
    pub scale: f64,
    pub zeta: f64,
    pub cap: f64,
}

impl BaseTargets {
    pub fn power(center: f64, zeta: f64, cap: f64) -> Self {
        BaseTargets { center, scale: 1.0, zeta, cap }
    }

    /// The whole base at every time.
    pub fn whole() -> Self {
        BaseTargets { center: 0.5, scale: 1.0, zeta: 0.0, cap: 1.0 }
    }

    pub fn empty() -> Self {
        BaseTargets { center: 0.5, scale: 0.0, zeta: 0.0, cap: 0.0 }
    }

    pub fn measure(&self, k: u64) -> f64 {
        (self.scale * (k as f64).powf(-self.zeta)).min(self.cap)
    }

    fn is_whole(&self) -> bool {
        self.cap >= 1.0 && self.zeta == 0.0 && self.scale >= 1.0
    }

    #[inline]
    pub fn contains(&self, k: u64, x: f64) -> bool {
        if self.is_whole() {
            return true;
        }
        let d = (x - self.center).abs();
        d <= 0.5 * self.cap && d <= 0.5 * self.measure(k)
    }

    /// Rejects targets meeting the accumulation point or the folded tail,
    /// whose preimages meet infinitely many tower cells.
    pub fn validate(&self, spec: &TowerSpec) -> Result<()> {
        if self.is_whole() || self.cap == 0.0 || self.scale == 0.0 {
            return Ok(());
        }
        let lo = self.center - 0.5 * self.cap;
        if lo <= spec.tail(spec.i_max()) || self.center + 0.5 * self.cap > 1.0 {
            return Err(Error::Finiteness(format!(
                "targets around {} of size {} reach the accumulating branches",
                self.center, self.cap
            )));
        }
        Ok(())
    }
}

/// Counts of one tower orbit against its sandwich series.
#[derive(Clone, Debug, PartialEq)]
pub struct TowerBcOrbit {
    pub count: ProcessTrace,
    pub lower: ProcessTrace,
    pub upper: ProcessTrace,
}

impl TowerBcOrbit {
    /// `count / lower` at each checkpoint with a positive lower series.
    pub fn lower_ratios(&self) -> Vec<f64> {
        self.count
            .values()
            .iter()
            .zip(self.lower.values())
            .filter(|(_, &l)| l > 0.0)
            .map(|(c, l)| c / l)
            .collect()
    }

    pub fn inside_sandwich(&self) -> bool {
        match (self.count.last(), self.lower.last(), self.upper.last()) {
            (Some((_, c)), Some((_, l)), Some((_, u))) => l <= c && c <= u,
            _ => false,
        }
    }
}

/// Runs one orbit: `sum_{k=1}^n 1_{B_k}(F^k p)` at each checkpoint, with the
/// lower series over `k <= n^{1/(alpha+eps)}` and the upper one over
/// `k <= n^{1/(alpha-eps)}`, `alpha = 1/beta`.
pub fn tower_bc_orbit(
    spec: &TowerSpec,
    targets: &BaseTargets,
    schedule: &CheckpointSchedule,
    eps: f64,
    seed: OrbitSeed,
) -> Result<TowerBcOrbit> {
    targets.validate(spec)?;
    let alpha = 1.0 / spec.beta();
    if !(eps > 0.0 && eps < alpha) {
        return Err(Error::Parameter(format!("eps must lie in (0, {alpha})")));
    }
    let mut orbit = TowerOrbit::random(spec, seed);
    let mut count = ProcessTrace::new(TraceKind::BcCount);
    let mut lower = ProcessTrace::new(TraceKind::Series);
    let mut upper = ProcessTrace::new(TraceKind::Series);
    let mut hits = 0u64;
    for &n in schedule.points() {
        while orbit.time() < n {
            let t = orbit.time() + orbit.branch - orbit.point.level;
            if t > n {
                break;
            }
            orbit.next_return();
            if targets.contains(t, orbit.point.base) {
                hits += 1;
            }
        }
        count.push(n, hits as f64);
        lower.push(n, bc_series(|k| targets.measure(k), n, alpha + eps));
        upper.push(n, bc_series(|k| targets.measure(k), n, alpha - eps));
    }
    Ok(TowerBcOrbit { count, lower, upper })
}

/// Settings for [`tower_bc_experiment`].
#[derive(Clone, Debug)]
pub struct TowerBcConfig {
    pub n_max: u64,
    pub ratio: f64,
    pub ensemble: usize,
    pub seed: u64,
    pub eps: f64,
    pub tail_fraction: f64,
    /// An orbit passes when its tail minimum of `count / lower` reaches this.
    pub lower_threshold: f64,
    /// The experiment passes when this fraction of orbits pass.
    pub pass_fraction: f64,
}

impl Default for TowerBcConfig {
    fn default() -> Self {
        TowerBcConfig {
            n_max: 10_000_000,
            ratio: 1.2,
            ensemble: 200,
            seed: 0,
            eps: 0.25,
            tail_fraction: 0.25,
            lower_threshold: 0.9,
            pass_fraction: 0.9,
        }
    }
}

/// Summarises orbits run by [`tower_bc_orbit`].
pub fn tower_bc_summarize(spec: &TowerSpec, cfg: &TowerBcConfig, orbits: &[TowerBcOrbit]) -> Result<ScalingReport> {
    let mut lows = Vec::with_capacity(orbits.len());
    let mut highs = Vec::with_capacity(orbits.len());
    for o in orbits {
        let r = o.lower_ratios();
        match tail_liminf_limsup(&r, cfg.tail_fraction) {
            Ok((lo, hi)) => {
                lows.push(lo);
                highs.push(hi);
            }
            Err(_) => {
                lows.push(f64::NAN);
                highs.push(f64::NAN);
            }
        }
    }
    let thr = cfg.lower_threshold;
    let stats = ensemble_aggregate(&lows, |lo| lo >= thr)?;
    let sandwich = orbits.iter().filter(|o| o.inside_sandwich()).count() as f64 / orbits.len() as f64;
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("sandwich_fraction".into(), sandwich);
    diagnostics.insert("folded_mass".into(), spec.folded_mass());
    diagnostics.insert(
        "median_final_count".into(),
        median(&orbits.iter().filter_map(|o| o.count.last().map(|l| l.1)).collect::<Vec<_>>()),
    );
    if let Some(o) = orbits.first() {
        diagnostics.insert("lower_series".into(), o.lower.last().map_or(f64::NAN, |l| l.1));
        diagnostics.insert("upper_series".into(), o.upper.last().map_or(f64::NAN, |l| l.1));
    }
    Ok(ScalingReport {
        experiment: "tower-bc".into(),
        metric: "tail minimum of count / lower series".into(),
        fitted_slope: stats.median,
        stderr: stats.stderr_median,
        tail_lo: stats.median,
        tail_hi: median(&highs),
        predicted: Some(1.0),
        tolerance: format!(
            "tail minimum >= {thr} for at least {:.0}% of orbits",
            100.0 * cfg.pass_fraction
        ),
        pass: stats.pass_fraction >= cfg.pass_fraction,
        ensemble: stats,
        citation: "shrinking targets on Young towers with polynomial return tails (lower bound)".into(),
        diagnostics,
    })
}

/// Runs the whole ensemble sequentially and summarises it.
pub fn tower_bc_experiment(
    spec: &TowerSpec,
    targets: &BaseTargets,
    cfg: &TowerBcConfig,
) -> Result<(ScalingReport, Vec<TowerBcOrbit>)> {
    let schedule = CheckpointSchedule::geometric(cfg.ratio, cfg.n_max)?;
    let orbits = (0..cfg.ensemble as u64)
        .map(|i| tower_bc_orbit(spec, targets, &schedule, cfg.eps, OrbitSeed::new(cfg.seed, i)))
        .collect::<Result<Vec<_>>>()?;
    let report = tower_bc_summarize(spec, cfg, &orbits)?;
    Ok((report, orbits))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hurwitz_against_direct_sum() {
        let direct: f64 = (0..2_000_000).map(|k| (3.0 + k as f64).powf(-2.5)).sum::<f64>()
            + (3.0f64 + 2e6).powf(-1.5) / 1.5;
        assert!((hurwitz_zeta(2.5, 3.0) - direct).abs() < 1e-12);
        assert!((hurwitz_zeta(2.0, 1.0) - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-14);
        assert!((hurwitz_zeta(1.5, 1.0) - 2.612_375_348_685_488).abs() < 1e-13);
    }

    #[test]
    fn lengths_sum_to_one() {
        let spec = TowerSpec::new(0.5, 10_000_000).unwrap();
        assert!((spec.tail(1) - 1.0).abs() < 1e-12);
        let x: Vec<f64> = (10..=10_000).step_by(10).map(|i| (i as f64).ln()).collect();
        let y: Vec<f64> = (10..=10_000).step_by(10).map(|i| spec.branch_length(i).ln()).collect();
        let fit = crate::estimators::ols(&x, &y);
        assert!((fit.slope + 1.5).abs() < 0.02);
    }

    #[test]
    fn branch_lookup_is_consistent() {
        let spec = TowerSpec::new(0.5, 10_000_000).unwrap();
        for i in [1u64, 2, 3, 100, 65535, 65536, 65537, 70_000, 1_000_000, 9_999_999] {
            let mid = 0.5 * (spec.tail(i) + spec.tail(i + 1));
            assert_eq!(spec.branch_of(mid), i, "branch {i}");
        }
        assert_eq!(spec.branch_of(0.0), 10_000_000);
    }

    #[test]
    fn step_climbs_then_returns() {
        let spec = TowerSpec::new(0.5, 1000).unwrap();
        let x = 0.5 * (spec.tail(3) + spec.tail(4));
        let p = TowerPoint { base: x, level: 0 };
        let p1 = tower_step(&spec, p);
        assert_eq!(p1.level, 1);
        let p3 = tower_step(&spec, tower_step(&spec, p1));
        assert_eq!(p3.level, 0);
        assert!((p3.base - spec.map_base(x, 3)).abs() < 1e-15);
    }
}
