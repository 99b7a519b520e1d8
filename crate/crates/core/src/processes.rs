//! Monitors that turn an orbit into process traces: Birkhoff sums and
//! maxima, hitting times, minimal distances, run lengths, shrinking-target
//! counts and window maxima.

use crate::dynamics::{CheckpointSchedule, Monitor, Point};
use crate::error::{Error, Result};
use crate::observables::{distance, DistanceOn, ObservableSpec};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    BirkhoffSum,
    Maximum,
    MinDistance,
    RunLength0,
    RunLength1,
    BcCount,
    WindowMax,
    BaseCoordinate,
    Ratio,
    Series,
}

impl TraceKind {
    /// Whether the process is non-decreasing in `n`.
    pub fn nondecreasing(self) -> bool {
        matches!(
            self,
            TraceKind::BirkhoffSum | TraceKind::Maximum | TraceKind::RunLength0 | TraceKind::RunLength1 | TraceKind::BcCount
        )
    }
}

/// Values of a process at the checkpoints of a schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcessTrace {
    kind: TraceKind,
    checkpoints: Vec<u64>,
    values: Vec<f64>,
}

impl ProcessTrace {
    pub fn new(kind: TraceKind) -> Self {
        ProcessTrace { kind, checkpoints: Vec::new(), values: Vec::new() }
    }

    pub fn from_parts(kind: TraceKind, checkpoints: Vec<u64>, values: Vec<f64>) -> Result<Self> {
        if checkpoints.len() != values.len() {
            return Err(Error::Parameter("checkpoints and values differ in length".into()));
        }
        if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Schedule("trace checkpoints must increase".into()));
        }
        Ok(ProcessTrace { kind, checkpoints, values })
    }

    pub fn push(&mut self, n: u64, v: f64) {
        debug_assert!(self.checkpoints.last().is_none_or(|&last| last < n));
        self.checkpoints.push(n);
        self.values.push(v);
    }

    pub fn kind(&self) -> TraceKind {
        self.kind
    }

    pub fn checkpoints(&self) -> &[u64] {
        &self.checkpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value_at(&self, n: u64) -> Option<f64> {
        self.checkpoints.binary_search(&n).ok().map(|i| self.values[i])
    }

    pub fn last(&self) -> Option<(u64, f64)> {
        Some((*self.checkpoints.last()?, *self.values.last()?))
    }

    /// Checks that non-decreasing processes are non-decreasing and that
    /// minimal distances are non-increasing.
    pub fn check_monotone(&self) -> Result<()> {
        let bad = if self.kind.nondecreasing() {
            self.values.windows(2).position(|w| w[1] < w[0])
        } else if self.kind == TraceKind::MinDistance {
            self.values.windows(2).position(|w| w[1] > w[0])
        } else {
            None
        };
        match bad {
            Some(i) => Err(Error::NonMonotone(format!(
                "{:?} trace breaks monotonicity at checkpoint {}",
                self.kind,
                self.checkpoints[i + 1]
            ))),
            None => Ok(()),
        }
    }
}

fn singular(t: u64) -> Error {
    Error::Singular { time: t, seed: None, what: "observable is infinite on the orbit".into() }
}

/// `S_n = sum_{k<n} phi(f^k x)` and `M_n = max_{k<n} phi(f^k x)`.
#[derive(Clone, Debug)]
pub struct BirkhoffMaxMonitor {
    obs: ObservableSpec,
    sum: f64,
    max: f64,
    s: ProcessTrace,
    m: ProcessTrace,
}

impl BirkhoffMaxMonitor {
    pub fn new(obs: ObservableSpec) -> Self {
        BirkhoffMaxMonitor {
            obs,
            sum: 0.0,
            max: 0.0,
            s: ProcessTrace::new(TraceKind::BirkhoffSum),
            m: ProcessTrace::new(TraceKind::Maximum),
        }
    }

    pub fn into_traces(self) -> (ProcessTrace, ProcessTrace) {
        (self.s, self.m)
    }
}

impl Monitor for BirkhoffMaxMonitor {
    #[inline(always)]
    fn observe(&mut self, t: u64, p: &Point) -> Result<()> {
        let v = self.obs.eval(p);
        if !v.is_finite() {
            return Err(singular(t));
        }
        self.sum += v;
        if v > self.max {
            self.max = v;
        }
        Ok(())
    }

    fn checkpoint(&mut self, n: u64, _p: &Point) {
        self.s.push(n, self.sum);
        self.m.push(n, self.max);
    }
}

/// Records the state `f^n x` at every checkpoint.
#[derive(Clone, Debug, Default)]
pub struct StateMonitor {
    points: Vec<(u64, Point)>,
}

impl StateMonitor {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn points(&self) -> &[(u64, Point)] {
        &self.points
    }

    pub fn base_trace(&self) -> ProcessTrace {
        let mut t = ProcessTrace::new(TraceKind::BaseCoordinate);
        for (n, p) in &self.points {
            t.push(*n, p.base);
        }
        t
    }
}

impl Monitor for StateMonitor {
    fn observe(&mut self, _t: u64, _p: &Point) -> Result<()> {
        Ok(())
    }

    fn checkpoint(&mut self, n: u64, p: &Point) {
        self.points.push((n, *p));
    }
}

/// Every visited base coordinate and symbol, for brute-force checks.
#[derive(Clone, Debug, Default)]
pub struct OrbitRecorder {
    pub bases: Vec<f64>,
}

impl OrbitRecorder {
    pub fn new() -> Self {
        Self::default()
    }

    /// `eps_k = 1` iff `f^{k-1} x` lies in `[1/2, 1)`, for `k = 1..`.
    pub fn symbols(&self) -> Vec<u8> {
        self.bases.iter().map(|&x| u8::from(x >= 0.5)).collect()
    }
}

impl Monitor for OrbitRecorder {
    fn observe(&mut self, _t: u64, p: &Point) -> Result<()> {
        self.bases.push(p.base);
        Ok(())
    }

    fn checkpoint(&mut self, _n: u64, _p: &Point) {}
}

/// Nested targets for hitting times.
#[derive(Clone, Debug)]
pub enum HittingTargets {
    /// Closed balls with strictly decreasing radii.
    Balls { center: Point, on: DistanceOn, radii: Vec<f64> },
    /// Super-level sets `phi >= u` with strictly increasing levels.
    Levels { observable: ObservableSpec, levels: Vec<f64> },
}

/// Hitting times of nested targets; `None` means not hit before the horizon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HittingRecord {
    pub targets: Vec<f64>,
    pub times: Vec<Option<u64>>,
    pub horizon: u64,
}

impl HittingRecord {
    pub fn resolved(&self) -> impl Iterator<Item = (f64, u64)> + '_ {
        self.targets.iter().zip(&self.times).filter_map(|(&r, t)| t.map(|t| (r, t)))
    }

    pub fn resolved_count(&self) -> usize {
        self.times.iter().filter(|t| t.is_some()).count()
    }
}

/// First times `tau = min{n >= min_time : f^n x in target}` for each target.
///
/// With `min_time = 0` the level form matches the maxima duality
/// `M_n < u  <=>  tau_u >= n`; ball return times use `min_time = 1`.
#[derive(Clone, Debug)]
pub struct HittingMonitor {
    targets: HittingTargets,
    min_time: u64,
    times: Vec<Option<u64>>,
    next: usize,
    horizon: u64,
}

impl HittingMonitor {
    pub fn new(targets: HittingTargets, min_time: u64) -> Result<Self> {
        let len = match &targets {
            HittingTargets::Balls { radii, .. } => {
                if radii.windows(2).any(|w| w[1] >= w[0]) {
                    return Err(Error::NonMonotone("radii must be strictly decreasing".into()));
                }
                radii.len()
            }
            HittingTargets::Levels { levels, .. } => {
                if levels.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::NonMonotone("levels must be strictly increasing".into()));
                }
                levels.len()
            }
        };
        Ok(HittingMonitor { targets, min_time, times: vec![None; len], next: 0, horizon: 0 })
    }

    #[inline]
    fn test(&mut self, t: u64, p: &Point) {
        if t < self.min_time {
            return;
        }
        match &self.targets {
            HittingTargets::Balls { center, on, radii } => {
                if self.next >= radii.len() || distance(*on, p, center) > radii[self.next] {
                    return;
                }
                let d = distance(*on, p, center);
                while self.next < radii.len() && d <= radii[self.next] {
                    self.times[self.next] = Some(t);
                    self.next += 1;
                }
            }
            HittingTargets::Levels { observable, levels } => {
                if self.next >= levels.len() {
                    return;
                }
                let v = observable.eval(p);
                while self.next < levels.len() && v >= levels[self.next] {
                    self.times[self.next] = Some(t);
                    self.next += 1;
                }
            }
        }
    }

    pub fn record(&self) -> HittingRecord {
        let targets = match &self.targets {
            HittingTargets::Balls { radii, .. } => radii.clone(),
            HittingTargets::Levels { levels, .. } => levels.clone(),
        };
        HittingRecord { targets, times: self.times.clone(), horizon: self.horizon }
    }
}

impl Monitor for HittingMonitor {
    #[inline]
    fn observe(&mut self, t: u64, p: &Point) -> Result<()> {
        self.test(t, p);
        Ok(())
    }

    fn checkpoint(&mut self, n: u64, p: &Point) {
        self.test(n, p);
        self.horizon = n;
    }

    fn settled(&self) -> bool {
        self.next >= self.times.len()
    }
}

/// `d_n = min_{from <= i <= n} d(f^i x, center)`.
#[derive(Clone, Debug)]
pub struct MinDistanceMonitor {
    center: Point,
    on: DistanceOn,
    from: u64,
    min: f64,
    trace: ProcessTrace,
}

impl MinDistanceMonitor {
    pub fn new(center: Point, on: DistanceOn, from: u64) -> Self {
        MinDistanceMonitor { center, on, from, min: f64::INFINITY, trace: ProcessTrace::new(TraceKind::MinDistance) }
    }

    pub fn into_trace(self) -> ProcessTrace {
        self.trace
    }
}

impl Monitor for MinDistanceMonitor {
    #[inline]
    fn observe(&mut self, t: u64, p: &Point) -> Result<()> {
        if t >= self.from {
            let d = distance(self.on, p, &self.center);
            if d < self.min {
                self.min = d;
            }
        }
        Ok(())
    }

    fn checkpoint(&mut self, n: u64, p: &Point) {
        let mut m = self.min;
        if n >= self.from {
            m = m.min(distance(self.on, p, &self.center));
        }
        self.trace.push(n, m);
    }
}

/// Longest run of the symbol `j` among `eps_1..eps_n`, where
/// `eps_k = 1` iff `f^{k-1} x` is in `[1/2, 1)`.
#[derive(Clone, Debug)]
pub struct RunLengthMonitor {
    symbol: bool,
    current: u64,
    best: u64,
    trace: ProcessTrace,
}

impl RunLengthMonitor {
    pub fn new(symbol: u8) -> Self {
        let kind = if symbol == 1 { TraceKind::RunLength1 } else { TraceKind::RunLength0 };
        RunLengthMonitor { symbol: symbol == 1, current: 0, best: 0, trace: ProcessTrace::new(kind) }
    }

    pub fn into_trace(self) -> ProcessTrace {
        self.trace
    }
}

impl Monitor for RunLengthMonitor {
    #[inline]
    fn observe(&mut self, _t: u64, p: &Point) -> Result<()> {
        if (p.base >= 0.5) == self.symbol {
            self.current += 1;
            if self.current > self.best {
                self.best = self.current;
            }
        } else {
            self.current = 0;
        }
        Ok(())
    }

    fn checkpoint(&mut self, n: u64, _p: &Point) {
        self.trace.push(n, self.best as f64);
    }
}

/// Closed balls `B_k = B(center, r_k)` with non-increasing radii.
#[derive(Clone)]
pub struct ShrinkingBalls {
    pub center: Point,
    pub on: DistanceOn,
    radius: Arc<dyn Fn(u64) -> f64 + Send + Sync>,
    max_radius: f64,
}

impl std::fmt::Debug for ShrinkingBalls {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ShrinkingBalls")
            .field("center", &self.center)
            .field("max_radius", &self.max_radius)
            .finish()
    }
}

impl ShrinkingBalls {
    /// `r_k = min(scale * k^-zeta, cap)`.
    pub fn power(center: Point, on: DistanceOn, scale: f64, zeta: f64, cap: f64) -> Self {
        ShrinkingBalls {
            center,
            on,
            radius: Arc::new(move |k| (scale * (k as f64).powf(-zeta)).min(cap)),
            max_radius: cap.min(scale),
        }
    }

    pub fn radius(&self, k: u64) -> f64 {
        (self.radius)(k)
    }

    #[inline]
    fn contains(&self, k: u64, p: &Point) -> bool {
        let d = distance(self.on, p, &self.center);
        d <= self.max_radius && d <= self.radius(k)
    }
}

/// Shrinking-target count `sum_{k=1}^n 1_{B_k}(f^k x)`.
#[derive(Clone, Debug)]
pub struct BcCounter {
    balls: ShrinkingBalls,
    count: u64,
    trace: ProcessTrace,
}

impl BcCounter {
    pub fn new(balls: ShrinkingBalls) -> Self {
        BcCounter { balls, count: 0, trace: ProcessTrace::new(TraceKind::BcCount) }
    }

    pub fn into_trace(self) -> ProcessTrace {
        self.trace
    }
}

impl Monitor for BcCounter {
    #[inline]
    fn observe(&mut self, t: u64, p: &Point) -> Result<()> {
        if t >= 1 && self.balls.contains(t, p) {
            self.count += 1;
        }
        Ok(())
    }

    fn checkpoint(&mut self, n: u64, p: &Point) {
        let here = n >= 1 && self.balls.contains(n, p);
        self.trace.push(n, (self.count + u64::from(here)) as f64);
    }
}

/// `sum_{k=1}^{floor(n^{1/b})} mu(B_{floor(k^b)})`, the companion series of
/// the shrinking-target bounds.
pub fn bc_series(measure: impl Fn(u64) -> f64, n: u64, b: f64) -> f64 {
    let top = (n as f64).powf(1.0 / b).floor() as u64;
    (1..=top).map(|k| measure(((k as f64).powf(b).floor() as u64).max(1))).sum()
}

/// Window length rule `K(n)` for window maxima.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WindowRule {
    /// `floor(c log2 n / alpha)`.
    LogScaled { c: f64, alpha: f64 },
    /// `floor(n^c)`.
    Power { c: f64 },
}

impl WindowRule {
    pub fn k(&self, n: u64) -> usize {
        let n = n as f64;
        let k = match *self {
            WindowRule::LogScaled { c, alpha } => c * n.log2() / alpha,
            WindowRule::Power { c } => n.powf(c),
        };
        k.max(0.0).floor() as usize
    }
}

/// `max_{0 <= i <= n-K} sum_{j=i}^{i+K-1} s_j` over a stored 0/1 sequence.
///
/// # Errors
/// `K > n`.
pub fn erdos_renyi(symbols: &[u8], k: usize) -> Result<u64> {
    if k > symbols.len() {
        return Err(Error::Parameter(format!("window {k} longer than sequence {}", symbols.len())));
    }
    if k == 0 {
        return Ok(0);
    }
    let mut sum: u64 = symbols[..k].iter().map(|&s| s as u64).sum();
    let mut best = sum;
    for i in k..symbols.len() {
        sum = sum + symbols[i] as u64 - symbols[i - k] as u64;
        best = best.max(sum);
    }
    Ok(best)
}

/// Sliding sums of several window lengths over one ring buffer.
#[derive(Clone, Debug)]
struct Windows {
    ring: Vec<u8>,
    mask: usize,
    seen: usize,
    ks: Vec<usize>,
    sums: Vec<u64>,
    best: Vec<u64>,
}

impl Windows {
    fn new(mut ks: Vec<usize>) -> Self {
        ks.sort_unstable();
        ks.dedup();
        let size = ks.last().map_or(1, |&k| (k + 1).next_power_of_two());
        let n = ks.len();
        Windows { ring: vec![0; size], mask: size - 1, seen: 0, ks, sums: vec![0; n], best: vec![0; n] }
    }

    #[inline]
    fn push(&mut self, s: u8) {
        let pos = self.seen & self.mask;
        self.ring[pos] = s;
        self.seen += 1;
        for j in 0..self.ks.len() {
            let k = self.ks[j];
            if k == 0 {
                continue;
            }
            let out = if self.seen > k { self.ring[(self.seen - 1 - k) & self.mask] } else { 0 };
            self.sums[j] = self.sums[j] + s as u64 - out as u64;
            if self.seen >= k && self.sums[j] > self.best[j] {
                self.best[j] = self.sums[j];
            }
        }
    }

    fn best(&self, k: usize) -> u64 {
        self.ks.binary_search(&k).map_or(0, |j| self.best[j])
    }

    /// Stops tracking lengths below `k`.
    fn retire_below(&mut self, k: usize) {
        let cut = self.ks.partition_point(|&x| x < k);
        if cut > 0 {
            self.ks.drain(..cut);
            self.sums.drain(..cut);
            self.best.drain(..cut);
        }
    }
}

/// Online window maxima `Upsilon(1_A, n, K(n))` at each checkpoint, for
/// `A = [1/2, 1)` (`symbol = 1`) or its complement (`symbol = 0`).
#[derive(Clone, Debug)]
pub struct ErdosRenyiMonitor {
    symbol: bool,
    rule: WindowRule,
    windows: Windows,
    trace: ProcessTrace,
}

impl ErdosRenyiMonitor {
    pub fn new(symbol: u8, rule: WindowRule, schedule: &CheckpointSchedule) -> Self {
        let ks = schedule.points().iter().map(|&n| rule.k(n).min(n as usize)).collect();
        ErdosRenyiMonitor { symbol: symbol == 1, rule, windows: Windows::new(ks), trace: ProcessTrace::new(TraceKind::WindowMax) }
    }

    pub fn into_trace(self) -> ProcessTrace {
        self.trace
    }

    pub fn rule(&self) -> WindowRule {
        self.rule
    }
}

impl Monitor for ErdosRenyiMonitor {
    #[inline]
    fn observe(&mut self, _t: u64, p: &Point) -> Result<()> {
        self.windows.push(u8::from((p.base >= 0.5) == self.symbol));
        Ok(())
    }

    fn checkpoint(&mut self, n: u64, _p: &Point) {
        let k = self.rule.k(n).min(n as usize);
        self.trace.push(n, self.windows.best(k) as f64);
        let growing = match self.rule {
            WindowRule::LogScaled { c, alpha } => c >= 0.0 && alpha > 0.0,
            WindowRule::Power { c } => c >= 0.0,
        };
        // later checkpoints never use a shorter window
        if growing {
            self.windows.retire_below(k);
        }
    }
}

/// `a(S_n) / n` with `a(S) = S^{alpha_phi - eps}`, the regularity diagnostic
/// for rescaling sequences of Birkhoff sums.
pub fn aaronson_diagnostic(sums: &ProcessTrace, alpha_phi: f64, eps: f64) -> Result<ProcessTrace> {
    if sums.kind() != TraceKind::BirkhoffSum {
        return Err(Error::Parameter("diagnostic needs a Birkhoff-sum trace".into()));
    }
    let e = alpha_phi - eps;
    let values = sums
        .checkpoints()
        .iter()
        .zip(sums.values())
        .map(|(&n, &s)| s.powf(e) / n as f64)
        .collect();
    ProcessTrace::from_parts(TraceKind::Ratio, sums.checkpoints().to_vec(), values)
}

/// Checks `M_n < u  <=>  tau_u >= n` for every checkpoint and level, where
/// `tau_u = min{k >= 0 : phi(f^k x) >= u}`. Censored times count as `>= n`
/// for checkpoints up to the horizon.
pub fn check_max_hit_duality(maxima: &ProcessTrace, record: &HittingRecord) -> std::result::Result<(), String> {
    for (&n, &m) in maxima.checkpoints().iter().zip(maxima.values()) {
        if n > record.horizon {
            continue;
        }
        for (&u, &tau) in record.targets.iter().zip(&record.times) {
            let below = m < u;
            let late = tau.is_none_or(|t| t >= n);
            if below != late {
                return Err(format!("n = {n}, u = {u}: M_n = {m}, tau_u = {tau:?}"));
            }
        }
    }
    Ok(())
}
