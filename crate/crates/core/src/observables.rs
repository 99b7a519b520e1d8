//! Observables `phi = psi(d(x, x~))` and their tail metadata.

use crate::dynamics::{InducedSystem, Point};
use crate::error::{Error, Result};
use std::fmt;
use std::sync::Arc;

/// Which coordinates a distance uses. The base coordinate is compared by
/// absolute difference; circle fibers by circle distance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DistanceOn {
    Base,
    Fiber(usize),
    /// Euclidean combination of all fiber distances.
    Fibers,
    /// Euclidean combination of base and fiber distances.
    Full,
}

#[inline(always)]
pub fn distance(on: DistanceOn, p: &Point, q: &Point) -> f64 {
    match on {
        DistanceOn::Base => (p.base - q.base).abs(),
        DistanceOn::Fiber(i) => p.fibers()[i].distance(q.fibers()[i]),
        _ => distance_combined(on, p, q),
    }
}

#[inline(never)]
fn distance_combined(on: DistanceOn, p: &Point, q: &Point) -> f64 {
    match on {
        DistanceOn::Full => {
            let b = p.base - q.base;
            (b * b + fiber_sq(p, q)).sqrt()
        }
        _ => fiber_sq(p, q).sqrt(),
    }
}

#[inline]
fn fiber_sq(p: &Point, q: &Point) -> f64 {
    p.fibers()
        .iter()
        .zip(q.fibers())
        .map(|(a, b)| {
            let d = a.distance(*b);
            d * d
        })
        .sum()
}

/// A decreasing profile `psi` applied to the distance.
#[derive(Clone)]
pub struct Psi {
    name: String,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl Psi {
    pub fn new(name: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Psi { name: name.into(), f: Arc::new(f) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl fmt::Debug for Psi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Psi({})", self.name)
    }
}

#[derive(Clone, Debug)]
pub enum ObservableKind {
    /// `d(x, center)^-k`.
    DistPower { center: Point, k: f64, on: DistanceOn },
    /// `-log d(x, center)`.
    NegLogDist { center: Point, on: DistanceOn },
    PsiOfDist { center: Point, on: DistanceOn, psi: Psi },
    /// First return time to `[1/2, 1)` for points of that set.
    ReturnTime { system: Arc<InducedSystem> },
    /// Indicator of the closed ball `d(x, center) <= radius`.
    BallIndicator { center: Point, radius: f64, on: DistanceOn },
    /// Symbolic distance of the doubling coding of the base to a fixed digit sequence.
    SymbolicCodingDist { target: Vec<u8>, depth: u32 },
}

/// An observable together with the exponent `alpha_phi` of
/// `mu(phi >= n) ~ n^{-alpha_phi}`, when known.
#[derive(Clone, Debug)]
pub struct ObservableSpec {
    pub kind: ObservableKind,
    pub alpha_phi: Option<f64>,
}

impl ObservableSpec {
    pub fn new(kind: ObservableKind) -> Self {
        ObservableSpec { kind, alpha_phi: None }
    }

    pub fn dist_power(center: Point, k: f64, on: DistanceOn) -> Self {
        Self::new(ObservableKind::DistPower { center, k, on })
    }

    pub fn neg_log_dist(center: Point, on: DistanceOn) -> Self {
        Self::new(ObservableKind::NegLogDist { center, on })
    }

    pub fn return_time(system: Arc<InducedSystem>) -> Self {
        let alpha = system.alpha();
        ObservableSpec { kind: ObservableKind::ReturnTime { system }, alpha_phi: Some(1.0 / alpha) }
    }

    pub fn with_alpha_phi(mut self, a: f64) -> Self {
        self.alpha_phi = Some(a);
        self
    }

    /// Value at `p`; `+inf` at the singular point.
    #[inline(always)]
    pub fn eval(&self, p: &Point) -> f64 {
        match &self.kind {
            ObservableKind::DistPower { center, k, on } => {
                let d = distance(*on, p, center);
                if *k == 1.0 {
                    1.0 / d
                } else if *k == 2.0 {
                    1.0 / (d * d)
                } else {
                    d.powf(-k)
                }
            }
            ObservableKind::BallIndicator { center, radius, on } => {
                if distance(*on, p, center) <= *radius {
                    1.0
                } else {
                    0.0
                }
            }
            _ => self.eval_other(p),
        }
    }

    #[inline(never)]
    fn eval_other(&self, p: &Point) -> f64 {
        match &self.kind {
            ObservableKind::NegLogDist { center, on } => -distance(*on, p, center).ln(),
            ObservableKind::PsiOfDist { center, on, psi } => (psi.f)(distance(*on, p, center)),
            ObservableKind::ReturnTime { system } => system.return_time(p.base) as f64,
            ObservableKind::SymbolicCodingDist { target, depth } => {
                symbolic_distance_to_digits(p.base, target, *depth)
            }
            ObservableKind::DistPower { .. } | ObservableKind::BallIndicator { .. } => unreachable!(),
        }
    }
}

/// Local dimension of the LSV invariant measure at `center`.
///
/// The density is bounded away from 0 and infinity off the origin, so the
/// dimension is 1 there. At 0 the density behaves like `x^-alpha`, giving
/// `1 - alpha` for `alpha < 1`; for `alpha >= 1` the dimension is undefined.
pub fn lsv_local_dimension(alpha: f64, center: f64) -> Option<f64> {
    if center > 0.0 {
        Some(1.0)
    } else if alpha < 1.0 {
        Some(1.0 - alpha)
    } else {
        None
    }
}

/// `alpha_phi` for `d(x, center)^-k` over the LSV measure.
pub fn lsv_alpha_phi(alpha: f64, center: f64, k: f64) -> Option<f64> {
    lsv_local_dimension(alpha, center).map(|d| d / k)
}

/// Least-squares estimate of `alpha_phi` from `mu(phi >= u)` at the given
/// levels, with `n_samples` draws from `sampler`.
///
/// # Errors
/// Fewer than 100 samples above the top level, or fewer than two levels.
pub fn alpha_phi_empirical(
    obs: &ObservableSpec,
    mut sampler: impl FnMut() -> Point,
    levels: &[f64],
    n_samples: usize,
) -> Result<f64> {
    if levels.len() < 2 {
        return Err(Error::Insufficient("need at least two levels".into()));
    }
    let values: Vec<f64> = (0..n_samples).map(|_| obs.eval(&sampler())).collect();
    let mut xs = Vec::with_capacity(levels.len());
    let mut ys = Vec::with_capacity(levels.len());
    for &u in levels {
        let count = values.iter().filter(|&&v| v >= u).count();
        if count < 100 {
            return Err(Error::TailMass(format!("{count} samples above level {u}")));
        }
        xs.push(u.ln());
        ys.push((count as f64 / n_samples as f64).ln());
    }
    Ok(-crate::estimators::ols(&xs, &ys).slope)
}

/// Result of comparing binary codings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymbolicDistance {
    /// `2^{-n*}`, or `2^{-depth}` when truncated.
    pub value: f64,
    /// First index where the codings differ.
    pub n_star: Option<u32>,
    pub truncated: bool,
}

#[inline]
fn digit(x: &mut f64) -> u8 {
    if *x >= 0.5 {
        *x = 2.0 * *x - 1.0;
        1
    } else {
        *x *= 2.0;
        0
    }
}

/// `2^{-n*}` where `n*` is the first differing digit of the codings of `x`
/// and `y` under `T(x) = 2x` on `[0, 1/2)`, `2x - 1` on `[1/2, 1]`.
/// The point 1 codes as all ones.
///
/// # Errors
/// An argument whose expansion terminates (its iterate reaches 0) before
/// the codings separate is rejected as dyadic.
pub fn symbolic_coding_distance(x: f64, y: f64, depth: u32) -> Result<SymbolicDistance> {
    if !((0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y)) {
        return Err(Error::Domain(format!("codings need points of [0, 1], got {x}, {y}")));
    }
    let (mut a, mut b) = (x, y);
    for i in 1..=depth {
        if (a == 0.0) != (b == 0.0) || (a == 0.0 && x != y) {
            return Err(Error::DyadicInput(format!("expansion of {x} or {y} terminates at digit {i}")));
        }
        if digit(&mut a) != digit(&mut b) {
            return Ok(SymbolicDistance { value: 0.5f64.powi(i as i32), n_star: Some(i), truncated: false });
        }
    }
    Ok(SymbolicDistance { value: 0.5f64.powi(depth as i32), n_star: None, truncated: true })
}

fn symbolic_distance_to_digits(x: f64, target: &[u8], depth: u32) -> f64 {
    let mut a = x;
    for i in 1..=depth {
        let t = target[(i as usize - 1) % target.len().max(1)];
        if digit(&mut a) != t {
            return 0.5f64.powi(i as i32);
        }
    }
    0.5f64.powi(depth as i32)
}
