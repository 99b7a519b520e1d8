//! Continued fractions, Diophantine type and exact rotation hitting times.

use crate::circle::{radius_fixed, Circle};
use crate::error::{Error, Result};
use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

/// A simple continued fraction `[a_0; a_1, a_2, ...]`, stored explicitly to
/// a finite depth.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContinuedFraction {
    a0: BigUint,
    quotients: Vec<BigUint>,
}

impl ContinuedFraction {
    /// # Errors
    /// Rejects a zero partial quotient after `a_0`.
    pub fn new(a0: BigUint, quotients: Vec<BigUint>) -> Result<Self> {
        if quotients.iter().any(|a| a.is_zero()) {
            return Err(Error::Parameter("partial quotients after a_0 must be positive".into()));
        }
        Ok(ContinuedFraction { a0, quotients })
    }

    pub fn from_u64(a0: u64, quotients: &[u64]) -> Result<Self> {
        Self::new(BigUint::from(a0), quotients.iter().map(|&a| BigUint::from(a)).collect())
    }

    /// `depth` partial quotients produced by `f(k, q_{k-1})` for `k = 1..=depth`.
    pub fn from_fn(depth: usize, mut f: impl FnMut(usize, &BigUint) -> BigUint) -> Result<Self> {
        let mut cf = ContinuedFraction { a0: BigUint::zero(), quotients: Vec::with_capacity(depth) };
        let (mut q_prev, mut q) = (BigUint::zero(), BigUint::one());
        for k in 1..=depth {
            let a = f(k, &q);
            if a.is_zero() {
                return Err(Error::Parameter(format!("generator gave a_{k} = 0")));
            }
            let next = &a * &q + &q_prev;
            q_prev = std::mem::replace(&mut q, next);
            cf.quotients.push(a);
        }
        Ok(cf)
    }

    /// `(sqrt 5 - 1) / 2 = [0; 1, 1, 1, ...]`.
    pub fn golden(depth: usize) -> Self {
        ContinuedFraction { a0: BigUint::zero(), quotients: vec![BigUint::one(); depth] }
    }

    pub fn a0(&self) -> &BigUint {
        &self.a0
    }

    /// `a_1, a_2, ...`
    pub fn quotients(&self) -> &[BigUint] {
        &self.quotients
    }

    pub fn depth(&self) -> usize {
        self.quotients.len()
    }

    /// Convergents `(p_k, q_k)` for `k = 0..=n`.
    pub fn convergents(&self, n: usize) -> Result<Vec<(BigUint, BigUint)>> {
        if n > self.depth() {
            return Err(Error::Depth(format!("asked for {n} convergents of a depth-{} expansion", self.depth())));
        }
        let mut out = Vec::with_capacity(n + 1);
        let (mut p_prev, mut q_prev) = (BigUint::one(), BigUint::zero());
        let (mut p, mut q) = (self.a0.clone(), BigUint::one());
        out.push((p.clone(), q.clone()));
        for a in &self.quotients[..n] {
            let pn = a * &p + &p_prev;
            let qn = a * &q + &q_prev;
            p_prev = std::mem::replace(&mut p, pn);
            q_prev = std::mem::replace(&mut q, qn);
            out.push((p.clone(), q.clone()));
        }
        Ok(out)
    }

    /// Denominators `q_0..=q_depth`.
    pub fn denominators(&self) -> Vec<BigUint> {
        self.convergents(self.depth()).unwrap().into_iter().map(|(_, q)| q).collect()
    }

    /// The expansion padded with ones until the last denominator reaches `min_q`.
    pub fn deepened(&self, min_q: &BigUint) -> ContinuedFraction {
        let mut cf = self.clone();
        let conv = cf.convergents(cf.depth()).unwrap();
        let (mut q_prev, mut q) = if conv.len() >= 2 {
            (conv[conv.len() - 2].1.clone(), conv[conv.len() - 1].1.clone())
        } else {
            (BigUint::zero(), BigUint::one())
        };
        while &q < min_q || cf.depth() < 2 {
            cf.quotients.push(BigUint::one());
            let next = &q + &q_prev;
            q_prev = std::mem::replace(&mut q, next);
        }
        cf
    }

    /// Fractional part as a 128-bit fixed-point value, from the first
    /// convergent with denominator above `2^96`.
    pub fn fixed_point(&self) -> Circle {
        let bound = BigUint::one() << 96u32;
        let cf = self.deepened(&(&bound + 1u32));
        let conv = cf.convergents(cf.depth()).unwrap();
        let (p, q) = conv.iter().find(|(_, q)| q > &bound).unwrap();
        let frac = p - &cf.a0 * q;
        let scaled = ((frac << 128u32) + (q >> 1u32)) / q;
        let modulus = BigUint::one() << 128u32;
        Circle((scaled % modulus).to_u128().unwrap())
    }

    pub fn to_f64(&self) -> f64 {
        self.a0.to_f64().unwrap_or(f64::INFINITY) + self.fixed_point().to_f64()
    }

    /// Estimates the Diophantine type from the partial quotients.
    ///
    /// Uses `1 + max log a_{n+1} / log q_n` over `n < depth` with `q_n >= 2`.
    /// This has the same limsup as `log q_{n+1} / log q_n` but no additive
    /// `O(1 / log q_n)` bias, so bounded-type numbers give exactly 1.
    pub fn type_estimate(&self, depth: usize) -> Result<TypeEstimate> {
        let depth = depth.min(self.depth());
        let qs = self.convergents(depth)?;
        let mut best: Option<TypeEstimate> = None;
        for n in 1..depth {
            let q = &qs[n].1;
            if q < &BigUint::from(2u32) {
                continue;
            }
            let g = 1.0 + ln_big(&self.quotients[n]) / ln_big(q);
            if best.is_none_or(|b| g > b.gamma) {
                best = Some(TypeEstimate { gamma: g, index: n });
            }
        }
        best.ok_or_else(|| Error::Depth(format!("no denominator reaches 2 within depth {depth}")))
    }

    /// The convergent-ratio form `max log q_{n+1} / log q_n` over the last
    /// half of the expansion.
    pub fn convergent_ratio_tail(&self) -> f64 {
        let qs = self.denominators();
        let start = (qs.len() / 2).max(1);
        qs.windows(2)
            .enumerate()
            .filter(|(i, w)| *i >= start && w[0] > BigUint::one())
            .map(|(_, w)| ln_big(&w[1]) / ln_big(&w[0]))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TypeEstimate {
    pub gamma: f64,
    /// Index `n` attaining the maximum.
    pub index: usize,
}

/// `[0; a_1, a_2, ...]` with `a_{n+1} = max(1, floor(q_n^{gamma - 1}))`.
///
/// # Errors
/// `gamma < 1` is rejected.
pub fn construct_type(gamma: f64, depth: usize) -> Result<ContinuedFraction> {
    if !(gamma.is_finite() && gamma >= 1.0) {
        return Err(Error::Parameter(format!("type must be at least 1, got {gamma}")));
    }
    ContinuedFraction::from_fn(depth, |_, q| {
        let a = pow_real_floor(q, gamma - 1.0);
        if a.is_zero() {
            BigUint::one()
        } else {
            a
        }
    })
}

/// Two angles whose denominators interleave with
/// `q'_n >= q_n^xi` and `q_{n+1} >= q'_n^xi`.
#[derive(Clone, Debug)]
pub struct YXiPair {
    pub theta: ContinuedFraction,
    pub theta_prime: ContinuedFraction,
    pub xi: f64,
    /// One entry per checked inequality, in interleaved order.
    pub certificate: Vec<bool>,
}

impl YXiPair {
    pub fn certified(&self) -> bool {
        self.certificate.iter().all(|&b| b)
    }
}

/// Greedy construction: each partial quotient is the smallest one meeting
/// the next inequality.
pub fn construct_y_xi_pair(xi: f64, depth: usize) -> Result<YXiPair> {
    if !(xi.is_finite() && xi >= 1.0) {
        return Err(Error::Parameter(format!("xi must be at least 1, got {xi}")));
    }
    if depth == 0 {
        return Err(Error::Parameter("depth must be positive".into()));
    }
    let mut a = Vec::new();
    let mut b = Vec::new();
    let (mut q_prev, mut q) = (BigUint::zero(), BigUint::one());
    let (mut r_prev, mut r) = (BigUint::zero(), BigUint::one());
    let mut certificate = Vec::new();
    for _ in 0..depth {
        let target = pow_real_ceil(&r, xi);
        let an = smallest_quotient(&target, &q, &q_prev);
        let qn = &an * &q + &q_prev;
        certificate.push(qn >= target);
        q_prev = std::mem::replace(&mut q, qn);
        a.push(an);

        let target = pow_real_ceil(&q, xi);
        let bn = smallest_quotient(&target, &r, &r_prev);
        let rn = &bn * &r + &r_prev;
        certificate.push(rn >= target);
        r_prev = std::mem::replace(&mut r, rn);
        b.push(bn);
    }
    Ok(YXiPair {
        theta: ContinuedFraction::new(BigUint::zero(), a)?,
        theta_prime: ContinuedFraction::new(BigUint::zero(), b)?,
        xi,
        certificate,
    })
}

fn smallest_quotient(target: &BigUint, q: &BigUint, q_prev: &BigUint) -> BigUint {
    if target <= &(q + q_prev) {
        return BigUint::one();
    }
    let need = target - q_prev;
    need.div_ceil(q).max(BigUint::one())
}

/// `||q theta||`, the distance from `q theta` to the nearest integer,
/// computed from a convergent whose denominator exceeds `q * 2^140`.
pub fn rotation_distance(cf: &ContinuedFraction, q: &BigUint) -> f64 {
    let bound = q << 140u32;
    let cf = cf.deepened(&bound);
    let conv = cf.convergents(cf.depth()).unwrap();
    let (p, qn) = conv.last().unwrap();
    let r = (q * p) % qn;
    let d = std::cmp::min(r.clone(), qn - &r);
    ratio_f64(&d, qn)
}

/// Smallest `x >= 0` with `(a x + c) mod m` in `[lo, hi]`, for `lo <= hi < m`.
pub fn first_entry(a: &BigUint, c: &BigUint, lo: &BigUint, hi: &BigUint, m: &BigUint) -> Option<BigUint> {
    let a = a % m;
    let c = c % m;
    // (a x + c) mod m in [lo, hi]  <=>  (a x) mod m in [lo - c, hi - c] mod m
    let l = (lo + m - &c) % m;
    let h = (hi + m - &c) % m;
    if l <= h {
        homogeneous(&a, m, &l, &h)
    } else {
        let first = homogeneous(&a, m, &l, &(m - 1u32));
        let second = homogeneous(&a, m, &BigUint::zero(), &h);
        match (first, second) {
            (Some(x), Some(y)) => Some(x.min(y)),
            (x, y) => x.or(y),
        }
    }
}

/// Smallest `x >= 0` with `(a x) mod m` in `[l, r]`, `l <= r < m`.
fn homogeneous(a: &BigUint, m: &BigUint, l: &BigUint, r: &BigUint) -> Option<BigUint> {
    if l.is_zero() {
        return Some(BigUint::zero());
    }
    let a = a % m;
    if a.is_zero() {
        return None;
    }
    let x = l.div_ceil(&a);
    if &(&a * &x) <= r {
        return Some(x);
    }
    // No multiple of a in [l, r]: look for the wrap count y >= 1 instead.
    let lo = (&a - r % &a) % &a;
    let hi = (&a - l % &a) % &a;
    let y = homogeneous(&(m % &a), &a, &lo, &hi)?;
    let x = (l + m * &y).div_ceil(&a);
    if &a * &x - m * &y <= *r {
        Some(x)
    } else {
        None
    }
}

/// First `n >= 1` with `d(x0 + n theta, y) <= r` on the circle, in exact
/// 128-bit fixed point. `None` if the closed ball is never entered.
pub fn rotation_hitting_time(theta: Circle, x0: Circle, y: Circle, r: f64) -> Option<u128> {
    let rad = radius_fixed(r);
    let m = BigUint::one() << 128u32;
    // d(p, y) <= R  <=>  (p - y + R) mod 2^128 in [0, 2R]
    let start = x0 + theta + Circle(rad) - y;
    let hi = if rad >= (1u128 << 127) { u128::MAX } else { 2 * rad };
    let x = first_entry(
        &BigUint::from(theta.0),
        &BigUint::from(start.0),
        &BigUint::zero(),
        &BigUint::from(hi),
        &m,
    )?;
    x.to_u128().and_then(|x| x.checked_add(1))
}

/// Natural logarithm of a big integer.
pub fn ln_big(q: &BigUint) -> f64 {
    let bits = q.bits();
    if bits <= 1000 {
        return q.to_f64().unwrap().ln();
    }
    let shift = bits - 64;
    let top = (q >> shift).to_f64().unwrap();
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

fn ratio_f64(a: &BigUint, b: &BigUint) -> f64 {
    let shift = b.bits().saturating_sub(1000);
    let a = (a >> shift).to_f64().unwrap();
    let b = (b >> shift).to_f64().unwrap();
    a / b
}

/// `floor(q^g)`, exact for integer `g` and to 53 significant bits otherwise.
fn pow_real_floor(q: &BigUint, g: f64) -> BigUint {
    if g == 0.0 {
        return BigUint::one();
    }
    if g.fract() == 0.0 && g <= 64.0 {
        return q.pow(g as u32);
    }
    if q.is_zero() {
        return BigUint::zero();
    }
    let log2 = g * ln_big(q) / std::f64::consts::LN_2;
    if log2 < 127.0 {
        return BigUint::from(2f64.powf(log2).floor() as u128);
    }
    shifted_pow2(log2)
}

fn shifted_pow2(log2: f64) -> BigUint {
    let whole = log2.floor();
    let mant = (2f64.powf(log2 - whole) * 2f64.powi(52)) as u64;
    BigUint::from(mant) << (whole as u64 - 52)
}

fn pow_real_ceil(q: &BigUint, g: f64) -> BigUint {
    if g.fract() == 0.0 && g <= 64.0 {
        return q.pow(g as u32);
    }
    pow_real_floor(q, g) + 1u32
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_denominators() {
        let cf = ContinuedFraction::from_u64(1, &[1; 8]).unwrap();
        let q: Vec<u64> = cf.denominators().iter().map(|q| q.to_u64().unwrap()).collect();
        assert_eq!(&q[1..7], &[1, 2, 3, 5, 8, 13]);
        let cf = ContinuedFraction::from_u64(0, &[2; 6]).unwrap();
        let q: Vec<u64> = cf.denominators().iter().map(|q| q.to_u64().unwrap()).collect();
        assert_eq!(&q[1..5], &[2, 5, 12, 29]);
    }

    #[test]
    fn golden_value() {
        let g = ContinuedFraction::golden(100);
        assert!((g.to_f64() - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn constructed_type_four() {
        let cf = construct_type(4.0, 6).unwrap();
        let q: Vec<u64> = cf.denominators()[..5].iter().map(|q| q.to_u64().unwrap()).collect();
        assert_eq!(q, vec![1, 1, 2, 17, 83521 + 2]);
        let est = cf.type_estimate(6).unwrap();
        assert!((3.8..=4.2).contains(&est.gamma));
    }

    #[test]
    fn first_entry_brute_force() {
        let m = 97u32;
        for a in [1u32, 5, 13, 40, 96] {
            for c in [0u32, 3, 50] {
                for (lo, hi) in [(0u32, 0u32), (10, 12), (60, 60), (90, 96), (1, 2)] {
                    let brute = (0..200u32).find(|x| {
                        let v = (a * x + c) % m;
                        v >= lo && v <= hi
                    });
                    let fast = first_entry(
                        &BigUint::from(a),
                        &BigUint::from(c),
                        &BigUint::from(lo),
                        &BigUint::from(hi),
                        &BigUint::from(m),
                    );
                    assert_eq!(fast.map(|x| x.to_u32().unwrap()), brute, "a={a} c={c} [{lo},{hi}]");
                }
            }
        }
    }

    #[test]
    fn rotation_hitting_matches_scan() {
        let theta = ContinuedFraction::golden(200).fixed_point();
        let x0 = Circle::from_f64(0.1);
        let y = Circle::from_f64(0.7);
        for r in [0.1, 0.01, 0.001, 1e-5] {
            let mut p = x0;
            let mut brute = None;
            for n in 1..2_000_000u128 {
                p = p + theta;
                if p.distance_fixed(y) <= radius_fixed(r) {
                    brute = Some(n);
                    break;
                }
            }
            assert_eq!(rotation_hitting_time(theta, x0, y, r), brute);
        }
    }
}
