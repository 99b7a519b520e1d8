use crate::circle::Circle;
use crate::diophantine::ContinuedFraction;
use crate::error::{Error, Result};

/// Left branch `x (1 + 2^alpha x^alpha)` of the LSV map with the power
/// specialised for the common integer exponents.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LsvBranch {
    alpha: f64,
    c: f64,
    kind: PowKind,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum PowKind {
    Zero,
    One,
    Two,
    General,
}

impl LsvBranch {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::Parameter(format!("LSV exponent must be non-negative, got {alpha}")));
        }
        let kind = if alpha == 0.0 {
            PowKind::Zero
        } else if alpha == 1.0 {
            PowKind::One
        } else if alpha == 2.0 {
            PowKind::Two
        } else {
            PowKind::General
        };
        Ok(LsvBranch { alpha, c: 2f64.powf(alpha), kind })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `2^alpha`.
    pub fn c(&self) -> f64 {
        self.c
    }

    #[inline]
    pub fn pow(&self, x: f64) -> f64 {
        match self.kind {
            PowKind::Zero => 1.0,
            PowKind::One => x,
            PowKind::Two => x * x,
            PowKind::General => x.powf(self.alpha),
        }
    }

    #[inline]
    pub fn left(&self, x: f64) -> f64 {
        x * (1.0 + self.c * self.pow(x))
    }

    /// Derivative of the left branch.
    #[inline]
    pub fn left_derivative(&self, x: f64) -> f64 {
        1.0 + (self.alpha + 1.0) * self.c * self.pow(x)
    }

    /// Full map with the convention that `x = 1/2` uses the right branch.
    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        if x < 0.5 {
            let y = self.left(x);
            if y >= 1.0 {
                ONE_MINUS
            } else {
                y
            }
        } else {
            2.0 * x - 1.0
        }
    }
}

pub(crate) const ONE_MINUS: f64 = 1.0 - f64::EPSILON / 2.0;

/// A rotation number kept as its continued fraction together with the
/// 128-bit fixed-point value derived from a convergent with `q > 2^96`.
#[derive(Clone, Debug, PartialEq)]
pub struct AngleSpec {
    cf: ContinuedFraction,
    fixed: Circle,
}

impl AngleSpec {
    /// Builds the angle from its continued fraction. If the expansion is too
    /// short to reach a denominator above `2^96` it is extended with ones.
    pub fn from_cf(cf: ContinuedFraction) -> Self {
        let fixed = cf.fixed_point();
        AngleSpec { cf, fixed }
    }

    pub fn golden() -> Self {
        Self::from_cf(ContinuedFraction::golden(200))
    }

    pub fn cf(&self) -> &ContinuedFraction {
        &self.cf
    }

    pub fn fixed(&self) -> Circle {
        self.fixed
    }

    pub fn to_f64(&self) -> f64 {
        self.fixed.to_f64()
    }
}

/// The maps supported by the orbit engine.
#[derive(Clone, Debug, PartialEq)]
pub enum MapSpec {
    /// Liverani–Saussol–Vaienti map with exponent `alpha > 0`.
    Lsv { alpha: f64 },
    /// `x -> 2x mod 1`.
    Doubling,
    /// Full tent map on `[0, 1]`.
    Tent,
    /// `t -> t + theta` on the circle; the state lives in fiber 0.
    CircleRotation { theta: AngleSpec },
    /// Doubling base; the circle fiber advances by `theta` while the base is in `[1/2, 1)`.
    SkewDoublingCircle { theta: AngleSpec },
    /// Doubling base with a two-torus fiber rotated by `(theta1, theta2)` on `[1/2, 1)`.
    SkewDoublingTorus2 { theta1: AngleSpec, theta2: AngleSpec },
}

impl MapSpec {
    pub fn lsv(alpha: f64) -> Result<Self> {
        LsvBranch::new(alpha)?;
        Ok(MapSpec::Lsv { alpha })
    }

    /// Number of circle fibers carried by points of this system.
    pub fn fiber_dim(&self) -> usize {
        match self {
            MapSpec::Lsv { .. } | MapSpec::Doubling | MapSpec::Tent => 0,
            MapSpec::CircleRotation { .. } | MapSpec::SkewDoublingCircle { .. } => 1,
            MapSpec::SkewDoublingTorus2 { .. } => 2,
        }
    }

    /// Whether the base coordinate is meaningful (false for the pure rotation).
    pub fn has_base(&self) -> bool {
        !matches!(self, MapSpec::CircleRotation { .. })
    }

    pub fn validate(&self, p: &Point) -> Result<()> {
        if p.fibers().len() != self.fiber_dim() {
            return Err(Error::Domain(format!(
                "expected {} fiber coordinates, got {}",
                self.fiber_dim(),
                p.fibers().len()
            )));
        }
        let x = p.base;
        let ok = match self {
            MapSpec::Lsv { .. } | MapSpec::Tent => (0.0..=1.0).contains(&x),
            MapSpec::CircleRotation { .. } => true,
            _ => (0.0..1.0).contains(&x),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("base coordinate {x} outside the phase space")))
        }
    }
}

/// A phase-space point: a base coordinate in `[0, 1]` and up to two circle fibers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub base: f64,
    fibers: [Circle; 2],
    dim: u8,
}

impl Point {
    pub fn interval(x: f64) -> Self {
        Point { base: x, fibers: [Circle::ZERO; 2], dim: 0 }
    }

    /// A point of the circle, for the pure rotation.
    pub fn circle(t: Circle) -> Self {
        Point { base: 0.0, fibers: [t, Circle::ZERO], dim: 1 }
    }

    /// # Panics
    /// Panics if more than two fibers are given.
    pub fn skew(x: f64, fibers: &[Circle]) -> Self {
        assert!(fibers.len() <= 2, "at most two fiber coordinates");
        let mut f = [Circle::ZERO; 2];
        f[..fibers.len()].copy_from_slice(fibers);
        Point { base: x, fibers: f, dim: fibers.len() as u8 }
    }

    #[inline(always)]
    pub(crate) fn raw(base: f64, fibers: [Circle; 2], dim: u8) -> Self {
        Point { base, fibers, dim }
    }

    #[inline]
    pub fn fibers(&self) -> &[Circle] {
        &self.fibers[..self.dim as usize]
    }
}

/// One application of the map, computed directly in `f64` for the base.
///
/// The orbit engine does not call this for the shift-type bases; see
/// [`crate::dynamics::Orbit`] for why.
pub fn step(map: &MapSpec, p: &Point) -> Result<Point> {
    map.validate(p)?;
    let mut q = *p;
    let x = p.base;
    match map {
        MapSpec::Lsv { alpha } => {
            q.base = LsvBranch::new(*alpha)?.apply(x);
        }
        MapSpec::Doubling => q.base = doubling(x),
        MapSpec::Tent => q.base = if x < 0.5 { 2.0 * x } else { 2.0 - 2.0 * x },
        MapSpec::CircleRotation { theta } => {
            q.fibers[0] = p.fibers[0] + theta.fixed();
        }
        MapSpec::SkewDoublingCircle { theta } => {
            if x >= 0.5 {
                q.fibers[0] = p.fibers[0] + theta.fixed();
            }
            q.base = doubling(x);
        }
        MapSpec::SkewDoublingTorus2 { theta1, theta2 } => {
            if x >= 0.5 {
                q.fibers[0] = p.fibers[0] + theta1.fixed();
                q.fibers[1] = p.fibers[1] + theta2.fixed();
            }
            q.base = doubling(x);
        }
    }
    Ok(q)
}

fn doubling(x: f64) -> f64 {
    let y = 2.0 * x;
    if y >= 1.0 {
        y - 1.0
    } else {
        y
    }
}
