use super::map::LsvBranch;
use crate::error::{Error, Result};
use crate::rng::{DigitStream, OrbitSeed};

/// Largest number of preimages kept in the table; deeper cells use the
/// asymptotic expansion anchored at the last tabulated entry.
pub const TABLE_CAP: usize = 1 << 22;

/// First return of the LSV map to `Y = [1/2, 1)`.
///
/// Holds the left-branch preimages `x_0 = 1/2 > x_1 > ...` of the neutral
/// fixed point, with `f(x_{n+1}) = x_n`. The induced cells are
/// `Y_n = [z_n, z_{n-1})` with `z_n = (1 + x_{n-1}) / 2`, and points of `Y_n`
/// return after exactly `n` steps.
#[derive(Clone, Debug)]
pub struct InducedSystem {
    branch: LsvBranch,
    x: Vec<f64>,
    anchor: f64,
}

/// How the induced orbit crosses long laminar phases.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InducedMode {
    /// Iterate every clock step.
    Exact,
    /// Cells deeper than `depth` are replaced by the cell `depth` at the
    /// same relative position before iterating exactly. The return time is
    /// exact; the landing point carries a distortion error of order `1/depth`.
    FastForward { depth: u64 },
}

impl InducedSystem {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::Parameter(format!("induced system needs alpha > 0, got {alpha}")));
        }
        let branch = LsvBranch::new(alpha)?;
        let mut s = InducedSystem { branch, x: vec![0.5], anchor: 0.0 };
        s.reanchor();
        Ok(s)
    }

    /// Builds the system with the table extended to `depth` entries.
    pub fn with_depth(alpha: f64, depth: usize) -> Result<Self> {
        let mut s = Self::new(alpha)?;
        s.extend(depth)?;
        Ok(s)
    }

    pub fn alpha(&self) -> f64 {
        self.branch.alpha()
    }

    pub fn branch(&self) -> &LsvBranch {
        &self.branch
    }

    /// Index of the deepest tabulated preimage.
    pub fn depth(&self) -> usize {
        self.x.len() - 1
    }

    /// Extends the table so that `x_n` is tabulated (capped at [`TABLE_CAP`]).
    pub fn extend(&mut self, n: usize) -> Result<()> {
        let n = n.min(TABLE_CAP);
        if n <= self.depth() {
            return Ok(());
        }
        self.x.reserve(n - self.depth());
        while self.depth() < n {
            let prev = *self.x.last().unwrap();
            let next = self.preimage(prev).map_err(|reason| Error::TableExtension {
                index: self.x.len(),
                reason,
            })?;
            self.x.push(next);
        }
        self.reanchor();
        Ok(())
    }

    /// Left-branch preimage of `y`: bisection to `1e-14`, then two Newton steps.
    fn preimage(&self, y: f64) -> std::result::Result<f64, String> {
        let b = &self.branch;
        let mut lo = y / (1.0 + b.c() * b.pow(y));
        let mut hi = y;
        while hi - lo > 1e-14 {
            let mid = 0.5 * (lo + hi);
            if b.left(mid) < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut x = 0.5 * (lo + hi);
        for _ in 0..2 {
            let dx = (b.left(x) - y) / b.left_derivative(x);
            x -= dx;
        }
        if !(x > 0.0 && x < y) {
            return Err(format!("root {x} left the bracket below {y}"));
        }
        let err = (b.left(x) - y).abs();
        if err > 4.0 * ulp(y) {
            return Err(format!("residual {err:e} exceeds 4 ulp of {y}"));
        }
        Ok(x)
    }

    fn reanchor(&mut self) {
        let n = self.depth();
        if n == 0 {
            self.anchor = 0.0;
            return;
        }
        let u = self.x[n].powf(-self.alpha());
        self.anchor = u - self.drift(n as f64);
    }

    /// `alpha c n - ((alpha + 1) c / 2) ln n`, the growth of `u_n = x_n^-alpha`.
    fn drift(&self, n: f64) -> f64 {
        let a = self.alpha();
        let c = self.branch.c();
        a * c * n - 0.5 * (a + 1.0) * c * n.ln()
    }

    /// `u_n = x_n^{-alpha}`, tabulated or from the anchored expansion.
    pub fn u(&self, n: u64) -> f64 {
        if (n as usize) <= self.depth() {
            self.x[n as usize].powf(-self.alpha())
        } else {
            self.drift(n as f64) + self.anchor
        }
    }

    /// `x_n`; `x_{-1}` is taken to be 1.
    pub fn x(&self, n: i64) -> f64 {
        if n < 0 {
            1.0
        } else if (n as usize) <= self.depth() {
            self.x[n as usize]
        } else {
            self.u(n as u64).powf(-1.0 / self.alpha())
        }
    }

    /// Left endpoint `z_n` of the cell `Y_n`, with `z_0 = 1`.
    pub fn z(&self, n: u64) -> f64 {
        0.5 * (1.0 + self.x(n as i64 - 1))
    }

    /// Lebesgue measure of `Y_n`, `n >= 1`.
    pub fn cell_measure(&self, n: u64) -> f64 {
        0.5 * (self.x(n as i64 - 2) - self.x(n as i64 - 1))
    }

    /// The `n` with `w` in `[x_n, x_{n-1})`: the number of steps a point
    /// `w` in `(0, 1)` needs to enter `Y`. `w = 0` never enters and gives `u64::MAX`.
    pub fn return_time_of_entry(&self, w: f64) -> u64 {
        if w >= 0.5 {
            return 0;
        }
        if w <= 0.0 {
            return u64::MAX;
        }
        let d = self.depth();
        if w >= self.x[d] {
            // x is decreasing: count entries strictly greater than w
            let k = self.x.partition_point(|&v| v > w);
            return k as u64;
        }
        let u = w.powf(-self.alpha());
        if !u.is_finite() {
            return u64::MAX;
        }
        let a = self.alpha();
        let c = self.branch.c();
        let mut n = (u - self.anchor) / (a * c);
        for _ in 0..6 {
            n = (u - self.anchor + 0.5 * (a + 1.0) * c * n.max(1.0).ln()) / (a * c);
        }
        if n >= 1.8e19 {
            return u64::MAX;
        }
        let mut k = (n.ceil() as u64).max(d as u64 + 1);
        while k > d as u64 + 1 && self.u(k - 1) >= u {
            k -= 1;
        }
        while self.u(k) < u {
            k += 1;
        }
        k
    }

    /// Clock return time of `y` in `Y`.
    pub fn return_time(&self, y: f64) -> u64 {
        self.return_time_of_entry(2.0 * y - 1.0).saturating_add(1)
    }

    /// Relative position of `w` inside its entry cell `n`, in `[0, 1)`,
    /// and the width of the rounding uncertainty of that position.
    fn relative_position(&self, w: f64, n: u64) -> (f64, f64) {
        let (t, dt) = if (n as usize) <= self.depth() {
            let lo = self.x(n as i64);
            let hi = self.x(n as i64 - 1);
            ((w - lo) / (hi - lo), 2.0 * w * f64::EPSILON / (hi - lo))
        } else {
            let u = w.powf(-self.alpha());
            let un = self.u(n);
            let gap = un - self.u(n - 1);
            ((un - u) / gap, (self.alpha() + 2.0) * u * f64::EPSILON / gap)
        };
        (t.clamp(0.0, 1.0 - f64::EPSILON), dt)
    }
}

/// The induced orbit `(y_{j+1}, R_j)` of a point `y_0` in `Y`.
pub struct InducedOrbit<'a> {
    sys: &'a InducedSystem,
    y: f64,
    mode: InducedMode,
    returns: u64,
    digits: DigitStream,
}

impl<'a> InducedOrbit<'a> {
    pub fn new(sys: &'a InducedSystem, y0: f64, mode: InducedMode) -> Result<Self> {
        if !(0.5..1.0).contains(&y0) {
            return Err(Error::Domain(format!("induced orbits start in [1/2, 1), got {y0}")));
        }
        if let InducedMode::FastForward { depth } = mode {
            if depth < 2 || depth as usize > sys.depth() {
                return Err(Error::Parameter(format!(
                    "fast-forward depth {depth} must lie in [2, {}]",
                    sys.depth()
                )));
            }
        }
        let digits = DigitStream::from_seed(OrbitSeed::new(y0.to_bits(), 1));
        Ok(InducedOrbit { sys, y: y0, mode, returns: 0, digits })
    }

    pub fn current(&self) -> f64 {
        self.y
    }

    fn singular(&self) -> Error {
        Error::Singular {
            time: self.returns,
            seed: None,
            what: "induced orbit reached the neutral fixed point".into(),
        }
    }

    fn iterate_to_y(&self, mut x: f64, mut count: u64) -> Result<(f64, u64)> {
        let b = self.sys.branch();
        while x < 0.5 {
            if x <= 0.0 {
                return Err(self.singular());
            }
            x = b.left(x);
            count += 1;
        }
        Ok((x, count))
    }

    /// Past the resolution of `f64` the low part of the position is lost;
    /// it is redrawn uniformly over the uncertainty window, which is the
    /// conditional law of the position for a Lebesgue-typical point.
    fn resolve(&mut self, t: f64, dt: f64) -> f64 {
        if dt < 1e-9 {
            return t;
        }
        if dt >= 1.0 {
            return self.digits.uniform();
        }
        let s = t + (self.digits.uniform() - 0.5) * dt;
        let s = if s < 0.0 { -s } else if s >= 1.0 { 2.0 - s } else { s };
        s.clamp(0.0, 1.0 - f64::EPSILON)
    }

    /// Advances one return and yields `(y_{j+1}, R_j)`.
    pub fn advance(&mut self) -> Result<(f64, u64)> {
        let w = 2.0 * self.y - 1.0;
        if w <= 0.0 {
            return Err(self.singular());
        }
        let (y, r) = match self.mode {
            InducedMode::Exact => self.iterate_to_y(w, 1)?,
            InducedMode::FastForward { depth } => {
                let n = self.sys.return_time_of_entry(w);
                if n == u64::MAX {
                    return Err(self.singular());
                }
                if n <= depth {
                    self.iterate_to_y(w, 1)?
                } else {
                    let (t, dt) = self.sys.relative_position(w, n);
                    let t = self.resolve(t, dt);
                    let lo = self.sys.x(depth as i64);
                    let hi = self.sys.x(depth as i64 - 1);
                    let landing = lo + t * (hi - lo);
                    let (y, s) = self.iterate_to_y(landing, 0)?;
                    (y, 1 + (n - depth) + s)
                }
            }
        };
        self.y = y;
        self.returns += 1;
        Ok((y, r))
    }
}

impl Iterator for InducedOrbit<'_> {
    type Item = Result<(f64, u64)>;

    fn next(&mut self) -> Option<Self::Item> {
        Some(self.advance())
    }
}

fn ulp(x: f64) -> f64 {
    let b = x.abs().to_bits();
    f64::from_bits(b + 1) - f64::from_bits(b)
}
