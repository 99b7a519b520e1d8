//! Per-orbit random streams.
//!
//! Every orbit of an ensemble gets its own ChaCha8 stream selected by the
//! pair (master seed, orbit index), so results do not depend on how orbits are
//! distributed over threads.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Identifies the random stream of one orbit in an ensemble.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OrbitSeed {
    pub master: u64,
    pub index: u64,
}

impl OrbitSeed {
    pub fn new(master: u64, index: u64) -> Self {
        OrbitSeed { master, index }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(self.index);
        rng
    }
}

/// Lazily drawn binary digits, consumed one at a time.
///
/// Used to extend the expansion of a point beyond its stored precision, which
/// keeps shift-type maps from collapsing onto dyadic rationals.
#[derive(Clone, Debug)]
pub struct DigitStream {
    rng: ChaCha8Rng,
    buf: u64,
    left: u32,
}

impl DigitStream {
    pub fn new(rng: ChaCha8Rng) -> Self {
        DigitStream { rng, buf: 0, left: 0 }
    }

    pub fn from_seed(seed: OrbitSeed) -> Self {
        Self::new(seed.rng())
    }

    #[inline]
    pub fn bit(&mut self) -> u128 {
        if self.left == 0 {
            self.buf = self.rng.next_u64();
            self.left = 64;
        }
        let b = self.buf & 1;
        self.buf >>= 1;
        self.left -= 1;
        b as u128
    }

    pub fn next_u128(&mut self) -> u128 {
        ((self.rng.next_u64() as u128) << 64) | self.rng.next_u64() as u128
    }

    /// Uniform draw in `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}
