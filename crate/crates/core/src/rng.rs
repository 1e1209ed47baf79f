//! Seeded, splittable random streams.
//!
//! Every replica, walker and population member owns its own stream derived
//! from `(master seed, index)`, so runs are reproducible bit-for-bit no
//! matter how work is scheduled. The generator is ChaCha8, a counter-based
//! stream cipher with identical output on every platform; the handful of
//! draw primitives the solvers need are implemented directly on its 64-bit
//! output so their bit patterns are pinned by this crate, not by a
//! downstream crate's sampling internals.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of the `index`-th child stream of `seed`.
///
/// For a fixed parent this is injective in `index` (an affine step along the
/// SplitMix64 sequence followed by its finalizer), so sibling streams never
/// collide.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    mix(seed.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN)))
}

/// A deterministic random stream with an explicit lineage.
///
/// Streams are single-owner: hand a replica its own stream via [`split`]
/// instead of sharing one. `split` depends only on the stream's lineage,
/// never on how many values have been drawn.
///
/// [`split`]: RandomStream::split
#[derive(Debug, Clone)]
pub struct RandomStream {
    rng: ChaCha8Rng,
    lineage: u64,
    decisions: u64,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            lineage: seed,
            decisions: 0,
        }
    }

    /// Child stream at `index`. Children of the same parent are mutually
    /// independent and independent of the parent's draws.
    pub fn split(&self, index: u64) -> Self {
        Self::new(derive_seed(self.lineage, index))
    }

    /// Number of decisions (index / uniform / bernoulli draws) consumed.
    pub fn decisions(&self) -> u64 {
        self.decisions
    }

    /// The seed this stream was created from (its lineage).
    pub fn seed(&self) -> u64 {
        self.lineage
    }

    /// Uniform integer in `0..bound` via Lemire's unbiased multiply-shift.
    pub fn index(&mut self, bound: usize) -> usize {
        assert!(bound >= 1, "index() requires a non-empty range");
        self.decisions += 1;
        let b = bound as u64;
        let mut m = (self.rng.next_u64() as u128) * (b as u128);
        let mut lo = m as u64;
        if lo < b {
            let t = b.wrapping_neg() % b;
            while lo < t {
                m = (self.rng.next_u64() as u128) * (b as u128);
                lo = m as u64;
            }
        }
        (m >> 64) as usize
    }

    /// Uniform f64 in `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        self.decisions += 1;
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform f64 in `[lo, hi)`.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// True with probability `p`.
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }
}
