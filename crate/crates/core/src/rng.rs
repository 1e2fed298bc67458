//! Seeded random streams.
//!
//! Every stream is a ChaCha8 generator seeded through `seed_from_u64`, so a
//! seed produces the same sequence on every platform. Independent streams
//! for parallel work are derived with [`mix_seed`], a SplitMix64 finalizer
//! applied to the parent seed and the stream index.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seed used when the caller does not pick one.
pub const DEFAULT_SEED: u64 = 0x5EED_C0DE_2024_0001;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `splitmix64(seed ^ splitmix64(stream))`.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream))
}

#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        RandomSource {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// A fresh stream whose seed is `mix_seed(self.seed(), stream)`; the
    /// state of `self` is not consulted.
    pub fn derive(&self, stream: u64) -> RandomSource {
        RandomSource::new(mix_seed(self.seed, stream))
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    /// `true` with probability `p`.
    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.gen()
    }
}
