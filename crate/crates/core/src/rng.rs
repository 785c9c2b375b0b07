//! Seeded, portable pseudo-random streams.
//!
//! Every random decision in the crate flows through [`SeededRng`], a thin
//! wrapper over SplitMix64 (64-bit state, increment `0x9E3779B97F4A7C15`,
//! finalizer constants `0xBF58476D1CE4E5B9` / `0x94D049BB133111EB`, shifts
//! 30/27/31). The derived draws are defined here exactly so that another
//! implementation can reproduce a run bit for bit:
//!
//! * `uniform()`      = `(next_u64() >> 11) * 2^-53`, in `[0, 1)`.
//! * `below(n)`       = Lemire's multiply-shift with rejection: draw `x`,
//!   `m = x * n` as 128-bit; reject while `low64(m) < (2^64 - n) mod n`;
//!   return `high64(m)`.
//! * `gaussian()`     = Box-Muller cosine branch, consuming two uniforms:
//!   `sqrt(-2 ln(1 - u1)) * cos(2π u2)`. The sine branch is discarded.
//! * `shuffle(xs)`    = Fisher-Yates from the back: for `i = n-1 .. 1`,
//!   swap `xs[i]` with `xs[below(i + 1)]`.
//! * `split(stream)`  = a fresh generator seeded with
//!   `mix(seed ^ mix(stream + 0x9E3779B97F4A7C15))`, where `mix` is the
//!   SplitMix64 finalizer. Splitting depends only on the parent seed, never
//!   on how many values the parent has produced.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of child stream `stream` from `seed`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    mix(seed ^ mix(stream.wrapping_add(GOLDEN)))
}

#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    inner: SplitMix64,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: SplitMix64::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn split(&self, stream: u64) -> Self {
        Self::new(derive_seed(self.seed, stream))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `0..n`. Panics if `n == 0`.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        let n = n as u64;
        let threshold = n.wrapping_neg() % n;
        loop {
            let m = u128::from(self.next_u64()) * u128::from(n);
            if (m as u64) >= threshold {
                return (m >> 64) as usize;
            }
        }
    }

    pub fn gaussian(&mut self) -> f64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        (-2.0 * (1.0 - u1).ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.below(i + 1);
            xs.swap(i, j);
        }
    }
}
