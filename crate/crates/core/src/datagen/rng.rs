//! Seeded random number generation.
//!
//! All randomness in the crate flows through [`SeededRng`], a ChaCha8 stream
//! cipher RNG (`rand_chacha` crate). Gaussian draws use the basic Box-Muller
//! transform of two uniforms, taking only the cosine branch, so the byte
//! stream consumed per draw is fixed and generated datasets are reproducible
//! bit-for-bit from `(seed, stream)` alone.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct SeededRng {
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Independent substream of the same seed. Streams are cheap; every
    /// parallel unit of work (trial, epoch, generator) owns one.
    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        SeededRng { inner }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal via Box-Muller (cosine branch).
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform(); // (0, 1]: keeps ln finite
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn normal_scaled(&mut self, sd: f64) -> f64 {
        if sd == 0.0 {
            0.0
        } else {
            sd * self.normal()
        }
    }

    /// Uniform index below `n`. Modulo bias is negligible for the sizes in
    /// play (n far below 2^32) and keeps the draw a single u64.
    pub fn index(&mut self, n: usize) -> usize {
        (self.inner.next_u64() % n as u64) as usize
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index(i + 1);
            items.swap(i, j);
        }
    }

    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..n).collect();
        self.shuffle(&mut p);
        p
    }
}

/// Mixes a base seed with a tag into a fresh seed (splitmix64 finalizer).
/// Used to hand independent seeds to nested components that manage their own
/// streams, e.g. per-trial training runs inside an experiment.
pub fn derive_seed(base: u64, tag: u64) -> u64 {
    let mut z = base
        .wrapping_add(0x9e3779b97f4a7c15)
        .wrapping_add(tag.wrapping_mul(0xbf58476d1ce4e5b9));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}
