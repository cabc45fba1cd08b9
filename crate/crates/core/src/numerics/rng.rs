//! Reproducible random streams.
//!
//! [`Prng`] is ChaCha20 keyed by a 64-bit seed with an explicit 64-bit stream
//! id, so every chain of an experiment gets its own non-overlapping stream
//! (each stream has a 2^68-byte period). Gaussian draws use the ziggurat
//! sampler of `rand_distr::StandardNormal`; uniforms are the standard 53-bit
//! `[0, 1)` conversion. Both are platform independent, so fixed
//! `(seed, stream)` pairs pin exact trajectories.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

/// Source of the randomness consumed by a Markov kernel.
///
/// Kernels never own their randomness; tests substitute [`ForcedNoise`] to
/// freeze the Gaussian increments.
pub trait NoiseSource {
    fn fill_standard_normal(&mut self, out: &mut [f64]);
    fn uniform01(&mut self) -> f64;
    /// `size` distinct indices from `0..n`, sorted ascending.
    fn sample_batch(&mut self, n: usize, size: usize) -> Vec<usize>;

    fn standard_normal(&mut self, d: usize) -> Vec<f64> {
        let mut v = vec![0.0; d];
        self.fill_standard_normal(&mut v);
        v
    }
}

#[derive(Debug, Clone)]
pub struct Prng {
    seed: u64,
    stream: u64,
    inner: ChaCha20Rng,
}

impl Prng {
    pub const ALGORITHM: &'static str = "chacha20/ziggurat";

    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha20Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            seed,
            stream,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// A fresh generator on another stream of the same seed.
    pub fn split(&self, stream: u64) -> Self {
        Self::new(self.seed, stream)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.random()
    }
}

impl NoiseSource for Prng {
    fn fill_standard_normal(&mut self, out: &mut [f64]) {
        for v in out.iter_mut() {
            *v = self.inner.sample(StandardNormal);
        }
    }

    fn uniform01(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    fn sample_batch(&mut self, n: usize, size: usize) -> Vec<usize> {
        if size >= n {
            return (0..n).collect();
        }
        let mut idx = rand::seq::index::sample(&mut self.inner, n, size).into_vec();
        idx.sort_unstable();
        idx
    }
}

/// Noise provider with frozen Gaussian increments.
///
/// The Gaussian part is either all zeros or a fixed vector repeated on every
/// call; uniforms and batches still come from the wrapped [`Prng`].
#[derive(Debug, Clone)]
pub struct ForcedNoise {
    normal: Option<Vec<f64>>,
    rng: Prng,
}

impl ForcedNoise {
    pub fn zeros() -> Self {
        Self {
            normal: None,
            rng: Prng::new(0, 0),
        }
    }

    pub fn fixed(xi: Vec<f64>) -> Self {
        Self {
            normal: Some(xi),
            rng: Prng::new(0, 0),
        }
    }

    pub fn with_rng(mut self, rng: Prng) -> Self {
        self.rng = rng;
        self
    }
}

impl NoiseSource for ForcedNoise {
    fn fill_standard_normal(&mut self, out: &mut [f64]) {
        match &self.normal {
            None => out.iter_mut().for_each(|v| *v = 0.0),
            Some(xi) => {
                for (o, x) in out.iter_mut().zip(xi.iter().cycle()) {
                    *o = *x;
                }
            }
        }
    }

    fn uniform01(&mut self) -> f64 {
        self.rng.uniform01()
    }

    fn sample_batch(&mut self, n: usize, size: usize) -> Vec<usize> {
        self.rng.sample_batch(n, size)
    }
}
