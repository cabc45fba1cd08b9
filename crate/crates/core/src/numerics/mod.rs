//! Shared numerical plumbing: dense symmetric linear algebra and per-chain
//! random number streams.

pub mod linalg;
pub mod rng;

pub use linalg::{
    min_eigenvalue, solve_spd, spectral_sqrt, symmetric_eigen, Matrix, SpdMatrix, SymmetricEigen,
};
pub use rng::{ForcedNoise, NoiseSource, Prng};
