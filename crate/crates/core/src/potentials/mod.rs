//! Potentials `U = −log π` and their derivatives.

mod composite;
mod finite_sum;
mod mixtures;

pub use composite::{CompositePotential, SmoothedComposite};
pub use finite_sum::{full_gradient, stochastic_gradient, BayesianLinearRegression, FiniteSumPotential, FullData};
pub use mixtures::{
    paper_component_indices, paper_gaussian_mixture, paper_laplacian_mixture, GaussianMixture,
    LaplacianMixture, PAPER_COVARIANCES, PAPER_MEANS,
};

use crate::numerics::linalg::{Matrix, SpdMatrix};

/// A differentiable potential on `R^d`.
pub trait Potential: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;

    /// `None` when the Hessian is unavailable.
    fn hessian(&self, _x: &[f64]) -> Option<Matrix> {
        None
    }
}

/// `½ (x − m)ᵀ A (x − m)`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    pub precision: SpdMatrix,
    pub mean: Vec<f64>,
}

impl Quadratic {
    pub fn standard(dim: usize) -> Self {
        Self { precision: SpdMatrix::identity(dim), mean: vec![0.0; dim] }
    }
}

impl Potential for Quadratic {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let r: Vec<f64> = x.iter().zip(&self.mean).map(|(a, b)| a - b).collect();
        let ar = self.precision.mul_vec(&r);
        0.5 * r.iter().zip(&ar).map(|(a, b)| a * b).sum::<f64>()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let r: Vec<f64> = x.iter().zip(&self.mean).map(|(a, b)| a - b).collect();
        self.precision.mul_vec(&r)
    }

    fn hessian(&self, _x: &[f64]) -> Option<Matrix> {
        Some(self.precision.matrix().clone())
    }
}

/// `f = 0` on `R^d`.
#[derive(Debug, Clone, Copy)]
pub struct ZeroPotential {
    pub dim: usize,
}

impl Potential for ZeroPotential {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, _x: &[f64]) -> f64 {
        0.0
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        vec![0.0; x.len()]
    }
    fn hessian(&self, _x: &[f64]) -> Option<Matrix> {
        Some(Matrix::zeros(self.dim))
    }
}

/// Numerically stable `log Σ exp(a_k)`.
pub fn log_sum_exp(a: &[f64]) -> f64 {
    let m = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + a.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Softmax weights of `a`, computed in log space.
pub fn softmax(a: &[f64]) -> Vec<f64> {
    let m = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = a.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sum_exp_no_overflow() {
        let v = log_sum_exp(&[1000.0, 1000.0]);
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-12);
        let w = softmax(&[-1e4, -1e4 - 1.0]);
        assert!((w[0] + w[1] - 1.0).abs() < 1e-12);
    }
}
