use super::Potential;
use crate::numerics::linalg::{solve_spd, Matrix, SpdMatrix};
use crate::numerics::{NoiseSource, Prng};
use crate::{LmcError, Result};

/// `f(x) = Σ_i ℓ_i(x) + r(x)` over `n` data terms and a prior `r`.
pub trait FiniteSumPotential: Send + Sync {
    fn dim(&self) -> usize;
    fn n_data(&self) -> usize;
    fn datum_value(&self, i: usize, x: &[f64]) -> f64;
    /// Adds `∇ℓ_i(x)` into `out`.
    fn add_datum_gradient(&self, i: usize, x: &[f64], out: &mut [f64]);
    fn prior_value(&self, x: &[f64]) -> f64;
    fn prior_gradient(&self, x: &[f64]) -> Vec<f64>;
}

pub fn full_gradient(fs: &dyn FiniteSumPotential, x: &[f64]) -> Vec<f64> {
    let mut g = fs.prior_gradient(x);
    for i in 0..fs.n_data() {
        fs.add_datum_gradient(i, x, &mut g);
    }
    g
}

/// Unbiased estimate `(n/b) Σ_{i∈B} ∇ℓ_i(x) + ∇r(x)` of the full gradient.
pub fn stochastic_gradient(fs: &dyn FiniteSumPotential, x: &[f64], batch: &[usize]) -> Result<Vec<f64>> {
    let n = fs.n_data();
    if batch.is_empty() {
        return Err(LmcError::Config("mini-batch must be nonempty".into()));
    }
    if let Some(&bad) = batch.iter().find(|&&i| i >= n) {
        return Err(LmcError::Dimension { expected: n, got: bad });
    }
    if batch.len() == n && batch.windows(2).all(|w| w[0] < w[1]) {
        // strictly increasing indices below n: every datum
        return Ok(full_gradient(fs, x));
    }
    let mut acc = vec![0.0; fs.dim()];
    for &i in batch {
        fs.add_datum_gradient(i, x, &mut acc);
    }
    let s = n as f64 / batch.len() as f64;
    let mut g = fs.prior_gradient(x);
    g.iter_mut().zip(&acc).for_each(|(a, b)| *a += s * b);
    Ok(g)
}

/// A finite sum seen as an ordinary potential.
pub struct FullData<F>(pub F);

impl<F: FiniteSumPotential> Potential for FullData<F> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.0.prior_value(x) + (0..self.0.n_data()).map(|i| self.0.datum_value(i, x)).sum::<f64>()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        full_gradient(&self.0, x)
    }
}

/// Linear regression `y_i = a_iᵀw + ε_i`, `ε_i ~ N(0, σ²)`, with a
/// Gaussian prior of precision `τ` on `w`.
#[derive(Debug, Clone)]
pub struct BayesianLinearRegression {
    pub design: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub noise_var: f64,
    pub prior_precision: f64,
}

impl BayesianLinearRegression {
    pub fn new(design: Vec<Vec<f64>>, targets: Vec<f64>, noise_var: f64, prior_precision: f64) -> Result<Self> {
        crate::error::check_dim(design.len(), targets.len())?;
        if design.is_empty() {
            return Err(LmcError::Config("regression needs at least one datum".into()));
        }
        let d = design[0].len();
        for row in &design {
            crate::error::check_dim(d, row.len())?;
        }
        if !(noise_var > 0.0) || !(prior_precision >= 0.0) {
            return Err(LmcError::Domain("noise variance must be positive, prior precision nonnegative".into()));
        }
        Ok(Self { design, targets, noise_var, prior_precision })
    }

    /// `n` standard normal covariates in two dimensions, true weights
    /// `(1, −0.5)`, unit noise and prior precision.
    pub fn synthetic(n: usize, seed: u64) -> Result<Self> {
        let mut rng = Prng::new(seed, 0);
        let w = [1.0, -0.5];
        let mut design = Vec::with_capacity(n);
        let mut targets = Vec::with_capacity(n);
        for _ in 0..n {
            let a = rng.standard_normal(2);
            let e = rng.standard_normal(1)[0];
            targets.push(a[0] * w[0] + a[1] * w[1] + e);
            design.push(a);
        }
        Self::new(design, targets, 1.0, 1.0)
    }

    pub fn posterior_precision(&self) -> Result<SpdMatrix> {
        let d = self.design[0].len();
        let mut p = Matrix::identity(d).scale(self.prior_precision);
        for a in &self.design {
            p = p.add(&Matrix::outer(a).scale(1.0 / self.noise_var));
        }
        SpdMatrix::new(p)
    }

    pub fn posterior_mean(&self) -> Result<Vec<f64>> {
        let d = self.design[0].len();
        let mut b = vec![0.0; d];
        for (a, y) in self.design.iter().zip(&self.targets) {
            for j in 0..d {
                b[j] += a[j] * y / self.noise_var;
            }
        }
        solve_spd(&self.posterior_precision()?, &b)
    }

    pub fn posterior_covariance(&self) -> Result<Matrix> {
        Ok(self.posterior_precision()?.inverse())
    }
}

impl FiniteSumPotential for BayesianLinearRegression {
    fn dim(&self) -> usize {
        self.design[0].len()
    }

    fn n_data(&self) -> usize {
        self.targets.len()
    }

    fn datum_value(&self, i: usize, x: &[f64]) -> f64 {
        let r = self.targets[i] - self.design[i].iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        r * r / (2.0 * self.noise_var)
    }

    fn add_datum_gradient(&self, i: usize, x: &[f64], out: &mut [f64]) {
        let a = &self.design[i];
        let r = self.targets[i] - a.iter().zip(x).map(|(u, v)| u * v).sum::<f64>();
        for j in 0..out.len() {
            out[j] -= r * a[j] / self.noise_var;
        }
    }

    fn prior_value(&self, x: &[f64]) -> f64 {
        0.5 * self.prior_precision * x.iter().map(|v| v * v).sum::<f64>()
    }

    fn prior_gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|v| self.prior_precision * v).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_batch_matches_full_gradient() {
        let m = BayesianLinearRegression::synthetic(30, 4).unwrap();
        let all: Vec<usize> = (0..30).collect();
        let x = [0.3, 0.1];
        let a = stochastic_gradient(&m, &x, &all).unwrap();
        let b = full_gradient(&m, &x);
        assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
    }

    #[test]
    fn posterior_mean_zeroes_gradient() {
        let m = BayesianLinearRegression::synthetic(50, 9).unwrap();
        let mean = m.posterior_mean().unwrap();
        let g = full_gradient(&m, &mean);
        assert!(g.iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn batch_validation() {
        let m = BayesianLinearRegression::synthetic(5, 1).unwrap();
        assert!(stochastic_gradient(&m, &[0.0, 0.0], &[]).is_err());
        assert!(stochastic_gradient(&m, &[0.0, 0.0], &[5]).is_err());
    }
}
