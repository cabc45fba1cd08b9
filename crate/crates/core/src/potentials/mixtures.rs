use super::{log_sum_exp, softmax, Potential};
use crate::numerics::linalg::{Matrix, SpdMatrix};
use crate::prox::{l1_moreau, l1_prox};
use crate::{LmcError, Result};

/// Component means of the two-dimensional test mixtures.
pub const PAPER_MEANS: [[f64; 2]; 5] = [[0.0, 0.0], [-2.0, 3.0], [2.0, -3.0], [3.0, 3.0], [-2.0, -2.0]];

/// Component covariances of the Gaussian test mixture, as `[a, b, c]` for
/// `[[a, b], [b, c]]`.
pub const PAPER_COVARIANCES: [[f64; 3]; 5] = [
    [1.0, -0.5, 1.0],
    [0.5, 0.2, 0.7],
    [0.5, 0.1, 0.9],
    [0.8, 0.02, 0.3],
    [1.2, 0.05, 0.8],
];

/// Which of the five components a `K`-component mixture uses: the first
/// alone for `K = 1`, otherwise the last `K`.
pub fn paper_component_indices(k: usize) -> Result<Vec<usize>> {
    match k {
        1 => Ok(vec![0]),
        2..=5 => Ok((5 - k..5).collect()),
        _ => Err(LmcError::Config(format!("mixture size must be in 1..=5, got {k}"))),
    }
}

fn check_weights(w: &[f64]) -> Result<()> {
    if w.is_empty() {
        return Err(LmcError::Domain("mixture needs at least one component".into()));
    }
    if w.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(LmcError::Domain(format!("mixture weights must be nonnegative, got {w:?}")));
    }
    let s: f64 = w.iter().sum();
    if (s - 1.0).abs() > 1e-12 {
        return Err(LmcError::Domain(format!("mixture weights sum to {s}, not 1")));
    }
    Ok(())
}

/// `π(x) = Σ_k ω_k N(x; μ_k, Σ_k)`.
#[derive(Debug, Clone)]
pub struct GaussianMixture {
    dim: usize,
    log_weights: Vec<f64>,
    means: Vec<Vec<f64>>,
    precisions: Vec<Matrix>,
    log_norms: Vec<f64>,
}

impl GaussianMixture {
    pub fn new(weights: Vec<f64>, means: Vec<Vec<f64>>, covariances: Vec<SpdMatrix>) -> Result<Self> {
        check_weights(&weights)?;
        if means.len() != weights.len() || covariances.len() != weights.len() {
            return Err(LmcError::Dimension { expected: weights.len(), got: means.len().min(covariances.len()) });
        }
        let dim = means[0].len();
        for (m, c) in means.iter().zip(&covariances) {
            crate::error::check_dim(dim, m.len())?;
            crate::error::check_dim(dim, c.dim())?;
        }
        let ln2pi = (2.0 * std::f64::consts::PI).ln();
        let log_norms = covariances
            .iter()
            .map(|c| -0.5 * (dim as f64 * ln2pi + c.log_det()))
            .collect();
        Ok(Self {
            dim,
            log_weights: weights.iter().map(|w| w.ln()).collect(),
            means,
            precisions: covariances.iter().map(|c| c.inverse()).collect(),
            log_norms,
        })
    }

    pub fn n_components(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    fn terms(&self, x: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let mut logs = Vec::with_capacity(self.means.len());
        let mut grads = Vec::with_capacity(self.means.len());
        for k in 0..self.means.len() {
            let r: Vec<f64> = x.iter().zip(&self.means[k]).map(|(a, b)| a - b).collect();
            let a = self.precisions[k].mul_vec(&r);
            let q: f64 = r.iter().zip(&a).map(|(u, v)| u * v).sum();
            logs.push(self.log_weights[k] + self.log_norms[k] - 0.5 * q);
            grads.push(a);
        }
        (logs, grads)
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        log_sum_exp(&self.terms(x).0)
    }

    pub fn density(&self, x: &[f64]) -> f64 {
        self.log_density(x).exp()
    }

    /// Posterior responsibilities `r_k(x)`.
    pub fn responsibilities(&self, x: &[f64]) -> Vec<f64> {
        softmax(&self.terms(x).0)
    }
}

impl Potential for GaussianMixture {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        -self.log_density(x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let (logs, a) = self.terms(x);
        let r = softmax(&logs);
        let mut g = vec![0.0; self.dim];
        for (rk, ak) in r.iter().zip(&a) {
            for i in 0..self.dim {
                g[i] += rk * ak[i];
            }
        }
        g
    }

    /// `g gᵀ − Σ_k r_k (a_k a_kᵀ − Σ_k⁻¹)` with `a_k = Σ_k⁻¹(x − μ_k)`.
    fn hessian(&self, x: &[f64]) -> Option<Matrix> {
        let (logs, a) = self.terms(x);
        let r = softmax(&logs);
        let d = self.dim;
        let mut g = vec![0.0; d];
        for (rk, ak) in r.iter().zip(&a) {
            for i in 0..d {
                g[i] += rk * ak[i];
            }
        }
        let mut h = Matrix::outer(&g);
        for k in 0..r.len() {
            for i in 0..d {
                for j in 0..d {
                    h[(i, j)] -= r[k] * (a[k][i] * a[k][j] - self.precisions[k][(i, j)]);
                }
            }
        }
        h.symmetrize();
        Some(h)
    }
}

/// The equal-weight `K`-component Gaussian test mixture.
pub fn paper_gaussian_mixture(k: usize) -> Result<GaussianMixture> {
    let idx = paper_component_indices(k)?;
    let w = vec![1.0 / idx.len() as f64; idx.len()];
    let means = idx.iter().map(|&i| PAPER_MEANS[i].to_vec()).collect();
    let covs = idx
        .iter()
        .map(|&i| {
            let [a, b, c] = PAPER_COVARIANCES[i];
            SpdMatrix::from_rows(&[vec![a, b], vec![b, c]])
        })
        .collect::<Result<Vec<_>>>()?;
    GaussianMixture::new(w, means, covs)
}

/// `π(x) ∝ Σ_k ω_k (α_k/2)^d exp(−α_k‖x − μ_k‖₁)`, optionally with each
/// ℓ1 term replaced by its Moreau envelope of parameter `λ`.
#[derive(Debug, Clone)]
pub struct LaplacianMixture {
    dim: usize,
    log_weights: Vec<f64>,
    centers: Vec<Vec<f64>>,
    scales: Vec<f64>,
    smoothing: f64,
}

impl LaplacianMixture {
    pub fn new(weights: Vec<f64>, centers: Vec<Vec<f64>>, scales: Vec<f64>, smoothing: f64) -> Result<Self> {
        check_weights(&weights)?;
        if centers.len() != weights.len() || scales.len() != weights.len() {
            return Err(LmcError::Dimension { expected: weights.len(), got: centers.len().min(scales.len()) });
        }
        if scales.iter().any(|a| !(*a > 0.0)) {
            return Err(LmcError::Domain(format!("Laplacian scales must be positive, got {scales:?}")));
        }
        if !(smoothing >= 0.0) || !smoothing.is_finite() {
            return Err(LmcError::Domain(format!("smoothing must be nonnegative, got {smoothing}")));
        }
        let dim = centers[0].len();
        for c in &centers {
            crate::error::check_dim(dim, c.len())?;
        }
        Ok(Self { dim, log_weights: weights.iter().map(|w| w.ln()).collect(), centers, scales, smoothing })
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    /// Same mixture with a different smoothing parameter (0 = exact).
    pub fn with_smoothing(&self, smoothing: f64) -> Result<Self> {
        let mut m = self.clone();
        if !(smoothing >= 0.0) {
            return Err(LmcError::Domain(format!("smoothing must be nonnegative, got {smoothing}")));
        }
        m.smoothing = smoothing;
        Ok(m)
    }

    fn l1_term(&self, k: usize, x: &[f64]) -> f64 {
        let a = self.scales[k];
        if self.smoothing > 0.0 {
            l1_moreau(self.smoothing, x, &self.centers[k], a)
        } else {
            a * x.iter().zip(&self.centers[k]).map(|(u, v)| (u - v).abs()).sum::<f64>()
        }
    }

    fn logs(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim as f64;
        (0..self.centers.len())
            .map(|k| self.log_weights[k] + d * (self.scales[k] / 2.0).ln() - self.l1_term(k, x))
            .collect()
    }

    /// Log of the (unnormalised when smoothed) density.
    pub fn log_density(&self, x: &[f64]) -> f64 {
        log_sum_exp(&self.logs(x))
    }
}

impl Potential for LaplacianMixture {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        -self.log_density(x)
    }

    /// With smoothing, the exact gradient of the surrogate; without, the
    /// almost-everywhere gradient (zero on kinks).
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let r = softmax(&self.logs(x));
        let lam = self.smoothing;
        let mut g = vec![0.0; self.dim];
        for k in 0..r.len() {
            let a = self.scales[k];
            if lam > 0.0 {
                let p = l1_prox(lam, x, &self.centers[k], a);
                for i in 0..self.dim {
                    g[i] += r[k] * (x[i] - p[i]) / lam;
                }
            } else {
                for i in 0..self.dim {
                    let t = x[i] - self.centers[k][i];
                    if t != 0.0 {
                        g[i] += r[k] * a * t.signum();
                    }
                }
            }
        }
        g
    }
}

/// The equal-weight `K`-component Laplacian test mixture with scale `α`.
pub fn paper_laplacian_mixture(k: usize, scale: f64, smoothing: f64) -> Result<LaplacianMixture> {
    let idx = paper_component_indices(k)?;
    let n = idx.len();
    LaplacianMixture::new(
        vec![1.0 / n as f64; n],
        idx.iter().map(|&i| PAPER_MEANS[i].to_vec()).collect(),
        vec![scale; n],
        smoothing,
    )
}
