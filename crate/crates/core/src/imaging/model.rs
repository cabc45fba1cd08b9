use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::blur::BlurOperator;
use super::Image;
use crate::potentials::{CompositePotential, Potential};
use crate::prox::{huber, tv_prox, Difference2d, IsotropicTv, LinOp, ProxFriendly, ProxMap};
use crate::{LmcError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TvVariant {
    Tv,
    McTv,
    MeTv,
}

/// Which norm of `Dx` the MC-TV concave term smooths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum McNorm {
    /// `g̃_γ(‖Dx‖)` with the Euclidean norm of the whole field.
    #[default]
    Global,
    /// `Σ_i g̃_γ(‖(Dx)_i‖)`.
    Pixelwise,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TvPriorSpec {
    pub variant: TvVariant,
    pub tau: f64,
    pub gamma_tv: f64,
    #[serde(default)]
    pub mc_norm: McNorm,
    pub inner_iters: usize,
}

impl TvPriorSpec {
    pub fn paper(variant: TvVariant) -> Self {
        Self { variant, tau: super::PAPER_TAU, gamma_tv: super::PAPER_GAMMA_TV, mc_norm: McNorm::Global, inner_iters: super::TV_INNER_ITERS }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau >= 0.0) || !self.tau.is_finite() {
            return Err(LmcError::Config(format!("tau must be nonnegative, got {}", self.tau)));
        }
        if self.variant != TvVariant::Tv && !(self.gamma_tv > 0.0) {
            return Err(LmcError::Config(format!("gamma_tv must be positive, got {}", self.gamma_tv)));
        }
        if self.inner_iters == 0 {
            return Err(LmcError::Config("TV prox needs at least one inner iteration".into()));
        }
        Ok(())
    }
}

/// `(I + (λ/σ²)H*H)⁻¹(x + (λ/σ²)H*y)`, the proximity operator of
/// `λ‖y − H·‖²/(2σ²)`.
pub fn quad_prox(op: &BlurOperator, sigma2: f64, lambda: f64, y: &[f64], x: &[f64]) -> Vec<f64> {
    let c = lambda / sigma2;
    let hy = op.adjoint(y);
    let b: Vec<f64> = x.iter().zip(&hy).map(|(a, h)| a + c * h).collect();
    op.solve_shifted_normal(c, &b)
}

fn mc_scale(t: f64, gamma: f64) -> f64 {
    if t <= gamma {
        1.0 / gamma
    } else {
        1.0 / t
    }
}

/// The MC-TV concave term `g̃_γ(‖Dx‖)` (Huber of the norm), unscaled by τ.
pub fn mc_tv_value(d: &Difference2d, gamma: f64, x: &[f64], norm: McNorm) -> f64 {
    let dx = d.apply(x);
    let n = x.len();
    match norm {
        McNorm::Global => huber(gamma, 1.0, dx.iter().map(|v| v * v).sum::<f64>().sqrt()),
        McNorm::Pixelwise => (0..n).map(|i| huber(gamma, 1.0, dx[i].hypot(dx[n + i]))).sum(),
    }
}

/// `Dᵀ min{1/γ, 1/‖Dx‖} Dx`, zero where `Dx = 0`.
pub fn mc_tv_grad_term(d: &Difference2d, gamma: f64, x: &[f64], norm: McNorm) -> Vec<f64> {
    let mut dx = d.apply(x);
    let n = x.len();
    match norm {
        McNorm::Global => {
            let s = mc_scale(dx.iter().map(|v| v * v).sum::<f64>().sqrt(), gamma);
            dx.iter_mut().for_each(|v| *v *= s);
        }
        McNorm::Pixelwise => {
            for i in 0..n {
                let s = mc_scale(dx[i].hypot(dx[n + i]), gamma);
                dx[i] *= s;
                dx[n + i] *= s;
            }
        }
    }
    d.adjoint(&dx)
}

/// Posterior `exp(−‖y − Hx‖²/(2σ²) − τTV(x) + τ·concave(x))`.
#[derive(Debug, Clone)]
pub struct DeconvolutionModel {
    pub blur: BlurOperator,
    pub y: Vec<f64>,
    pub sigma2: f64,
    pub prior: TvPriorSpec,
    pub diff: Difference2d,
}

impl DeconvolutionModel {
    pub fn new(blur: BlurOperator, y: &Image, sigma2: f64, prior: TvPriorSpec) -> Result<Self> {
        prior.validate()?;
        if !(sigma2 > 0.0) {
            return Err(LmcError::Config(format!("noise variance must be positive, got {sigma2}")));
        }
        if (y.height, y.width) != (blur.height(), blur.width()) {
            return Err(LmcError::Dimension { expected: blur.height() * blur.width(), got: y.pixels.len() });
        }
        let diff = Difference2d::new(y.height, y.width);
        Ok(Self { blur, y: y.pixels.clone(), sigma2, prior, diff })
    }

    pub fn pixels(&self) -> usize {
        self.y.len()
    }

    pub fn data_value(&self, x: &[f64]) -> f64 {
        let hx = self.blur.apply(x);
        hx.iter().zip(&self.y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / (2.0 * self.sigma2)
    }

    pub fn data_grad(&self, x: &[f64]) -> Vec<f64> {
        let r: Vec<f64> = self.blur.apply(x).iter().zip(&self.y).map(|(a, b)| (a - b) / self.sigma2).collect();
        self.blur.adjoint(&r)
    }

    pub fn tv(&self) -> IsotropicTv {
        IsotropicTv { op: self.diff, scale: self.prior.tau, inner_iters: self.prior.inner_iters }
    }

    /// The subtracted concave-part term, including its factor τ.
    pub fn concave_value(&self, x: &[f64]) -> f64 {
        let p = &self.prior;
        match p.variant {
            TvVariant::Tv => 0.0,
            TvVariant::McTv => p.tau * mc_tv_value(&self.diff, p.gamma_tv, x, p.mc_norm),
            TvVariant::MeTv => {
                let unit = IsotropicTv { op: self.diff, scale: 1.0, inner_iters: p.inner_iters };
                p.tau * unit.moreau_env(p.gamma_tv, x)
            }
        }
    }

    pub fn concave_grad(&self, x: &[f64]) -> Vec<f64> {
        let p = &self.prior;
        match p.variant {
            TvVariant::Tv => vec![0.0; x.len()],
            TvVariant::McTv => {
                let mut g = mc_tv_grad_term(&self.diff, p.gamma_tv, x, p.mc_norm);
                g.iter_mut().for_each(|v| *v *= p.tau);
                g
            }
            TvVariant::MeTv => {
                let q = tv_prox(&self.diff, p.gamma_tv, x, p.inner_iters);
                let s = p.tau / p.gamma_tv;
                x.iter().zip(&q).map(|(a, b)| s * (a - b)).collect()
            }
        }
    }

    /// `(1/2σ²)‖y − Hx‖² + τTV(x) − concave(x)`.
    pub fn map_objective(&self, x: &[f64]) -> f64 {
        self.data_value(x) + self.tv().value(x) - self.concave_value(x)
    }

    /// Value of the Moreau–Yosida surrogate with smoothing `λ`.
    pub fn surrogate_value(&self, lambda: f64, x: &[f64]) -> f64 {
        self.data_value(x) + self.tv().moreau_env(lambda, x) - self.concave_value(x)
    }

    pub fn surrogate_grad(&self, lambda: f64, x: &[f64]) -> Vec<f64> {
        let mut g = self.data_grad(x);
        let m = self.tv().moreau_grad(lambda, x);
        let c = self.concave_grad(x);
        for i in 0..g.len() {
            g[i] += m[i] - c[i];
        }
        g
    }

    /// Proximity operator of the smooth part with the concave term
    /// linearised at `x`.
    pub fn approx_prox_f(&self, lambda: f64, x: &[f64]) -> Vec<f64> {
        let p = &self.prior;
        let v: Vec<f64> = match p.variant {
            TvVariant::Tv => x.to_vec(),
            TvVariant::McTv => {
                let g = mc_tv_grad_term(&self.diff, p.gamma_tv, x, p.mc_norm);
                x.iter().zip(&g).map(|(a, b)| a + lambda * p.tau * b).collect()
            }
            TvVariant::MeTv => {
                let q = tv_prox(&self.diff, p.gamma_tv, x, p.inner_iters);
                let s = lambda * p.tau / p.gamma_tv;
                x.iter().zip(&q).map(|(a, b)| (1.0 + s) * a - s * b).collect()
            }
        };
        quad_prox(&self.blur, self.sigma2, lambda, &self.y, &v)
    }

    /// `U = f + τTV` with `f` the data term minus the concave term.
    pub fn composite(self: &Arc<Self>) -> Result<CompositePotential> {
        let f: Arc<dyn Potential> = Arc::new(SmoothPart(self.clone()));
        let g: Arc<dyn ProxFriendly> = Arc::new(self.tv());
        match self.prior.variant {
            // the ME gradient is only as exact as the inner TV solver
            TvVariant::MeTv => Ok(CompositePotential::new_unchecked(f, g)),
            _ => CompositePotential::new(f, g),
        }
    }
}

/// Data fidelity minus the concave prior term.
#[derive(Debug, Clone)]
pub struct SmoothPart(pub Arc<DeconvolutionModel>);

impl Potential for SmoothPart {
    fn dim(&self) -> usize {
        self.0.pixels()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.0.data_value(x) - self.0.concave_value(x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.0.data_grad(x);
        let c = self.0.concave_grad(x);
        g.iter_mut().zip(&c).for_each(|(a, b)| *a -= b);
        g
    }
}

/// [`DeconvolutionModel::approx_prox_f`] as a prox provider.
#[derive(Debug, Clone)]
pub struct ApproxDataProx(pub Arc<DeconvolutionModel>);

impl ProxMap for ApproxDataProx {
    fn prox_map(&self, step: f64, x: &[f64]) -> Vec<f64> {
        self.0.approx_prox_f(step, x)
    }
}
