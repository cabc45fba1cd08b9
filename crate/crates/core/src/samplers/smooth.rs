use std::sync::Arc;

use super::{commit, noise_scale, ChainState, Kernel, StepMeta, StepSchedule};
use crate::numerics::linalg::{norm2, symmetric_eigen, Matrix, SpdMatrix};
use crate::numerics::NoiseSource;
use crate::potentials::Potential;
use crate::prox::LegendreMap;
use crate::{LmcError, Result};

/// Unadjusted Langevin: `x' = x − γ∇U(x) + √(2γ)ξ`.
pub struct Ula {
    pub potential: Arc<dyn Potential>,
    pub step: StepSchedule,
}

impl Ula {
    pub fn new(potential: Arc<dyn Potential>, step: impl Into<StepSchedule>) -> Result<Self> {
        let step = step.into();
        step.validate()?;
        Ok(Self { potential, step })
    }
}

impl Kernel for Ula {
    fn name(&self) -> &'static str {
        "ula"
    }

    fn dim(&self) -> usize {
        self.potential.dim()
    }

    fn step(&self, state: &mut ChainState, noise: &mut dyn NoiseSource) -> Result<StepMeta> {
        let gamma = self.step.at(state.step);
        let c = noise_scale(gamma);
        let g = self.potential.gradient(&state.x);
        let xi = noise.standard_normal(g.len());
        let x: Vec<f64> = (0..g.len()).map(|i| state.x[i] - gamma * g[i] + c * xi[i]).collect();
        commit(state, x)?;
        Ok(StepMeta { grad_norm: Some(norm2(&g)), ..Default::default() })
    }
}

/// `log α(x → y)` for a Langevin proposal with drift `m(·)`:
/// `log p(y) − log p(x) + log q(x|y) − log q(y|x)`, using unnormalised
/// densities and `q(a|b) ∝ exp(−‖a − m(b)‖²/(4γ))`.
pub(crate) fn mh_log_ratio(log_p_x: f64, log_p_y: f64, x: &[f64], y: &[f64], m_x: &[f64], m_y: &[f64], gamma: f64) -> f64 {
    let sq = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>();
    let log_q_y_given_x = -sq(y, m_x) / (4.0 * gamma);
    let log_q_x_given_y = -sq(x, m_y) / (4.0 * gamma);
    log_p_y - log_p_x + log_q_x_given_y - log_q_y_given_x
}

/// MALA `log α(x → y)` before truncation at 0.
pub fn mala_log_acceptance(u: &dyn Potential, gamma: f64, x: &[f64], y: &[f64]) -> f64 {
    let drift = |z: &[f64]| -> Vec<f64> {
        let g = u.gradient(z);
        z.iter().zip(&g).map(|(a, b)| a - gamma * b).collect()
    };
    mh_log_ratio(-u.value(x), -u.value(y), x, y, &drift(x), &drift(y), gamma)
}

/// Shared Metropolis–Hastings accept/reject. Always consumes one uniform.
pub(crate) fn mh_decide(
    state: &mut ChainState,
    proposal: Vec<f64>,
    log_alpha: f64,
    noise: &mut dyn NoiseSource,
    grad_norm: f64,
) -> Result<StepMeta> {
    let u = noise.uniform01();
    let nonfinite = log_alpha.is_nan() || log_alpha == f64::NEG_INFINITY || !proposal.iter().all(|v| v.is_finite());
    let alpha = if nonfinite { 0.0 } else { log_alpha.min(0.0).exp() };
    let accept = alpha > 0.0 && u <= alpha;
    let meta = StepMeta {
        accepted: Some(accept),
        acceptance_prob: Some(alpha),
        nonfinite_proposal: nonfinite,
        grad_norm: Some(grad_norm),
        proposal: Some(proposal.clone()),
        inner_converged: None,
    };
    if accept {
        commit(state, proposal)?;
    } else {
        state.step += 1;
    }
    Ok(meta)
}

/// Metropolis-adjusted Langevin.
pub struct Mala {
    pub potential: Arc<dyn Potential>,
    pub step: StepSchedule,
}

impl Mala {
    pub fn new(potential: Arc<dyn Potential>, step: impl Into<StepSchedule>) -> Result<Self> {
        let step = step.into();
        step.validate()?;
        Ok(Self { potential, step })
    }
}

impl Kernel for Mala {
    fn name(&self) -> &'static str {
        "mala"
    }

    fn dim(&self) -> usize {
        self.potential.dim()
    }

    fn step(&self, state: &mut ChainState, noise: &mut dyn NoiseSource) -> Result<StepMeta> {
        let gamma = self.step.at(state.step);
        let c = noise_scale(gamma);
        let u = self.potential.as_ref();
        let x = &state.x;
        let gx = u.gradient(x);
        let xi = noise.standard_normal(x.len());
        let mx: Vec<f64> = x.iter().zip(&gx).map(|(a, b)| a - gamma * b).collect();
        let y: Vec<f64> = mx.iter().zip(&xi).map(|(m, e)| m + c * e).collect();
        let gy = u.gradient(&y);
        let my: Vec<f64> = y.iter().zip(&gy).map(|(a, b)| a - gamma * b).collect();
        let la = mh_log_ratio(-u.value(x), -u.value(&y), x, &y, &mx, &my, gamma);
        mh_decide(state, y, la, noise, norm2(&gx))
    }
}

/// Preconditioner of [`Pula`].
#[derive(Debug, Clone)]
pub enum Metric {
    Constant { m: SpdMatrix, sqrt: SpdMatrix },
    /// `[∇²U(x) + (|λ_min(∇²U(x))| + ε) I]⁻¹`.
    ShiftedInverseHessian { eps: f64 },
}

impl Metric {
    pub fn constant(m: SpdMatrix) -> Result<Self> {
        let sqrt = crate::numerics::spectral_sqrt(&m)?;
        Ok(Metric::Constant { m, sqrt })
    }
}

/// Returns `(M, M^{1/2}, eigenvalues of the shifted Hessian)`.
pub fn shifted_inverse_hessian_metric(h: &Matrix, eps: f64) -> Result<(Matrix, Matrix, Vec<f64>)> {
    let e = symmetric_eigen(h)?;
    let shift = e.values[0].abs() + eps;
    let shifted: Vec<f64> = e.values.iter().map(|v| v + shift).collect();
    if shifted.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
        return Err(LmcError::Numeric(format!("shifted Hessian is not positive definite: eigenvalues {shifted:?}")));
    }
    let m = e.reconstruct_with(|v| 1.0 / (v + shift));
    let r = e.reconstruct_with(|v| 1.0 / (v + shift).sqrt());
    Ok((m, r, shifted))
}

/// Preconditioned ULA: `x' = x − γM∇U(x) + √(2γ)M^{1/2}ξ`.
pub struct Pula {
    pub potential: Arc<dyn Potential>,
    pub metric: Metric,
    pub step: StepSchedule,
}

impl Pula {
    pub fn new(potential: Arc<dyn Potential>, metric: Metric, step: impl Into<StepSchedule>) -> Result<Self> {
        let step = step.into();
        step.validate()?;
        if let Metric::Constant { m, .. } = &metric {
            crate::error::check_dim(potential.dim(), m.dim())?;
        }
        if let Metric::ShiftedInverseHessian { eps } = metric {
            if !(eps > 0.0) {
                return Err(LmcError::Domain(format!("Hessian shift must be positive, got {eps}")));
            }
        }
        Ok(Self { potential, metric, step })
    }
}

impl Kernel for Pula {
    fn name(&self) -> &'static str {
        match self.metric {
            Metric::Constant { .. } => "pula",
            Metric::ShiftedInverseHessian { .. } => "ihpula",
        }
    }

    fn dim(&self) -> usize {
        self.potential.dim()
    }

    fn step(&self, state: &mut ChainState, noise: &mut dyn NoiseSource) -> Result<StepMeta> {
        let gamma = self.step.at(state.step);
        let c = noise_scale(gamma);
        let g = self.potential.gradient(&state.x);
        let (mg, r) = match &self.metric {
            Metric::Constant { m, sqrt } => (m.mul_vec(&g), sqrt.matrix().clone()),
            Metric::ShiftedInverseHessian { eps } => {
                let h = self
                    .potential
                    .hessian(&state.x)
                    .ok_or_else(|| LmcError::Capability("inverse-Hessian metric needs a Hessian".into()))?;
                let (m, r, _) = shifted_inverse_hessian_metric(&h, *eps)?;
                (m.mul_vec(&g), r)
            }
        };
        let xi = noise.standard_normal(g.len());
        let rxi = r.mul_vec(&xi);
        let x: Vec<f64> = (0..g.len()).map(|i| state.x[i] - gamma * mg[i] + c * rxi[i]).collect();
        commit(state, x)?;
        Ok(StepMeta { grad_norm: Some(norm2(&g)), ..Default::default() })
    }
}

/// Mirror Langevin in its Hessian-Riemannian discretisation:
/// `x' = ∇φ*(∇φ(x) − γ∇U(x) + √(2γ)[∇²φ(x)]^{1/2}ξ)`.
pub struct Mla {
    pub potential: Arc<dyn Potential>,
    pub mirror: Arc<dyn LegendreMap>,
    pub step: StepSchedule,
}

impl Mla {
    pub fn new(potential: Arc<dyn Potential>, mirror: Arc<dyn LegendreMap>, step: impl Into<StepSchedule>) -> Result<Self> {
        let step = step.into();
        step.validate()?;
        Ok(Self { potential, mirror, step })
    }
}

impl Kernel for Mla {
    fn name(&self) -> &'static str {
        "mla"
    }

    fn dim(&self) -> usize {
        self.potential.dim()
    }

    fn step(&self, state: &mut ChainState, noise: &mut dyn NoiseSource) -> Result<StepMeta> {
        let gamma = self.step.at(state.step);
        let c = noise_scale(gamma);
        let x = &state.x;
        let g = self.potential.gradient(x);
        let xi = noise.standard_normal(x.len());
        let s = self.mirror.hess_sqrt_mul(x, &xi);
        let dual = self.mirror.grad(x);
        let y: Vec<f64> = (0..x.len()).map(|i| dual[i] - gamma * g[i] + c * s[i]).collect();
        let xn = self.mirror.conj_grad(&y);
        commit(state, xn)?;
        Ok(StepMeta { grad_norm: Some(norm2(&g)), ..Default::default() })
    }
}
