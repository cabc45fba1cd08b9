use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{commit, noise_scale, ChainState, Kernel, StepMeta, StepSchedule};
use crate::numerics::linalg::norm2;
use crate::numerics::NoiseSource;
use crate::potentials::Potential;
use crate::prox::{left_bregman_env_grad, right_bregman_env_grad, LegendreMap, ShiftedL1};
use crate::{LmcError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeSide {
    Left,
    Right,
}

/// Bregman–Moreau unadjusted mirror Langevin for `U = f + α‖· − μ‖₁`:
/// `x' = ∇φ*(∇φ(x) − γ[∇f(x) + ∇env^ψ_λ(x)] + √(2γ)[∇²φ(x)]^{1/2}ξ)`.
pub struct Bmumla {
    pub f: Arc<dyn Potential>,
    pub g: ShiftedL1,
    pub mirror: Arc<dyn LegendreMap>,
    pub envelope: Arc<dyn LegendreMap>,
    pub side: EnvelopeSide,
    pub step: StepSchedule,
    pub smoothing: f64,
}

impl Bmumla {
    pub fn new(
        f: Arc<dyn Potential>,
        g: ShiftedL1,
        mirror: Arc<dyn LegendreMap>,
        envelope: Arc<dyn LegendreMap>,
        side: EnvelopeSide,
        step: impl Into<StepSchedule>,
        smoothing: f64,
    ) -> Result<Self> {
        let step = step.into();
        step.validate()?;
        if !(smoothing > 0.0) {
            return Err(LmcError::Config(format!("smoothing parameter must be positive, got {smoothing}")));
        }
        crate::error::check_dim(f.dim(), g.center.len())?;
        Ok(Self { f, g, mirror, envelope, side, step, smoothing })
    }

    pub fn envelope_grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self.side {
            EnvelopeSide::Left => Ok(left_bregman_env_grad(self.envelope.as_ref(), self.smoothing, x, &self.g)),
            EnvelopeSide::Right => right_bregman_env_grad(self.envelope.as_ref(), self.smoothing, x, &self.g),
        }
    }
}

impl Kernel for Bmumla {
    fn name(&self) -> &'static str {
        "bmumla"
    }

    fn dim(&self) -> usize {
        self.f.dim()
    }

    fn step(&self, state: &mut ChainState, noise: &mut dyn NoiseSource) -> Result<StepMeta> {
        let gamma = self.step.at(state.step);
        let c = noise_scale(gamma);
        let x = &state.x;
        let gf = self.f.gradient(x);
        let ge = self.envelope_grad(x)?;
        let xi = noise.standard_normal(x.len());
        let s = self.mirror.hess_sqrt_mul(x, &xi);
        let dual = self.mirror.grad(x);
        let y: Vec<f64> = (0..x.len()).map(|i| dual[i] - gamma * (gf[i] + ge[i]) + c * s[i]).collect();
        let xn = self.mirror.conj_grad(&y);
        let gn = norm2(&gf);
        commit(state, xn)?;
        Ok(StepMeta { grad_norm: Some(gn), ..Default::default() })
    }
}
