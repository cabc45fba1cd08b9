use std::sync::Arc;

use super::{check_point, noise_scale, ChainState, DualState, Kernel, StepMeta, StepSchedule};
use crate::numerics::NoiseSource;
use crate::prox::{LinOp, ProxMap};
use crate::{LmcError, Result};

/// Unadjusted Langevin primal-dual iteration for `f(x) + g(Dx)`:
///
/// ```text
/// x' = prox_{γf}(x − γDᵀũ) + √(2γ)ξ
/// u' = prox_{λg*}(u + λD(2x' − x))
/// ũ' = u + τ(u' − u)
/// ```
pub struct Ulpda {
    pub f_prox: Arc<dyn ProxMap>,
    pub g_conj_prox: Arc<dyn ProxMap>,
    pub op: Arc<dyn LinOp>,
    pub step: StepSchedule,
    pub dual_step: f64,
    pub relaxation: f64,
}

impl Ulpda {
    /// Fails unless `γ₀ λ ‖D‖² ≤ 1` and `τ ∈ [0, 1]`.
    pub fn new(
        f_prox: Arc<dyn ProxMap>,
        g_conj_prox: Arc<dyn ProxMap>,
        op: Arc<dyn LinOp>,
        step: impl Into<StepSchedule>,
        dual_step: f64,
        relaxation: f64,
    ) -> Result<Self> {
        let step = step.into();
        step.validate()?;
        if !(dual_step > 0.0) {
            return Err(LmcError::Config(format!("dual step must be positive, got {dual_step}")));
        }
        if !(0.0..=1.0).contains(&relaxation) {
            return Err(LmcError::Config(format!("relaxation must lie in [0, 1], got {relaxation}")));
        }
        let nb = op.norm_bound();
        let prod = step.max() * dual_step * nb * nb;
        if prod > 1.0 + 1e-12 {
            return Err(LmcError::Config(format!(
                "primal-dual steps violate γλ‖D‖² ≤ 1: {} · {dual_step} · {} = {prod}",
                step.max(),
                nb * nb
            )));
        }
        Ok(Self { f_prox, g_conj_prox, op, step, dual_step, relaxation })
    }
}

impl Kernel for Ulpda {
    fn name(&self) -> &'static str {
        "ulpda"
    }

    fn dim(&self) -> usize {
        self.op.in_dim()
    }

    fn init_state(&self, x0: Vec<f64>) -> ChainState {
        let m = self.op.out_dim();
        let mut s = ChainState::new(x0);
        s.dual = Some(DualState { u: vec![0.0; m], u_relaxed: vec![0.0; m] });
        s
    }

    fn step(&self, state: &mut ChainState, noise: &mut dyn NoiseSource) -> Result<StepMeta> {
        let gamma = self.step.at(state.step);
        let lam = self.dual_step;
        let c = noise_scale(gamma);
        let dual = state
            .dual
            .as_ref()
            .ok_or_else(|| LmcError::Config("primal-dual chain state has no dual variables".into()))?;
        let x = &state.x;
        let dtu = self.op.adjoint(&dual.u_relaxed);
        let v: Vec<f64> = x.iter().zip(&dtu).map(|(a, b)| a - gamma * b).collect();
        let mut xn = self.f_prox.prox_map(gamma, &v);
        let xi = noise.standard_normal(xn.len());
        xn.iter_mut().zip(&xi).for_each(|(a, e)| *a += c * e);
        check_point(state.step + 1, &xn)?;
        let ext: Vec<f64> = xn.iter().zip(x).map(|(a, b)| 2.0 * a - b).collect();
        let dext = self.op.apply(&ext);
        let w: Vec<f64> = dual.u.iter().zip(&dext).map(|(a, b)| a + lam * b).collect();
        let un = self.g_conj_prox.prox_map(lam, &w);
        check_point(state.step + 1, &un)?;
        let tau = self.relaxation;
        let ur: Vec<f64> = dual.u.iter().zip(&un).map(|(a, b)| a + tau * (b - a)).collect();
        state.x = xn;
        state.dual = Some(DualState { u: un, u_relaxed: ur });
        state.step += 1;
        Ok(StepMeta::default())
    }
}
