use std::sync::Arc;

use super::{commit, noise_scale, ChainState, Kernel, StepMeta, StepSchedule};
use crate::numerics::linalg::norm2;
use crate::numerics::NoiseSource;
use crate::potentials::{stochastic_gradient, FiniteSumPotential};
use crate::prox::ProxFriendly;
use crate::{LmcError, Result};

fn check_batch(fs: &dyn FiniteSumPotential, b: usize) -> Result<()> {
    if b == 0 || b > fs.n_data() {
        return Err(LmcError::Config(format!("batch size must be in 1..={}, got {b}", fs.n_data())));
    }
    Ok(())
}

/// Stochastic gradient Langevin dynamics. The mini-batch is drawn before the
/// Gaussian noise; a full batch consumes no randomness.
pub struct Sgld {
    pub data: Arc<dyn FiniteSumPotential>,
    pub batch_size: usize,
    pub step: StepSchedule,
}

impl Sgld {
    pub fn new(data: Arc<dyn FiniteSumPotential>, batch_size: usize, step: impl Into<StepSchedule>) -> Result<Self> {
        let step = step.into();
        step.validate()?;
        check_batch(data.as_ref(), batch_size)?;
        Ok(Self { data, batch_size, step })
    }
}

impl Kernel for Sgld {
    fn name(&self) -> &'static str {
        "sgld"
    }

    fn dim(&self) -> usize {
        self.data.dim()
    }

    fn step(&self, state: &mut ChainState, noise: &mut dyn NoiseSource) -> Result<StepMeta> {
        let gamma = self.step.at(state.step);
        let c = noise_scale(gamma);
        let batch = noise.sample_batch(self.data.n_data(), self.batch_size);
        let g = stochastic_gradient(self.data.as_ref(), &state.x, &batch)?;
        let xi = noise.standard_normal(g.len());
        let x: Vec<f64> = (0..g.len()).map(|i| state.x[i] - gamma * g[i] + c * xi[i]).collect();
        commit(state, x)?;
        Ok(StepMeta { grad_norm: Some(norm2(&g)), ..Default::default() })
    }
}

/// Stochastic proximal gradient Langevin:
/// `x' = p − γĝ(p) + √(2γ)ξ`, `p = prox_{λg}(x)`.
pub struct Spgld {
    pub data: Arc<dyn FiniteSumPotential>,
    pub g: Arc<dyn ProxFriendly>,
    pub batch_size: usize,
    pub step: StepSchedule,
    pub smoothing: f64,
}

impl Spgld {
    pub fn new(
        data: Arc<dyn FiniteSumPotential>,
        g: Arc<dyn ProxFriendly>,
        batch_size: usize,
        step: impl Into<StepSchedule>,
        smoothing: f64,
    ) -> Result<Self> {
        let step = step.into();
        step.validate()?;
        check_batch(data.as_ref(), batch_size)?;
        if !(smoothing > 0.0) {
            return Err(LmcError::Config(format!("smoothing parameter must be positive, got {smoothing}")));
        }
        Ok(Self { data, g, batch_size, step, smoothing })
    }
}

impl Kernel for Spgld {
    fn name(&self) -> &'static str {
        "spgld"
    }

    fn dim(&self) -> usize {
        self.data.dim()
    }

    fn step(&self, state: &mut ChainState, noise: &mut dyn NoiseSource) -> Result<StepMeta> {
        let gamma = self.step.at(state.step);
        let c = noise_scale(gamma);
        let p = self.g.prox(self.smoothing, &state.x);
        let batch = noise.sample_batch(self.data.n_data(), self.batch_size);
        let g = stochastic_gradient(self.data.as_ref(), &p, &batch)?;
        let xi = noise.standard_normal(g.len());
        let x: Vec<f64> = (0..g.len()).map(|i| p[i] - gamma * g[i] + c * xi[i]).collect();
        commit(state, x)?;
        Ok(StepMeta { grad_norm: Some(norm2(&g)), ..Default::default() })
    }
}

/// Stochastic subgradient Langevin with the minimal-norm subgradient:
/// `x' = x − γ(ĝ(x) + s) + √(2γ)ξ`, `s ∈ ∂g(x)`.
pub struct Ssgld {
    pub data: Arc<dyn FiniteSumPotential>,
    pub g: Arc<dyn ProxFriendly>,
    pub batch_size: usize,
    pub step: StepSchedule,
}

impl Ssgld {
    pub fn new(
        data: Arc<dyn FiniteSumPotential>,
        g: Arc<dyn ProxFriendly>,
        batch_size: usize,
        step: impl Into<StepSchedule>,
    ) -> Result<Self> {
        let step = step.into();
        step.validate()?;
        check_batch(data.as_ref(), batch_size)?;
        Ok(Self { data, g, batch_size, step })
    }
}

impl Kernel for Ssgld {
    fn name(&self) -> &'static str {
        "ssgld"
    }

    fn dim(&self) -> usize {
        self.data.dim()
    }

    fn step(&self, state: &mut ChainState, noise: &mut dyn NoiseSource) -> Result<StepMeta> {
        let gamma = self.step.at(state.step);
        let c = noise_scale(gamma);
        let batch = noise.sample_batch(self.data.n_data(), self.batch_size);
        let g = stochastic_gradient(self.data.as_ref(), &state.x, &batch)?;
        let s = self.g.subgrad(&state.x);
        let xi = noise.standard_normal(g.len());
        let x: Vec<f64> = (0..g.len()).map(|i| state.x[i] - gamma * (g[i] + s[i]) + c * xi[i]).collect();
        commit(state, x)?;
        Ok(StepMeta { grad_norm: Some(norm2(&g)), ..Default::default() })
    }
}
