//! Single-step Markov kernels and the chain runner.

mod bregman;
mod primal_dual;
mod proximal;
mod smooth;
mod stochastic;

pub use bregman::{Bmumla, EnvelopeSide};
pub use primal_dual::Ulpda;
pub use proximal::{Fbula, Mymala, Myula, Pgld, Ppula};
pub use smooth::{mala_log_acceptance, shifted_inverse_hessian_metric, Mala, Metric, Mla, Pula, Ula};
pub use stochastic::{Sgld, Spgld, Ssgld};

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::numerics::linalg::norm2;
use crate::numerics::NoiseSource;
use crate::{LmcError, Result};

/// Any coordinate beyond this norm counts as divergence.
pub const DIVERGENCE_NORM: f64 = 1e8;

/// Step sizes `γ_n` for `n = 0, 1, ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepSchedule {
    Constant(f64),
    /// `γ_n = γ₀ (1 + n)^{−κ}`, `κ ≥ 0`.
    Polynomial { initial: f64, exponent: f64 },
    /// Explicit nonincreasing values; the last one repeats.
    Sequence(Vec<f64>),
}

impl StepSchedule {
    pub fn validate(&self) -> Result<()> {
        let ok = |g: f64| g > 0.0 && g.is_finite();
        match self {
            StepSchedule::Constant(g) if ok(*g) => Ok(()),
            StepSchedule::Polynomial { initial, exponent } if ok(*initial) && *exponent >= 0.0 => Ok(()),
            StepSchedule::Sequence(v) if !v.is_empty() && v.iter().all(|g| ok(*g)) => {
                if v.windows(2).all(|w| w[1] <= w[0]) {
                    Ok(())
                } else {
                    Err(LmcError::Config("step-size sequence must be nonincreasing".into()))
                }
            }
            other => Err(LmcError::Config(format!("invalid step-size schedule {other:?}"))),
        }
    }

    pub fn at(&self, n: u64) -> f64 {
        match self {
            StepSchedule::Constant(g) => *g,
            StepSchedule::Polynomial { initial, exponent } => initial * (1.0 + n as f64).powf(-exponent),
            StepSchedule::Sequence(v) => v[(n as usize).min(v.len() - 1)],
        }
    }

    /// Largest step ever used.
    pub fn max(&self) -> f64 {
        self.at(0)
    }
}

impl From<f64> for StepSchedule {
    fn from(g: f64) -> Self {
        StepSchedule::Constant(g)
    }
}

/// Dual variables of a primal-dual chain.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    pub u: Vec<f64>,
    pub u_relaxed: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub x: Vec<f64>,
    pub dual: Option<DualState>,
    /// Warm-start storage for iterative inner solvers.
    pub warm: Vec<f64>,
    /// Number of completed steps.
    pub step: u64,
}

impl ChainState {
    pub fn new(x: Vec<f64>) -> Self {
        Self { x, dual: None, warm: Vec::new(), step: 0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepMeta {
    /// Set by Metropolis-adjusted kernels only.
    pub accepted: Option<bool>,
    pub acceptance_prob: Option<f64>,
    pub proposal: Option<Vec<f64>>,
    /// The proposal had a non-finite log density and was rejected.
    pub nonfinite_proposal: bool,
    pub grad_norm: Option<f64>,
    /// Whether an inner iterative solver met its tolerance.
    pub inner_converged: Option<bool>,
}

/// One transition of a Markov chain.
pub trait Kernel: Send + Sync {
    fn name(&self) -> &'static str;
    fn dim(&self) -> usize;
    fn init_state(&self, x0: Vec<f64>) -> ChainState {
        ChainState::new(x0)
    }
    /// Advances `state` by one step. On error the state is left unchanged.
    fn step(&self, state: &mut ChainState, noise: &mut dyn NoiseSource) -> Result<StepMeta>;
}

/// Divergence check; on success moves `x` into the state.
pub(crate) fn commit(state: &mut ChainState, x: Vec<f64>) -> Result<()> {
    check_point(state.step + 1, &x)?;
    state.x = x;
    state.step += 1;
    Ok(())
}

pub(crate) fn check_point(step: u64, x: &[f64]) -> Result<()> {
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(LmcError::Divergence { step, reason: format!("coordinate {i} is {}", x[i]) });
    }
    let n = norm2(x);
    if n > DIVERGENCE_NORM {
        return Err(LmcError::Divergence { step, reason: format!("norm {n:e} exceeds {DIVERGENCE_NORM:e}") });
    }
    Ok(())
}

pub(crate) fn noise_scale(gamma: f64) -> f64 {
    (2.0 * gamma).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n_steps: u64,
    pub burn_in: u64,
    pub thinning: u64,
    /// Keep every retained sample; the running mean is always kept.
    pub store_samples: bool,
}

impl RunConfig {
    pub fn new(n_steps: u64, burn_in: u64, thinning: u64) -> Self {
        Self { n_steps, burn_in, thinning, store_samples: true }
    }

    pub fn validate(&self) -> Result<()> {
        if self.burn_in > self.n_steps {
            return Err(LmcError::Config(format!(
                "burn-in {} exceeds the number of steps {}",
                self.burn_in, self.n_steps
            )));
        }
        if self.thinning == 0 {
            return Err(LmcError::Config("thinning must be at least 1".into()));
        }
        Ok(())
    }

    fn retains(&self, step: u64) -> bool {
        step > self.burn_in && (step - self.burn_in) % self.thinning == 0
    }
}

#[derive(Debug, Clone)]
pub struct Chain {
    pub kernel: &'static str,
    pub samples: Vec<Vec<f64>>,
    /// Step index of each retained sample.
    pub sample_steps: Vec<u64>,
    pub n_retained: u64,
    pub mean: Vec<f64>,
    pub steps_run: u64,
    pub mh_steps: u64,
    pub accepted: u64,
    pub nonfinite_proposals: u64,
    pub inner_not_converged: u64,
    pub divergence: Option<String>,
    pub wall_time: Duration,
    pub final_state: ChainState,
}

impl Chain {
    pub fn acceptance_rate(&self) -> Option<f64> {
        (self.mh_steps > 0).then(|| self.accepted as f64 / self.mh_steps as f64)
    }
}

/// A chain that stopped early; `chain` holds everything up to the failure.
#[derive(Debug)]
pub struct ChainFailure {
    pub chain: Chain,
    pub error: LmcError,
}

impl std::fmt::Display for ChainFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} chain stopped after {} steps: {}", self.chain.kernel, self.chain.steps_run, self.error)
    }
}

impl std::error::Error for ChainFailure {}

pub fn run_chain(
    kernel: &dyn Kernel,
    init: ChainState,
    cfg: &RunConfig,
    noise: &mut dyn NoiseSource,
) -> std::result::Result<Chain, ChainFailure> {
    let start = Instant::now();
    let d = init.x.len();
    let mut chain = Chain {
        kernel: kernel.name(),
        samples: Vec::new(),
        sample_steps: Vec::new(),
        n_retained: 0,
        mean: vec![0.0; d],
        steps_run: 0,
        mh_steps: 0,
        accepted: 0,
        nonfinite_proposals: 0,
        inner_not_converged: 0,
        divergence: None,
        wall_time: Duration::ZERO,
        final_state: init,
    };
    if let Err(error) = cfg.validate().and_then(|_| crate::error::check_dim(kernel.dim(), d)) {
        return Err(ChainFailure { chain, error });
    }
    for _ in 0..cfg.n_steps {
        let meta = match kernel.step(&mut chain.final_state, noise) {
            Ok(m) => m,
            Err(error) => {
                if let LmcError::Divergence { reason, .. } = &error {
                    chain.divergence = Some(reason.clone());
                }
                chain.wall_time = start.elapsed();
                return Err(ChainFailure { chain, error });
            }
        };
        chain.steps_run += 1;
        if let Some(a) = meta.accepted {
            chain.mh_steps += 1;
            chain.accepted += a as u64;
        }
        chain.nonfinite_proposals += meta.nonfinite_proposal as u64;
        if meta.inner_converged == Some(false) {
            chain.inner_not_converged += 1;
        }
        let s = chain.final_state.step;
        if cfg.retains(s) {
            chain.n_retained += 1;
            let w = 1.0 / chain.n_retained as f64;
            for (m, v) in chain.mean.iter_mut().zip(&chain.final_state.x) {
                *m += w * (v - *m);
            }
            if cfg.store_samples {
                chain.samples.push(chain.final_state.x.clone());
                chain.sample_steps.push(s);
            }
        }
    }
    chain.wall_time = start.elapsed();
    Ok(chain)
}
