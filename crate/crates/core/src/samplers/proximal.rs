use super::smooth::{mh_decide, mh_log_ratio};
use super::{commit, noise_scale, ChainState, Kernel, StepMeta, StepSchedule};
use crate::numerics::linalg::{norm2, SpdMatrix};
use crate::numerics::{spectral_sqrt, NoiseSource};
use crate::potentials::CompositePotential;
use crate::prox::{fb_envelope_grad, q_metric_prox};
use crate::{LmcError, Result};

fn check_smoothing(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(LmcError::Config(format!("smoothing parameter must be positive, got {lambda}")))
    }
}

/// `(1 − γ/λ)x + (γ/λ)p − γ∇f(x)` with `p = prox_{λg}(x)`.
fn myula_drift(x: &[f64], p: &[f64], gf: &[f64], gamma: f64, lambda: f64) -> Vec<f64> {
    let r = gamma / lambda;
    (0..x.len()).map(|i| (1.0 - r) * x[i] + r * p[i] - gamma * gf[i]).collect()
}

/// Moreau–Yosida ULA.
pub struct Myula {
    pub target: CompositePotential,
    pub step: StepSchedule,
    pub smoothing: f64,
}

impl Myula {
    pub fn new(target: CompositePotential, step: impl Into<StepSchedule>, smoothing: f64) -> Result<Self> {
        let step = step.into();
        step.validate()?;
        check_smoothing(smoothing)?;
        Ok(Self { target, step, smoothing })
    }
}

impl Kernel for Myula {
    fn name(&self) -> &'static str {
        "myula"
    }

    fn dim(&self) -> usize {
        self.target.dim()
    }

    fn step(&self, state: &mut ChainState, noise: &mut dyn NoiseSource) -> Result<StepMeta> {
        let gamma = self.step.at(state.step);
        let c = noise_scale(gamma);
        let mut warm = std::mem::take(&mut state.warm);
        let p = self.target.nonsmooth().prox_warm(self.smoothing, &state.x, &mut warm);
        let gf = self.target.smooth().gradient(&state.x);
        let mut x = myula_drift(&state.x, &p, &gf, gamma, self.smoothing);
        let xi = noise.standard_normal(x.len());
        x.iter_mut().zip(&xi).for_each(|(a, e)| *a += c * e);
        let res = commit(state, x);
        state.warm = warm;
        res?;
        Ok(StepMeta { grad_norm: Some(norm2(&gf)), ..Default::default() })
    }
}

/// Proximal gradient Langevin: `x' = p − γ∇f(p) + √(2γ)ξ`, `p = prox_{λg}(x)`.
pub struct Pgld {
    pub target: CompositePotential,
    pub step: StepSchedule,
    pub smoothing: f64,
}

impl Pgld {
    pub fn new(target: CompositePotential, step: impl Into<StepSchedule>, smoothing: f64) -> Result<Self> {
        let step = step.into();
        step.validate()?;
        check_smoothing(smoothing)?;
        Ok(Self { target, step, smoothing })
    }
}

impl Kernel for Pgld {
    fn name(&self) -> &'static str {
        "pgld"
    }

    fn dim(&self) -> usize {
        self.target.dim()
    }

    fn step(&self, state: &mut ChainState, noise: &mut dyn NoiseSource) -> Result<StepMeta> {
        let gamma = self.step.at(state.step);
        let c = noise_scale(gamma);
        let mut warm = std::mem::take(&mut state.warm);
        let p = self.target.nonsmooth().prox_warm(self.smoothing, &state.x, &mut warm);
        let gf = self.target.smooth().gradient(&p);
        let xi = noise.standard_normal(p.len());
        let x: Vec<f64> = (0..p.len()).map(|i| p[i] - gamma * gf[i] + c * xi[i]).collect();
        let res = commit(state, x);
        state.warm = warm;
        res?;
        Ok(StepMeta { grad_norm: Some(norm2(&gf)), ..Default::default() })
    }
}

/// Metropolis-adjusted MYULA. The proposal is the MYULA move and the
/// acceptance ratio targets the surrogate `π_λ ∝ exp(−f − g_λ)`, so the
/// chain is exact for `π_λ`, not for `π`.
pub struct Mymala {
    pub target: CompositePotential,
    pub step: StepSchedule,
    pub smoothing: f64,
}

impl Mymala {
    pub fn new(target: CompositePotential, step: impl Into<StepSchedule>, smoothing: f64) -> Result<Self> {
        let step = step.into();
        step.validate()?;
        check_smoothing(smoothing)?;
        Ok(Self { target, step, smoothing })
    }

    fn drift(&self, z: &[f64], gamma: f64) -> (Vec<f64>, f64) {
        let p = self.target.nonsmooth().prox(self.smoothing, z);
        let gf = self.target.smooth().gradient(z);
        (myula_drift(z, &p, &gf, gamma, self.smoothing), norm2(&gf))
    }

    /// `log π_λ` up to a constant.
    pub fn log_target(&self, z: &[f64]) -> f64 {
        -(self.target.smooth().value(z) + self.target.nonsmooth().moreau_env(self.smoothing, z))
    }
}

impl Kernel for Mymala {
    fn name(&self) -> &'static str {
        "mymala"
    }

    fn dim(&self) -> usize {
        self.target.dim()
    }

    fn step(&self, state: &mut ChainState, noise: &mut dyn NoiseSource) -> Result<StepMeta> {
        let gamma = self.step.at(state.step);
        let c = noise_scale(gamma);
        let x = &state.x;
        let (mx, gn) = self.drift(x, gamma);
        let xi = noise.standard_normal(x.len());
        let y: Vec<f64> = mx.iter().zip(&xi).map(|(m, e)| m + c * e).collect();
        let (my, _) = self.drift(&y, gamma);
        let la = mh_log_ratio(self.log_target(x), self.log_target(&y), x, &y, &mx, &my, gamma);
        mh_decide(state, y, la, noise, gn)
    }
}

/// Preconditioned proximal ULA with `λ = γ`:
/// `x' = prox^Q_{γg}(x − γQ∇f(x)) + √(2γ)Q^{1/2}ξ`.
pub struct Ppula {
    pub target: CompositePotential,
    pub q: SpdMatrix,
    q_sqrt: SpdMatrix,
    pub step: StepSchedule,
}

impl Ppula {
    pub fn new(target: CompositePotential, q: SpdMatrix, step: impl Into<StepSchedule>) -> Result<Self> {
        let step = step.into();
        step.validate()?;
        crate::error::check_dim(target.dim(), q.dim())?;
        let q_sqrt = spectral_sqrt(&q)?;
        Ok(Self { target, q, q_sqrt, step })
    }
}

impl Kernel for Ppula {
    fn name(&self) -> &'static str {
        "ppula"
    }

    fn dim(&self) -> usize {
        self.target.dim()
    }

    fn step(&self, state: &mut ChainState, noise: &mut dyn NoiseSource) -> Result<StepMeta> {
        let gamma = self.step.at(state.step);
        let c = noise_scale(gamma);
        let gf = self.target.smooth().gradient(&state.x);
        let qg = self.q.mul_vec(&gf);
        let v: Vec<f64> = state.x.iter().zip(&qg).map(|(a, b)| a - gamma * b).collect();
        let pr = q_metric_prox(self.target.nonsmooth(), &self.q, gamma, &v)?;
        let xi = noise.standard_normal(v.len());
        let s = self.q_sqrt.mul_vec(&xi);
        let x: Vec<f64> = pr.point.iter().zip(&s).map(|(p, e)| p + c * e).collect();
        commit(state, x)?;
        Ok(StepMeta { grad_norm: Some(norm2(&gf)), inner_converged: Some(pr.converged), ..Default::default() })
    }
}

/// Forward–backward ULA: `x' = x − γ∇f^{FB}_λ(x) + √(2γ)ξ`.
pub struct Fbula {
    pub target: CompositePotential,
    pub step: StepSchedule,
    pub smoothing: f64,
    /// `λ ≥ 1/L` for the configured Lipschitz constant `L` (advisory).
    pub lipschitz_warning: bool,
}

impl Fbula {
    pub fn new(
        target: CompositePotential,
        step: impl Into<StepSchedule>,
        smoothing: f64,
        lipschitz: Option<f64>,
    ) -> Result<Self> {
        let step = step.into();
        step.validate()?;
        check_smoothing(smoothing)?;
        let lipschitz_warning = lipschitz.is_some_and(|l| smoothing * l >= 1.0);
        Ok(Self { target, step, smoothing, lipschitz_warning })
    }
}

impl Kernel for Fbula {
    fn name(&self) -> &'static str {
        "fbula"
    }

    fn dim(&self) -> usize {
        self.target.dim()
    }

    fn step(&self, state: &mut ChainState, noise: &mut dyn NoiseSource) -> Result<StepMeta> {
        let gamma = self.step.at(state.step);
        let c = noise_scale(gamma);
        let g = fb_envelope_grad(&self.target, self.smoothing, &state.x)?;
        if let Some(i) = g.iter().position(|v| !v.is_finite()) {
            return Err(LmcError::Divergence {
                step: state.step + 1,
                reason: format!("envelope gradient coordinate {i} is {}", g[i]),
            });
        }
        let xi = noise.standard_normal(g.len());
        let x: Vec<f64> = (0..g.len()).map(|i| state.x[i] - gamma * g[i] + c * xi[i]).collect();
        commit(state, x)?;
        Ok(StepMeta { grad_norm: Some(norm2(&g)), ..Default::default() })
    }
}
