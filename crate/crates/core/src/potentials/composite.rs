use std::sync::Arc;

use super::Potential;
use crate::numerics::linalg::{dot, norm2};
use crate::numerics::{NoiseSource, Prng};
use crate::prox::ProxFriendly;
use crate::{LmcError, Result};

const PROBES: usize = 5;
const PROBE_TOL: f64 = 1e-5;

/// `U = f + g` with `f` smooth and `g` proximable.
#[derive(Clone)]
pub struct CompositePotential {
    f: Arc<dyn Potential>,
    g: Arc<dyn ProxFriendly>,
}

impl std::fmt::Debug for CompositePotential {
    fn fmt(&self, fmt: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fmt.debug_struct("CompositePotential").field("dim", &self.f.dim()).finish()
    }
}

impl CompositePotential {
    /// Builds the composite after checking `∇f` against central differences
    /// along random directions at a few random points.
    pub fn new(f: Arc<dyn Potential>, g: Arc<dyn ProxFriendly>) -> Result<Self> {
        check_gradient(f.as_ref())?;
        Ok(Self { f, g })
    }

    /// No gradient check. For smooth parts whose gradient is only as exact
    /// as an inner solver.
    pub fn new_unchecked(f: Arc<dyn Potential>, g: Arc<dyn ProxFriendly>) -> Self {
        Self { f, g }
    }

    pub fn dim(&self) -> usize {
        self.f.dim()
    }

    pub fn smooth(&self) -> &dyn Potential {
        self.f.as_ref()
    }

    pub fn nonsmooth(&self) -> &dyn ProxFriendly {
        self.g.as_ref()
    }

    pub fn smooth_arc(&self) -> Arc<dyn Potential> {
        self.f.clone()
    }

    pub fn nonsmooth_arc(&self) -> Arc<dyn ProxFriendly> {
        self.g.clone()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.f.value(x) + self.g.value(x)
    }
}

fn check_gradient(f: &dyn Potential) -> Result<()> {
    let d = f.dim();
    let mut rng = Prng::new(0x5eed_0f_fd, 0);
    for probe in 0..PROBES {
        let x = rng.standard_normal(d);
        let mut v = rng.standard_normal(d);
        let nv = norm2(&v);
        v.iter_mut().for_each(|c| *c /= nv);
        let h = 1e-5 * norm2(&x).max(1.0);
        let xp: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a + h * b).collect();
        let xm: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a - h * b).collect();
        let fd = (f.value(&xp) - f.value(&xm)) / (2.0 * h);
        let an = dot(&f.gradient(&x), &v);
        let scale = fd.abs().max(an.abs()).max(1.0);
        if !fd.is_finite() || !an.is_finite() || (fd - an).abs() > PROBE_TOL * scale {
            return Err(LmcError::Numeric(format!(
                "gradient of the smooth part disagrees with finite differences at probe {probe}: {an} vs {fd}"
            )));
        }
    }
    Ok(())
}

/// `U_λ = f + g_λ`, the Moreau–Yosida surrogate of a composite.
#[derive(Debug, Clone)]
pub struct SmoothedComposite {
    pub base: CompositePotential,
    pub smoothing: f64,
}

impl SmoothedComposite {
    pub fn new(base: CompositePotential, smoothing: f64) -> Result<Self> {
        if !(smoothing > 0.0) {
            return Err(LmcError::Domain(format!("smoothing must be positive, got {smoothing}")));
        }
        Ok(Self { base, smoothing })
    }
}

impl Potential for SmoothedComposite {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.base.f.value(x) + self.base.g.moreau_env(self.smoothing, x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.base.f.gradient(x);
        let m = self.base.g.moreau_grad(self.smoothing, x);
        g.iter_mut().zip(&m).for_each(|(a, b)| *a += b);
        g
    }
}
