//! Separable Legendre functions and Bregman proximity operators of the
//! shifted ℓ1 norm.

use crate::numerics::linalg::Matrix;
use crate::prox::{ProxFriendly, ShiftedL1};
use crate::{LmcError, Result};

/// A separable Legendre function `φ(x) = Σ_i φ_i(x_i)`.
///
/// Implementors supply the one-dimensional pieces; vector forms are derived.
pub trait LegendreMap: Send + Sync {
    fn phi_1d(&self, i: usize, t: f64) -> f64;
    fn dphi_1d(&self, i: usize, t: f64) -> f64;
    /// Inverse of `dphi_1d`, i.e. the derivative of the conjugate.
    fn dphi_conj_1d(&self, i: usize, s: f64) -> f64;
    fn d2phi_1d(&self, i: usize, t: f64) -> f64;

    fn value(&self, x: &[f64]) -> f64 {
        x.iter().enumerate().map(|(i, &t)| self.phi_1d(i, t)).sum()
    }

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        x.iter().enumerate().map(|(i, &t)| self.dphi_1d(i, t)).collect()
    }

    fn conj_grad(&self, y: &[f64]) -> Vec<f64> {
        y.iter().enumerate().map(|(i, &s)| self.dphi_conj_1d(i, s)).collect()
    }

    fn hess(&self, x: &[f64]) -> Matrix {
        let d: Vec<f64> = x.iter().enumerate().map(|(i, &t)| self.d2phi_1d(i, t)).collect();
        Matrix::diag(&d)
    }

    fn hess_mul(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(v)
            .enumerate()
            .map(|(i, (&t, &vi))| self.d2phi_1d(i, t) * vi)
            .collect()
    }

    fn hess_sqrt_mul(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(v)
            .enumerate()
            .map(|(i, (&t, &vi))| self.d2phi_1d(i, t).sqrt() * vi)
            .collect()
    }
}

/// `½‖x‖²`.
#[derive(Debug, Clone, Copy, Default)]
pub struct EuclideanMap;

impl LegendreMap for EuclideanMap {
    fn phi_1d(&self, _i: usize, t: f64) -> f64 {
        0.5 * t * t
    }
    fn dphi_1d(&self, _i: usize, t: f64) -> f64 {
        t
    }
    fn dphi_conj_1d(&self, _i: usize, s: f64) -> f64 {
        s
    }
    fn d2phi_1d(&self, _i: usize, _t: f64) -> f64 {
        1.0
    }
}

/// Hyperbolic entropy `Σ_i x_i asinh(x_i/β_i) − √(x_i² + β_i²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperbolicEntropy {
    beta: Vec<f64>,
}

impl HyperbolicEntropy {
    pub fn new(beta: Vec<f64>) -> Result<Self> {
        if beta.is_empty() || beta.iter().any(|b| !(*b > 0.0) || !b.is_finite()) {
            return Err(LmcError::Domain(format!(
                "hyperbolic entropy needs positive finite beta, got {beta:?}"
            )));
        }
        Ok(Self { beta })
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }
}

impl LegendreMap for HyperbolicEntropy {
    fn phi_1d(&self, i: usize, t: f64) -> f64 {
        let b = self.beta[i];
        t * (t / b).asinh() - t.hypot(b)
    }
    fn dphi_1d(&self, i: usize, t: f64) -> f64 {
        (t / self.beta[i]).asinh()
    }
    fn dphi_conj_1d(&self, i: usize, s: f64) -> f64 {
        self.beta[i] * s.sinh()
    }
    fn d2phi_1d(&self, i: usize, t: f64) -> f64 {
        1.0 / t.hypot(self.beta[i])
    }
}

/// `D_φ(x, y) = φ(x) − φ(y) − ⟨∇φ(y), x − y⟩`, clamped at zero against
/// rounding.
pub fn bregman_div(phi: &dyn LegendreMap, x: &[f64], y: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..x.len() {
        s += phi.phi_1d(i, x[i]) - phi.phi_1d(i, y[i]) - phi.dphi_1d(i, y[i]) * (x[i] - y[i]);
    }
    s.max(0.0)
}

fn breg_1d(phi: &dyn LegendreMap, i: usize, x: f64, y: f64) -> f64 {
    phi.phi_1d(i, x) - phi.phi_1d(i, y) - phi.dphi_1d(i, y) * (x - y)
}

/// Left prox `argmin_y α‖y − μ‖₁ + D_ψ(y, x)/λ`, in closed form.
pub fn left_bregman_prox_l1(psi: &dyn LegendreMap, lambda: f64, x: &[f64], g: &ShiftedL1) -> Vec<f64> {
    let thr = lambda * g.scale;
    (0..x.len())
        .map(|i| {
            let mu = g.center[i];
            let t = psi.dphi_1d(i, x[i]);
            let m = psi.dphi_1d(i, mu);
            if (t - m).abs() <= thr {
                mu
            } else {
                psi.dphi_conj_1d(i, t - thr * (t - m).signum())
            }
        })
        .collect()
}

pub fn left_bregman_env_value(psi: &dyn LegendreMap, lambda: f64, x: &[f64], g: &ShiftedL1) -> f64 {
    let y = left_bregman_prox_l1(psi, lambda, x, g);
    g.value(&y) + bregman_div(psi, &y, x) / lambda
}

/// `∇²ψ(x)(x − y)/λ` with `y` the left prox.
pub fn left_bregman_env_grad(psi: &dyn LegendreMap, lambda: f64, x: &[f64], g: &ShiftedL1) -> Vec<f64> {
    let y = left_bregman_prox_l1(psi, lambda, x, g);
    (0..x.len())
        .map(|i| psi.d2phi_1d(i, x[i]) * (x[i] - y[i]) / lambda)
        .collect()
}

const RIGHT_SCAN: usize = 128;
const RIGHT_MAX_ITER: usize = 200;

/// Right prox `argmin_y α‖y − μ‖₁ + D_ψ(x, y)/λ`.
///
/// The objective is not convex in `y` for general `ψ`. The minimiser lies
/// between `μ` and `x`, so each coordinate is solved by scanning that
/// segment for descent-to-ascent sign changes of the derivative, refining
/// each by bisection and keeping the best candidate (including `μ`).
pub fn right_bregman_prox_l1(
    psi: &dyn LegendreMap,
    lambda: f64,
    x: &[f64],
    g: &ShiftedL1,
) -> Result<Vec<f64>> {
    (0..x.len())
        .map(|i| right_prox_1d(psi, i, lambda, x[i], g.center[i], g.scale))
        .collect()
}

fn right_prox_1d(psi: &dyn LegendreMap, i: usize, lambda: f64, x: f64, mu: f64, a: f64) -> Result<f64> {
    if x == mu {
        return Ok(mu);
    }
    let obj = |y: f64| a * (y - mu).abs() + breg_1d(psi, i, x, y) / lambda;
    // derivative along y(u) = μ + u (x − μ), valid for u in (0, 1]
    let span = x - mu;
    let dobj = |u: f64| {
        let y = mu + u * span;
        (a * span.signum() + psi.d2phi_1d(i, y) * (y - x) / lambda) * span
    };
    let mut best = mu;
    let mut best_val = obj(mu);
    let mut u_prev = 0.0;
    let mut d_prev = dobj(f64::EPSILON);
    for k in 1..=RIGHT_SCAN {
        let u = k as f64 / RIGHT_SCAN as f64;
        let d = dobj(u);
        if d_prev < 0.0 && d >= 0.0 {
            let (mut lo, mut hi) = (u_prev, u);
            let mut it = 0;
            while (hi - lo) * span.abs() > 1e-12 * (mu + lo * span).abs().max(1.0) {
                it += 1;
                if it > RIGHT_MAX_ITER {
                    return Err(LmcError::Numeric(format!(
                        "right Bregman prox did not converge on coordinate {i}"
                    )));
                }
                let mid = 0.5 * (lo + hi);
                if dobj(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let y = mu + 0.5 * (lo + hi) * span;
            let v = obj(y);
            if v < best_val {
                best = y;
                best_val = v;
            }
        }
        u_prev = u;
        d_prev = d;
    }
    if !best.is_finite() {
        return Err(LmcError::Numeric(format!(
            "right Bregman prox produced a non-finite point on coordinate {i}"
        )));
    }
    Ok(best)
}

pub fn right_bregman_env_value(psi: &dyn LegendreMap, lambda: f64, x: &[f64], g: &ShiftedL1) -> Result<f64> {
    let y = right_bregman_prox_l1(psi, lambda, x, g)?;
    Ok(g.value(&y) + bregman_div(psi, x, &y) / lambda)
}

/// `(∇ψ(x) − ∇ψ(y))/λ` with `y` the right prox.
pub fn right_bregman_env_grad(psi: &dyn LegendreMap, lambda: f64, x: &[f64], g: &ShiftedL1) -> Result<Vec<f64>> {
    let y = right_bregman_prox_l1(psi, lambda, x, g)?;
    Ok((0..x.len())
        .map(|i| (psi.dphi_1d(i, x[i]) - psi.dphi_1d(i, y[i])) / lambda)
        .collect())
}
