//! Proximity operator in the metric induced by an SPD preconditioner.

use crate::numerics::linalg::{symmetric_eigen, SpdMatrix};
use crate::prox::ProxFriendly;
use crate::Result;

pub const Q_PROX_TOL: f64 = 1e-10;
pub const Q_PROX_MAX_ITER: usize = 500;

#[derive(Debug, Clone)]
pub struct QProxResult {
    pub point: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// `argmin_y g(y) + ‖y − x‖²_{Q⁻¹}/(2λ)`.
///
/// Solved by forward–backward iterations on the dual
/// `min_s g*(s) + (λ/2) sᵀQs − sᵀx`, recovering `y = x − λQs`. Uses only
/// the Euclidean prox of `g` (through Moreau's identity). For `Q = I` the
/// first iterate is exact.
pub fn q_metric_prox(g: &dyn ProxFriendly, q: &SpdMatrix, lambda: f64, x: &[f64]) -> Result<QProxResult> {
    let qnorm = *symmetric_eigen(q.matrix())?.values.last().unwrap_or(&1.0);
    let rho = 1.0 / (lambda * qnorm);
    let d = x.len();
    let mut s = vec![0.0; d];
    let mut y = x.to_vec();
    for it in 1..=Q_PROX_MAX_ITER {
        // s ← prox_{ρ g*}(s + ρ y) = u − ρ prox_{g/ρ}(u/ρ)
        let u: Vec<f64> = s.iter().zip(&y).map(|(si, yi)| si + rho * yi).collect();
        let scaled: Vec<f64> = u.iter().map(|v| v / rho).collect();
        let p = g.prox(1.0 / rho, &scaled);
        for i in 0..d {
            s[i] = u[i] - rho * p[i];
        }
        let qs = q.mul_vec(&s);
        let mut delta = 0.0f64;
        for i in 0..d {
            let yn = x[i] - lambda * qs[i];
            delta = delta.max((yn - y[i]).abs());
            y[i] = yn;
        }
        if delta < Q_PROX_TOL * (1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs()))) && it > 1 {
            return Ok(QProxResult { point: y, iterations: it, converged: true });
        }
    }
    Ok(QProxResult { point: y, iterations: Q_PROX_MAX_ITER, converged: false })
}
