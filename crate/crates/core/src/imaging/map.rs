use super::model::DeconvolutionModel;
use crate::numerics::linalg::norm2;
use crate::prox::{ball_projection_prox_conj, LinOp};
use crate::{LmcError, Result};

/// Step adaptation factor.
pub const ADAPT_FACTOR: f64 = 1.05;
/// Residual ratio that triggers adaptation.
pub const ADAPT_RATIO: f64 = 10.0;

#[derive(Debug, Clone)]
pub struct MapResult {
    pub image: Vec<f64>,
    /// MAP objective after every iteration.
    pub objective: Vec<f64>,
    /// `‖p‖ + ‖d‖`, primal plus dual residual, after every iteration.
    pub residual: Vec<f64>,
    pub final_primal_step: f64,
    pub final_dual_step: f64,
    /// Iterations at which the objective increased.
    pub nonmonotone_steps: usize,
}

/// Adaptive primal-dual hybrid gradient for the MAP estimate, with the
/// concave part of the prior handled through the linearised data prox.
///
/// Steps are rebalanced by [`ADAPT_FACTOR`] whenever one residual exceeds
/// the other by [`ADAPT_RATIO`], keeping `γλ` constant. Starts from the
/// observation with zero dual.
pub fn adapdhg_map(model: &DeconvolutionModel, iters: usize, gamma0: f64, lambda0: f64) -> Result<MapResult> {
    if iters == 0 {
        return Err(LmcError::Config("AdaPDHG needs at least one iteration".into()));
    }
    if !(gamma0 > 0.0 && lambda0 > 0.0) {
        return Err(LmcError::Config("AdaPDHG step sizes must be positive".into()));
    }
    let nb = model.diff.norm_bound();
    if gamma0 * lambda0 * nb * nb > 1.0 + 1e-12 {
        return Err(LmcError::Config(format!("AdaPDHG steps violate γλ‖D‖² ≤ 1: {gamma0} · {lambda0} · 8")));
    }
    let tau = model.prior.tau;
    let d = &model.diff;
    let mut x = model.y.clone();
    let mut u = vec![0.0; 2 * x.len()];
    let (mut gamma, mut lambda) = (gamma0, lambda0);
    let mut objective = Vec::with_capacity(iters);
    let mut residual = Vec::with_capacity(iters);
    let mut nonmonotone = 0;
    for _ in 0..iters {
        let dtu = d.adjoint(&u);
        let v: Vec<f64> = x.iter().zip(&dtu).map(|(a, b)| a - gamma * b).collect();
        let xn = model.approx_prox_f(gamma, &v);
        let ext: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| 2.0 * a - b).collect();
        let dext = d.apply(&ext);
        let w: Vec<f64> = u.iter().zip(&dext).map(|(a, b)| a + lambda * b).collect();
        let un = ball_projection_prox_conj(tau, &w);

        let dx: Vec<f64> = x.iter().zip(&xn).map(|(a, b)| a - b).collect();
        let du: Vec<f64> = u.iter().zip(&un).map(|(a, b)| a - b).collect();
        let dt_du = d.adjoint(&du);
        let d_dx = d.apply(&dx);
        let p: Vec<f64> = dx.iter().zip(&dt_du).map(|(a, b)| a / gamma - b).collect();
        let q: Vec<f64> = du.iter().zip(&d_dx).map(|(a, b)| a / lambda - b).collect();
        let (pn, qn) = (norm2(&p), norm2(&q));

        x = xn;
        u = un;
        let obj = model.map_objective(&x);
        if objective.last().is_some_and(|&prev: &f64| obj > prev) {
            nonmonotone += 1;
        }
        objective.push(obj);
        residual.push(pn + qn);
        if pn > ADAPT_RATIO * qn {
            gamma *= ADAPT_FACTOR;
            lambda /= ADAPT_FACTOR;
        } else if qn > ADAPT_RATIO * pn {
            gamma /= ADAPT_FACTOR;
            lambda *= ADAPT_FACTOR;
        }
    }
    Ok(MapResult { image: x, objective, residual, final_primal_step: gamma, final_dual_step: lambda, nonmonotone_steps: nonmonotone })
}
