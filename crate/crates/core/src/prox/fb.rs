//! Forward–backward envelope of a composite potential.

use crate::numerics::linalg::norm2;
use crate::potentials::CompositePotential;
use crate::{LmcError, Result};

/// `f(x) − (λ/2)‖∇f(x)‖² + g_λ(x − λ∇f(x))`.
pub fn fb_envelope_value(u: &CompositePotential, lambda: f64, x: &[f64]) -> f64 {
    let gf = u.smooth().gradient(x);
    let z: Vec<f64> = x.iter().zip(&gf).map(|(a, b)| a - lambda * b).collect();
    let n = norm2(&gf);
    u.smooth().value(x) - 0.5 * lambda * n * n + u.nonsmooth().moreau_env(lambda, &z)
}

/// `λ⁻¹(I − λ∇²f(x))(x − prox_{λg}(x − λ∇f(x)))`. Needs the Hessian of `f`.
pub fn fb_envelope_grad(u: &CompositePotential, lambda: f64, x: &[f64]) -> Result<Vec<f64>> {
    let f = u.smooth();
    let h = f
        .hessian(x)
        .ok_or_else(|| LmcError::Capability("forward-backward envelope needs a Hessian of the smooth part".into()))?;
    let gf = f.gradient(x);
    let z: Vec<f64> = x.iter().zip(&gf).map(|(a, b)| a - lambda * b).collect();
    let p = u.nonsmooth().prox(lambda, &z);
    let r: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a - b).collect();
    let hr = h.mul_vec(&r);
    Ok(r.iter().zip(&hr).map(|(ri, hi)| (ri - lambda * hi) / lambda).collect())
}
