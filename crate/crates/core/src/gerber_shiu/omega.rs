//! `ω(u) = ∫_u^∞ w(u, y - u) f_X(y) dy`, the expected penalty of a claim that
//! ruins from surplus `u`.

use std::sync::Arc;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::model::{Penalty, RiskModel};
use crate::numerics::grid::GridFunction;
use crate::numerics::jet::Jet;
use crate::numerics::quadrature::{Quadrature, Upper};
use crate::scalar::Real;

/// Derivatives `S^{(j)}(u)`, `j = 0..=order`, of the claim survival function.
fn survival_derivs<T: Real>(terms: &[(Complex<T>, Complex<T>)], u: T, order: usize) -> Vec<T> {
    (0..=order)
        .map(|j| {
            terms
                .iter()
                .map(|&(a, r)| {
                    let e = (r * u).exp();
                    // S = Σ -a/r e^{ru}, S^{(j)} = Σ -a r^{j-1} e^{ru}
                    let v = if j == 0 { -(a / r) * e } else { -a * r.powi(j as i32 - 1) * e };
                    v.re
                })
                .sum()
        })
        .collect()
}

fn custom_omega<T: Real>(model: &RiskModel<T>, u: T) -> Result<T> {
    let law = model.claims.rational();
    let terms = law.density_terms()?;
    let q = Quadrature::relative(T::lit(1e-12));
    q.integrate(
        |z| {
            let y = u + z;
            let dens: T = terms.iter().map(|&(a, r)| (a * (r * y).exp()).re).sum();
            model.penalty.eval(u, z) * dens
        },
        T::zero(),
        Upper::Infinity,
    )
    .map(|r| r.value)
    .map_err(|e| match e {
        Error::NonConvergence { .. } => Error::Divergence(format!("ω({u}) does not converge for the custom penalty")),
        e => e,
    })
}

/// Jet of `ω` at `u`.
pub fn omega_jet<T: Real>(model: &RiskModel<T>, u: T, order: usize) -> Result<Jet<T>> {
    let law = model.claims.rational();
    let terms = law.density_terms()?;
    match &model.penalty {
        Penalty::RuinIndicator => Ok(Jet::from_derivatives(&survival_derivs(&terms, u, order))),
        Penalty::ExpSurplus { nu } => {
            let s = Jet::from_derivatives(&survival_derivs(&terms, u, order));
            let e = Jet::variable(u, order).scale(-*nu).exp();
            Ok(s * e)
        }
        Penalty::Custom { .. } => {
            if order > 2 {
                return Err(Error::Unsupported(
                    "custom penalties provide ω derivatives up to second order only".into(),
                ));
            }
            let h = T::lit(1e-4) * u.abs().max(T::one());
            let f0 = custom_omega(model, u)?;
            let mut d = vec![f0];
            if order >= 1 {
                let fp = custom_omega(model, u + h)?;
                let fm = custom_omega(model, (u - h).max(T::zero()))?;
                let span = u + h - (u - h).max(T::zero());
                d.push((fp - fm) / span);
                if order >= 2 {
                    d.push((fp - T::lit(2.0) * f0 + fm) / (h * h));
                }
            }
            Ok(Jet::from_derivatives(&d))
        }
    }
}

/// `ω` on a grid, keeping the closed form as evaluator where available.
pub fn omega<T: Real>(model: &RiskModel<T>, nodes: Arc<Vec<T>>) -> Result<GridFunction<T>> {
    // surface construction errors eagerly
    omega_jet(model, nodes[0], 0)?;
    let m = model.clone();
    let eval = Arc::new(move |u: T| omega_jet(&m, u, 0).map(|j| j.value()).unwrap_or_else(|_| T::nan()));
    Ok(GridFunction::from_fn(nodes, eval, true))
}
