//! Direct evaluation of the second-order Green's operator
//! `Gg(u) = -s(u)∫_0^u r g/w - r(u)∫_u^∞ s g/w + (r(0)/s(0)) s(u)∫_0^∞ s g/w`.

use std::sync::Arc;

use super::{GreensForm, GreensResult};
use crate::error::{Error, Result};
use crate::numerics::grid::{cumulate, Evaluator, GridFunction};
use crate::operator::fundamental::{FundamentalSystem, SolutionRef};
use crate::scalar::Real;

/// `Gg` from a stable solution `s`, an unstable solution `r` and their
/// Wronskian `w = s r' - s' r`.
pub fn greens_second_order<T: Real>(
    s: SolutionRef<T>,
    r: SolutionRef<T>,
    w: Evaluator<T>,
    g: &GridFunction<T>,
    nodes: Arc<Vec<T>>,
) -> Result<GreensResult<T>> {
    let lo = nodes[0];
    let (r2, w2, g2) = (r.clone(), w.clone(), g.clone());
    let rg: Evaluator<T> = Arc::new(move |u| r2.derivs(u, 0)[0] * g2.eval(u) / w2(u));
    let (s2, w2, g2) = (s.clone(), w.clone(), g.clone());
    let sg: Evaluator<T> = Arc::new(move |u| s2.derivs(u, 0)[0] * g2.eval(u) / w2(u));
    let a = cumulate(&GridFunction::from_fn(nodes.clone(), rg, true))?;
    let b = cumulate(&GridFunction::from_fn(nodes.clone(), sg, true))?;
    let total = b.total()?;
    let error = a.error + b.error;
    let (ai, bi) = (a.a, b.b()?.clone());
    let ratio = r.derivs(lo, 0)[0] / s.derivs(lo, 0)[0];
    let f: Evaluator<T> = Arc::new(move |u| {
        let sv = s.derivs(u, 0)[0];
        let rv = r.derivs(u, 0)[0];
        -sv * ai.eval(u) - rv * bi.eval(u) + ratio * sv * total
    });
    Ok(GreensResult {
        value: GridFunction::from_fn(nodes, f, true),
        form: GreensForm::SecondOrder,
        error,
        parts: None,
    })
}

/// [`greens_second_order`] for a two-solution system, with the Wronskian
/// computed from the solutions.
pub fn greens_second_order_system<T: Real>(
    fs: &FundamentalSystem<T>,
    nodes: Arc<Vec<T>>,
    g: &GridFunction<T>,
) -> Result<GreensResult<T>> {
    if fs.m != 1 || fs.n != 1 {
        return Err(Error::Unsupported("the second-order display needs m = n = 1".into()));
    }
    let (s, r) = (fs.solutions[0].clone(), fs.solutions[1].clone());
    let (s2, r2) = (s.clone(), r.clone());
    let w: Evaluator<T> = Arc::new(move |u| {
        let a = s2.derivs(u, 1);
        let b = r2.derivs(u, 1);
        a[0] * b[1] - a[1] * b[0]
    });
    greens_second_order(s, r, w, g, nodes)
}
