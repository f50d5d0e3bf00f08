//! The nested form `G = (W_1/W_0) C_1 (W_0 W_2/W_1²) C_2 ⋯ C_{m+n} (W_{m+n-1}/W_{m+n})`,
//! applied right to left. Independent of the collapsed constants.

use std::sync::Arc;

use super::{GreensForm, GreensResult, WronskianTable};
use crate::error::Result;
use crate::numerics::grid::{cumulate, cumulate_prefix, Evaluator, GridFunction};
use crate::operator::fundamental::FundamentalSystem;
use crate::scalar::Real;

/// `Gg` by nested first-order factors.
pub fn greens_factored<T: Real>(fs: &FundamentalSystem<T>, nodes: Arc<Vec<T>>, g: &GridFunction<T>) -> Result<GreensResult<T>> {
    let table = WronskianTable::build(fs, nodes.clone())?;
    let n = fs.order();
    let (t, gg) = (table.clone(), g.clone());
    let first: Evaluator<T> = Arc::new(move |u| {
        let p = t.point(u);
        p.w[n - 1] / p.w[n] * gg.eval(u)
    });
    let mut phi = GridFunction::from_fn(nodes.clone(), first, true);
    let mut error = T::zero();
    for i in (1..=n).rev() {
        let cum = if i <= fs.m { cumulate_prefix(&phi)? } else { cumulate(&phi)? };
        error += cum.error;
        let (integral, sign) = if i <= fs.m {
            (cum.a, T::one())
        } else {
            (cum.b()?.clone(), -T::one())
        };
        let t = table.clone();
        let next: Evaluator<T> = Arc::new(move |u| {
            let p = t.point(u);
            let mult = if i >= 2 {
                p.w[i - 2] * p.w[i] / (p.w[i - 1] * p.w[i - 1])
            } else {
                p.w[1]
            };
            sign * integral.eval(u) * mult
        });
        phi = GridFunction::from_fn(nodes.clone(), next, true);
    }
    Ok(GreensResult {
        value: phi,
        form: GreensForm::Factored,
        error,
        parts: None,
    })
}
