//! The single-integration representation
//! `G = Σ t_i C_i K_i - Σ s̃_j F K_{m+j}` with `K_i = cof(i, m+n)/W_{m+n}`,
//! `C_i = A` for stable and `-B` for unstable solutions.

use std::sync::Arc;

use super::{GreensForm, GreensOperator, GreensResult};
use crate::error::{Error, Result};
use crate::numerics::grid::{cumulate, Evaluator, GridFunction, Tail};
use crate::operator::fundamental::FundamentalSystem;
use crate::scalar::Real;

pub(super) struct Parts<T: Real> {
    fs: FundamentalSystem<T>,
    /// `(∫ h_i, sign)` with `A` for stable and `B` for unstable indices.
    integrals: Vec<(GridFunction<T>, T)>,
    f_totals: Vec<T>,
    stilde: Vec<Vec<T>>,
    g: GridFunction<T>,
    /// `(B[K_i g], ∫_0^∞ K_i g)` for the stable indices, when `K_i g` decays.
    stable_tails: Vec<Option<(GridFunction<T>, T)>>,
}

impl<T: Real> Parts<T> {
    fn value(&self, u: T) -> T {
        self.derivs(u, 0).map(|d| d[0]).unwrap_or_else(|_| T::nan())
    }

    pub(super) fn derivs(&self, u: T, order: usize) -> Result<Vec<T>> {
        let n = self.fs.order();
        if order > n {
            return Err(Error::Unsupported(format!(
                "derivatives of Gg beyond order {n} need derivatives of g"
            )));
        }
        let cols = self.fs.columns(u, order);
        let ints: Vec<T> = self.integrals.iter().map(|(f, s)| *s * f.eval(u)).collect();
        let mut out = vec![T::zero(); order + 1];
        for (k, o) in out.iter_mut().enumerate() {
            let mut acc = T::zero();
            for (c, &v) in cols.iter().zip(&ints) {
                acc += c[k] * v;
            }
            for (coef, &ft) in self.stilde.iter().zip(&self.f_totals) {
                for (l, &cl) in coef.iter().enumerate() {
                    acc -= cl * cols[l][k] * ft;
                }
            }
            // the integral limits only contribute at the top order, where
            // Σ t_i^{(n-1)} K_i = 1
            if k == n {
                acc += self.g.eval(u);
            }
            *o = acc;
        }
        Ok(out)
    }

    /// `∫_0^∞ K_i g - Σ_j s̃_j[i] F_j` for each stable `i`.
    pub(super) fn stable_coefficients(&self) -> Result<Vec<T>> {
        (0..self.fs.m)
            .map(|i| {
                let (_, total) = self.stable_tails[i]
                    .as_ref()
                    .ok_or_else(|| Error::Tail(format!("K_{} g is not integrable at infinity", i + 1)))?;
                let mut v = *total;
                for (coef, &ft) in self.stilde.iter().zip(&self.f_totals) {
                    v -= coef[i] * ft;
                }
                Ok(v)
            })
            .collect()
    }

    /// `-Σ_i t_i(u) ∫_u^∞ K_i g`, i.e. `Gg` minus its stable-solution part,
    /// computed without cancellation.
    pub(super) fn remainder(&self, u: T) -> Result<T> {
        let cols = self.fs.columns(u, 0);
        let mut acc = T::zero();
        for (i, c) in cols.iter().enumerate() {
            let b = if i < self.fs.m {
                let (b, _) = self.stable_tails[i]
                    .as_ref()
                    .ok_or_else(|| Error::Tail(format!("K_{} g is not integrable at infinity", i + 1)))?;
                b.eval(u)
            } else {
                self.integrals[i].0.eval(u)
            };
            acc -= c[0] * b;
        }
        Ok(acc)
    }
}

/// `Gg` by the collapsed representation.
pub fn greens_collapsed<T: Real>(op: &GreensOperator<T>, g: &GridFunction<T>) -> Result<GreensResult<T>> {
    let fs = op.fs().clone();
    let (m, n) = (fs.m, fs.n);
    let nodes = op.nodes();
    let mut integrals = Vec::with_capacity(m + n);
    let mut f_totals = Vec::with_capacity(n);
    let mut error = T::zero();
    let mut stable_tails = Vec::with_capacity(m);
    let zero = matches!(g.tail(), Tail::Zero) && g.values().iter().all(|v| *v == T::zero()) && g.has_exact();
    for i in 0..m + n {
        if zero {
            let z = GridFunction::zero(nodes.clone());
            if i >= m {
                f_totals.push(T::zero());
            } else {
                stable_tails.push(Some((z.clone(), T::zero())));
            }
            integrals.push((z, if i < m { T::one() } else { -T::one() }));
            continue;
        }
        let (o, gg) = (op.clone(), g.clone());
        let h: Evaluator<T> = Arc::new(move |u| o.kernels(u)[i] * gg.eval(u));
        let h = GridFunction::from_fn(nodes.clone(), h, true);
        let cum = cumulate(&h)?;
        error += cum.error;
        if i < m {
            stable_tails.push(cum.b.clone().zip(cum.total));
            integrals.push((cum.a, T::one()));
        } else {
            f_totals.push(cum.total()?);
            integrals.push((cum.b()?.clone(), -T::one()));
        }
    }
    let parts = Arc::new(Parts {
        fs,
        integrals,
        f_totals,
        stilde: op.stilde.clone(),
        g: g.clone(),
        stable_tails,
    });
    let p = parts.clone();
    let value = GridFunction::from_fn(nodes, Arc::new(move |u| p.value(u)), true);
    Ok(GreensResult {
        value,
        form: GreensForm::Collapsed,
        error,
        parts: Some(parts),
    })
}
