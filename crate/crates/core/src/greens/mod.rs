//! Successive Wronskians, cofactors and the Green's operator of the boundary
//! problem with `m` initial conditions and stability at infinity.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::grid::{Evaluator, GridFunction};
use crate::numerics::linalg::det;
use crate::operator::fundamental::FundamentalSystem;
use crate::scalar::Real;

mod collapsed;
mod factored;
mod second_order;

pub use collapsed::greens_collapsed;
pub use factored::greens_factored;
pub use second_order::{greens_second_order, greens_second_order_system};

/// Deliberate corruption of a table, for demonstrating that the probes fire.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    /// Flips the sign of the top Wronskian `W_{m+n}`.
    WronskianSign,
    /// Multiplies each `W_k` by `1 + amplitude·sin(17u + k)`.
    Perturb { amplitude: f64 },
}

/// All `W_k` and `cof(i, k)` at one point. Indices are zero-based:
/// `w[k]` is `W_k` with `w[0] = 1`, `cof[k][i]` is `cof(i+1, k)`.
#[derive(Clone, Debug)]
pub struct TablePoint<T> {
    pub w: Vec<T>,
    pub cof: Vec<Vec<T>>,
}

/// Successive Wronskians `W_k = W[t_1..t_k]` and the cofactors `cof(i, k)`
/// obtained by replacing column `i` of `W_k` with the `k`-th unit vector.
#[derive(Clone, Debug)]
pub struct WronskianTable<T: Real> {
    pub fs: FundamentalSystem<T>,
    pub nodes: Arc<Vec<T>>,
    pub fault: Option<Fault>,
}

impl<T: Real> WronskianTable<T> {
    /// Builds the table and checks that no `W_k` vanishes or changes sign on
    /// the grid.
    pub fn build(fs: &FundamentalSystem<T>, nodes: Arc<Vec<T>>) -> Result<Self> {
        let table = Self {
            fs: fs.clone(),
            nodes,
            fault: None,
        };
        table.check()?;
        Ok(table)
    }

    /// A copy with a fault injected; no checks are run.
    pub fn with_fault(&self, fault: Fault) -> Self {
        Self {
            fault: Some(fault),
            ..self.clone()
        }
    }

    pub fn order(&self) -> usize {
        self.fs.order()
    }

    fn check(&self) -> Result<()> {
        let n = self.order();
        let points: Vec<TablePoint<T>> = self.nodes.par_iter().map(|&u| self.point(u)).collect();
        for k in 1..=n {
            let mut sign = T::zero();
            for (p, &u) in points.iter().zip(self.nodes.iter()) {
                let w = p.w[k];
                if !w.is_finite() || w == T::zero() || (sign != T::zero() && w.signum() != sign) {
                    return Err(Error::SingularWronskian { k, u: u.to_f64_lossy() });
                }
                sign = w.signum();
            }
        }
        Ok(())
    }

    /// Everything at `u` from one evaluation of the fundamental matrix.
    pub fn point(&self, u: T) -> TablePoint<T> {
        let n = self.order();
        let a = self.fs.matrix(u);
        let sub = |rows: usize, cols: &[usize]| -> T {
            let k = cols.len();
            let mut m = Vec::with_capacity(k * k);
            for r in 0..rows {
                for &c in cols {
                    m.push(a[r * n + c]);
                }
            }
            det(&m, k)
        };
        let mut w = vec![T::one(); n + 1];
        let mut cof = vec![Vec::new(); n + 1];
        for k in 1..=n {
            let all: Vec<usize> = (0..k).collect();
            w[k] = sub(k, &all);
            cof[k] = (0..k)
                .map(|i| {
                    let cols: Vec<usize> = (0..k).filter(|&c| c != i).collect();
                    // expansion along the replaced column: entry 1 in row k
                    let sign = if (i + k + 1) % 2 == 0 { T::one() } else { -T::one() };
                    sign * sub(k - 1, &cols)
                })
                .collect();
        }
        if let Some(f) = self.fault {
            match f {
                Fault::WronskianSign => w[n] = -w[n],
                Fault::Perturb { amplitude } => {
                    for (k, wk) in w.iter_mut().enumerate().skip(1) {
                        let s = (T::lit(17.0) * u + T::from_usize_lossy(k)).sin();
                        *wk = *wk * (T::one() + T::lit(amplitude) * s);
                    }
                }
            }
        }
        TablePoint { w, cof }
    }

    pub fn w(&self, k: usize, u: T) -> T {
        self.point(u).w[k]
    }

    /// `cof(i, k)` with one-based `i ≤ k`.
    pub fn cof(&self, i: usize, k: usize, u: T) -> T {
        self.point(u).cof[k][i - 1]
    }

    /// `W_k` as a grid function.
    pub fn w_grid(&self, k: usize) -> GridFunction<T> {
        let t = self.clone();
        let f: Evaluator<T> = Arc::new(move |u| t.w(k, u));
        GridFunction::from_fn(self.nodes.clone(), f, true)
    }

    /// `cof(i, k)` as a grid function.
    pub fn cof_grid(&self, i: usize, k: usize) -> GridFunction<T> {
        let t = self.clone();
        let f: Evaluator<T> = Arc::new(move |u| t.cof(i, k, u));
        GridFunction::from_fn(self.nodes.clone(), f, true)
    }
}

/// Largest pointwise relative defect of
/// `(cof(i,k+1)/W_k)' = -cof(i,k)·W_{k+1}/W_k²` over the interior grid, with
/// the derivative by Richardson-extrapolated central differences.
pub fn sylvester_lemma_residual<T: Real>(table: &WronskianTable<T>, i: usize, k: usize) -> Result<T> {
    let n = table.order();
    if !(1 <= i && i <= k && k < n) {
        return Err(Error::Domain(format!("Sylvester probe needs 1 ≤ i ≤ k < {n}, got i = {i}, k = {k}")));
    }
    let f = |u: T| {
        let p = table.point(u);
        p.cof[k + 1][i - 1] / p.w[k]
    };
    let (lo, hi) = (table.fs.lo, table.nodes[table.nodes.len() - 1]);
    let worst = table
        .nodes
        .par_iter()
        .filter_map(|&u| {
            let h = T::lit(1e-4) * u.abs().max(T::one());
            if u - h < lo || u + h > hi {
                return None;
            }
            let d = |h: T| (f(u + h) - f(u - h)) / (h + h);
            let half = T::lit(0.5) * h;
            let deriv = (T::lit(4.0) * d(half) - d(h)) / T::lit(3.0);
            let p = table.point(u);
            let target = -p.cof[k][i - 1] * p.w[k + 1] / (p.w[k] * p.w[k]);
            let scale = deriv.abs() + target.abs();
            if !(scale > T::min_positive_value()) {
                return None;
            }
            Some((deriv - target).abs() / scale)
        })
        .reduce(|| T::zero(), |a, b| if b.is_nan() || b > a { b } else { a });
    Ok(worst)
}

/// Largest Sylvester residual over all admissible `(i, k)`.
pub fn sylvester_max_residual<T: Real>(table: &WronskianTable<T>) -> Result<T> {
    let n = table.order();
    let mut worst = T::zero();
    for k in 1..n {
        for i in 1..=k {
            let r = sylvester_lemma_residual(table, i, k)?;
            if r.is_nan() || r > worst {
                worst = r;
            }
        }
    }
    Ok(worst)
}

/// Which representation produced a result.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GreensForm {
    Collapsed,
    Factored,
    SecondOrder,
}

/// The constants of the collapsed representation.
#[derive(Clone, Debug)]
pub struct GreensOperator<T: Real> {
    pub table: WronskianTable<T>,
    /// `alpha[j][i] = α_{i+1}(j+1) = cof(i+1, m+j+1)(lo) / W_{m+j}(lo)`.
    pub alpha: Vec<Vec<T>>,
    /// Coefficients of `ŝ_j` over `s_1..s_m`.
    pub shat: Vec<Vec<T>>,
    /// Coefficients of `s̃_j` over `s_1..s_m`, by forward substitution.
    pub stilde: Vec<Vec<T>>,
}

impl<T: Real> GreensOperator<T> {
    pub fn new(fs: &FundamentalSystem<T>, nodes: Arc<Vec<T>>) -> Result<Self> {
        Ok(Self::from_table(WronskianTable::build(fs, nodes)?))
    }

    pub fn from_table(table: WronskianTable<T>) -> Self {
        let (m, n) = (table.fs.m, table.fs.n);
        // constants at the domain start, which is 0 unless a singular premium
        // forces a later start
        let p = table.point(table.fs.lo);
        let alpha: Vec<Vec<T>> = (1..=n)
            .map(|j| (0..m + j).map(|i| p.cof[m + j][i] / p.w[m + j - 1]).collect())
            .collect();
        let shat: Vec<Vec<T>> = alpha.iter().map(|a| a[..m].to_vec()).collect();
        let mut stilde: Vec<Vec<T>> = Vec::with_capacity(n);
        for j in 0..n {
            let mut c = shat[j].clone();
            for (k, prev) in stilde.iter().enumerate() {
                let a = alpha[j][m + k];
                for (ci, pi) in c.iter_mut().zip(prev) {
                    *ci -= a * *pi;
                }
            }
            stilde.push(c);
        }
        Self {
            table,
            alpha,
            shat,
            stilde,
        }
    }

    pub fn fs(&self) -> &FundamentalSystem<T> {
        &self.table.fs
    }

    pub fn nodes(&self) -> Arc<Vec<T>> {
        self.table.nodes.clone()
    }

    /// `K_i = cof(i, m+n) / W_{m+n}` for all `i` at `u`.
    pub fn kernels(&self, u: T) -> Vec<T> {
        let n = self.table.order();
        let p = self.table.point(u);
        p.cof[n].iter().map(|&c| c / p.w[n]).collect()
    }

    /// `s̃_j^{(k)}(u)` for `k ≤ order`, zero-based `j`.
    pub fn stilde_derivs(&self, j: usize, u: T, order: usize) -> Vec<T> {
        let mut out = vec![T::zero(); order + 1];
        for (l, s) in self.fs().stable().iter().enumerate() {
            let d = s.derivs(u, order);
            for k in 0..=order {
                out[k] += self.stilde[j][l] * d[k];
            }
        }
        out
    }

    /// `s̃_j` from Cramer's rule on the lower-triangular system instead of
    /// the recursion; an independent check of [`Self::stilde`].
    pub fn stilde_by_determinants(&self) -> Vec<Vec<T>> {
        let (m, n) = (self.fs().m, self.fs().n);
        let mut t = vec![T::zero(); n * n];
        for j in 0..n {
            for k in 0..n {
                t[j * n + k] = match j.cmp(&k) {
                    std::cmp::Ordering::Greater => self.alpha[j][m + k],
                    std::cmp::Ordering::Equal => T::one(),
                    std::cmp::Ordering::Less => T::zero(),
                };
            }
        }
        let dt = det(&t, n);
        (0..n)
            .map(|j| {
                (0..m)
                    .map(|l| {
                        let mut tj = t.clone();
                        for r in 0..n {
                            tj[r * n + j] = self.shat[r][l];
                        }
                        det(&tj, n) / dt
                    })
                    .collect()
            })
            .collect()
    }
}

/// `Gg` with everything needed to differentiate it analytically.
#[derive(Clone)]
pub struct GreensResult<T: Real> {
    pub value: GridFunction<T>,
    pub form: GreensForm,
    /// Accumulated quadrature error estimate.
    pub error: T,
    parts: Option<Arc<collapsed::Parts<T>>>,
}

impl<T: Real> std::fmt::Debug for GreensResult<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GreensResult")
            .field("form", &self.form)
            .field("error", &self.error)
            .field("value", &self.value)
            .finish()
    }
}

impl<T: Real> GreensResult<T> {
    pub fn eval(&self, u: T) -> T {
        self.value.eval(u)
    }

    /// `(Gg)^{(k)}(u)` for `k ≤ order ≤ m+n`, differentiating the collapsed
    /// representation term by term.
    pub fn derivs(&self, u: T, order: usize) -> Result<Vec<T>> {
        match &self.parts {
            Some(p) => p.derivs(u, order),
            None => Err(Error::Unsupported(format!(
                "analytic derivatives are available for the collapsed form, not {:?}",
                self.form
            ))),
        }
    }

    fn parts(&self) -> Result<&collapsed::Parts<T>> {
        self.parts.as_deref().ok_or_else(|| {
            Error::Unsupported(format!("this quantity needs the collapsed form, not {:?}", self.form))
        })
    }

    /// The coefficient of each stable solution in `Gg` as `u → ∞`:
    /// `∫_0^∞ K_i g - Σ_j s̃_j[i] ∫_0^∞ K_{m+j} g`.
    pub fn stable_coefficients(&self) -> Result<Vec<T>> {
        self.parts()?.stable_coefficients()
    }

    /// `Gg(u) - Σ_i c_i t_i(u)` with `c` the stable coefficients.
    pub fn remainder(&self, u: T) -> Result<T> {
        self.parts()?.remainder(u)
    }

    /// `sup |T(Gg) - g| / sup |g|` over `nodes`.
    pub fn operator_residual(&self, ode: &crate::operator::LinearODE<T>, g: &GridFunction<T>, nodes: &[T]) -> Result<T> {
        let n = ode.order();
        let mut worst = T::zero();
        let mut gmax = T::zero();
        for &u in nodes {
            let d = self.derivs(u, n)?;
            let gv = g.eval(u);
            worst = worst.max((ode.apply(u, &d) - gv).abs());
            gmax = gmax.max(gv.abs());
        }
        if gmax == T::zero() {
            return Ok(worst);
        }
        Ok(worst / gmax)
    }
}

#[cfg(test)]
mod tests;
