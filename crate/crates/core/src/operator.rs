//! The variable-coefficient differential operator of the Gerber–Shiu equation
//! and its right-hand side.
//!
//! With `L_X` and `L_τ` the monic denominators of the claim and interclaim
//! Laplace transforms, the operator is
//! `T = L_X(D) L_τ*(p D - δ) - α_0 β_0` with `L*(x) = L(-x)`. It is expanded
//! with coefficient jets and divided by its leading coefficient `(-1)^n p^n`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::gerber_shiu::omega::omega_jet;
use crate::model::RiskModel;
use crate::numerics::grid::GridFunction;
use crate::numerics::jet::Jet;
use crate::scalar::Real;

pub mod fundamental;

/// Coefficient jets `c_0..c_{N-1}` of the monic operator at `u`, each of the
/// requested order.
pub type CoefficientFn<T> = Arc<dyn Fn(T, usize) -> Vec<Jet<T>> + Send + Sync>;

/// Monic linear ODE `D^N y + Σ c_k(u) D^k y = g`.
#[derive(Clone)]
pub struct LinearODE<T> {
    /// Number of stable solutions.
    pub m: usize,
    /// Number of unstable solutions.
    pub n: usize,
    pub lo: T,
    pub hi: T,
    pub source: &'static str,
    coeffs: CoefficientFn<T>,
}

impl<T: Real> fmt::Debug for LinearODE<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LinearODE")
            .field("order", &self.order())
            .field("m", &self.m)
            .field("n", &self.n)
            .field("domain", &(self.lo, self.hi))
            .field("source", &self.source)
            .finish()
    }
}

impl<T: Real> LinearODE<T> {
    pub fn new(m: usize, n: usize, lo: T, hi: T, source: &'static str, coeffs: CoefficientFn<T>) -> Self {
        Self {
            m,
            n,
            lo,
            hi,
            source,
            coeffs,
        }
    }

    /// Constant coefficients `c_0..c_{N-1}`.
    pub fn constant(c: Vec<T>, m: usize, lo: T, hi: T) -> Self {
        let n = c.len() - m;
        let f: CoefficientFn<T> = Arc::new(move |_, k| c.iter().map(|&v| Jet::constant(v, k)).collect());
        Self::new(m, n, lo, hi, "constant", f)
    }

    pub fn order(&self) -> usize {
        self.m + self.n
    }

    pub fn coefficient_jets(&self, u: T, order: usize) -> Vec<Jet<T>> {
        (self.coeffs)(u, order)
    }

    pub fn coefficients(&self, u: T) -> Vec<T> {
        self.coefficient_jets(u, 0).iter().map(Jet::value).collect()
    }

    /// `(T y)(u)` from the derivatives `y, y', …, y^{(N)}`.
    pub fn apply(&self, u: T, derivs: &[T]) -> T {
        let c = self.coefficients(u);
        let n = self.order();
        let mut acc = derivs[n];
        for k in 0..n {
            acc += c[k] * derivs[k];
        }
        acc
    }

    /// `|y^{(N)}| + Σ |c_k y^{(k)}|`, the natural scale for residuals.
    pub fn term_scale(&self, u: T, derivs: &[T]) -> T {
        let c = self.coefficients(u);
        let n = self.order();
        let mut acc = derivs[n].abs();
        for k in 0..n {
            acc += (c[k] * derivs[k]).abs();
        }
        acc
    }

    /// Frozen-coefficient roots `ϱ_1 ≤ ϱ_2` of `x² + c_1 x + c_0` (order 2).
    pub fn characteristic_roots(&self, u: T) -> Result<(T, T)> {
        if self.order() != 2 {
            return Err(Error::Unsupported(format!(
                "characteristic roots are wired for order 2, not {}",
                self.order()
            )));
        }
        let c = self.coefficients(u);
        quadratic_roots(c[1], c[0])
    }
}

/// Real roots of `x² + b x + c`, sorted, computed without cancellation.
pub fn quadratic_roots<T: Real>(b: T, c: T) -> Result<(T, T)> {
    let d = b * b - T::lit(4.0) * c;
    if d < T::zero() {
        return Err(Error::Domain(format!("complex characteristic roots (discriminant {d})")));
    }
    let s = d.sqrt();
    let q = -T::lit(0.5) * (b + if b >= T::zero() { s } else { -s });
    let (r1, r2) = if q == T::zero() { (T::zero(), -b) } else { (q, c / q) };
    Ok((r1.min(r2), r1.max(r2)))
}

fn binom<T: Real>(n: usize, k: usize) -> T {
    let mut r = T::one();
    for i in 0..k {
        r = r * T::from_usize_lossy(n - i) / T::from_usize_lossy(i + 1);
    }
    r
}

fn add_into<T: Real>(slot: &mut Option<Jet<T>>, term: Jet<T>) {
    *slot = Some(match slot.take() {
        Some(prev) => prev + term,
        None => term,
    });
}

/// Composition of differential operators given by coefficient jets:
/// `(a D^i)(b D^j) = a Σ_l C(i,l) b^{(l)} D^{i-l+j}`.
fn compose<T: Real>(a: &[Jet<T>], b: &[Jet<T>]) -> Vec<Jet<T>> {
    let deg = a.len() + b.len() - 2;
    let mut out: Vec<Option<Jet<T>>> = vec![None; deg + 1];
    for (i, ai) in a.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            let mut d = bj.clone();
            for l in 0..=i {
                if l > 0 {
                    d = d.differentiate();
                }
                let term = (ai.clone() * d.clone()).scale(binom(i, l));
                add_into(&mut out[i - l + j], term);
            }
        }
    }
    out.into_iter()
        .map(|j| j.unwrap_or_else(|| Jet::constant(T::zero(), 0)))
        .collect()
}

/// Unnormalized coefficients of `T` at `u` (coefficient of `D^k` at index k),
/// each as a jet of the given order.
fn expanded_operator<T: Real>(model: &RiskModel<T>, u: T, order: usize) -> Vec<Jet<T>> {
    let beta = model.claims.rational().poly();
    let alpha = model.interclaims.rational().poly();
    let (m, n) = (beta.len() - 1, alpha.len() - 1);
    let big = order + m + n + 1;
    let p = model.premium.jet(u, big);
    let cst = |v: T| Jet::constant(v, big);
    // p D - δ
    let base = vec![cst(-model.delta), p];
    // L_τ*(pD - δ) = Σ_k (-1)^k α_k (pD - δ)^k
    let mut power = vec![cst(T::one())];
    let mut lstar: Vec<Option<Jet<T>>> = vec![None; n + 1];
    for (k, &ak) in alpha.iter().enumerate() {
        if k > 0 {
            power = compose(&base, &power);
        }
        let sign = if k % 2 == 0 { T::one() } else { -T::one() };
        for (j, c) in power.iter().enumerate() {
            add_into(&mut lstar[j], c.scale(sign * ak));
        }
    }
    let lstar: Vec<Jet<T>> = lstar.into_iter().map(|j| j.unwrap_or_else(|| cst(T::zero()))).collect();
    let lx: Vec<Jet<T>> = beta.iter().map(|&b| cst(b)).collect();
    let mut full = compose(&lx, &lstar);
    full[0] = full[0].add_scalar(-alpha[0] * beta[0]);
    full.into_iter().map(|j| j.truncate(order)).collect()
}

/// `c_1 = μ + p'/p - (λ+δ)/p`, `c_0 = -δμ/p` for exponential laws.
fn exp_exp_coefficients<T: Real>(model: &RiskModel<T>, lambda: T, mu: T, u: T, order: usize) -> Vec<Jet<T>> {
    let p = model.premium.jet(u, order + 1);
    let dp = p.differentiate();
    let p = p.truncate(order);
    let c1 = (dp + p.scale(mu)).add_scalar(-(lambda + model.delta)) / p.clone();
    let c0 = p.recip().scale(-model.delta * mu);
    vec![c0, c1]
}

/// Monic coefficients from the general symbolic expansion, regardless of the
/// laws. Used directly for non-exponential laws and as a cross-check.
pub fn build_operator_general<T: Real>(model: &RiskModel<T>) -> LinearODE<T> {
    let m = model.claims.order();
    let n = model.interclaims.order();
    let mm = model.clone();
    let f: CoefficientFn<T> = Arc::new(move |u, k| {
        let full = expanded_operator(&mm, u, k);
        let lead = full[m + n].clone();
        full[..m + n].iter().map(|c| c.clone() / lead.clone()).collect()
    });
    LinearODE::new(m, n, model.domain_start(), model.u_max, "general_expansion", f)
}

/// The monic operator of the Gerber–Shiu equation for `model`.
pub fn build_operator<T: Real>(model: &RiskModel<T>) -> Result<LinearODE<T>> {
    model.validate()?;
    match model.exp_rates() {
        Some((lambda, mu)) => {
            let mm = model.clone();
            let f: CoefficientFn<T> = Arc::new(move |u, k| exp_exp_coefficients(&mm, lambda, mu, u, k));
            Ok(LinearODE::new(1, 1, model.domain_start(), model.u_max, "exp_exp", f))
        }
        None => Ok(build_operator_general(model)),
    }
}

/// `g(u) = α_0 L_X(D) ω(u) / lead(u)` at a point.
pub fn rhs_value<T: Real>(model: &RiskModel<T>, u: T) -> Result<T> {
    Ok(rhs_jet(model, u, 0)?.value())
}

/// Jet of the right-hand side `g` at `u`.
pub fn rhs_jet<T: Real>(model: &RiskModel<T>, u: T, order: usize) -> Result<Jet<T>> {
    let beta = model.claims.rational().poly();
    let alpha0 = model.interclaims.rational().lower[0];
    let m = beta.len() - 1;
    let w = omega_jet(model, u, order + m)?;
    // L_X(D) ω
    let mut lw = Jet::constant(T::zero(), order);
    let mut d = w;
    for (i, &b) in beta.iter().enumerate() {
        if i > 0 {
            d = d.differentiate();
        }
        lw = lw + d.clone().truncate(order).scale(b);
    }
    let lead = match model.exp_rates() {
        Some(_) => model.premium.jet(u, order).scale(-T::one()),
        None => {
            let full = expanded_operator(model, u, order);
            full[full.len() - 1].clone()
        }
    };
    Ok(lw.scale(alpha0) / lead)
}

/// The right-hand side on a grid. Exactly zero for the ruin indicator, whose
/// `ω` is annihilated by `L_X(D)`.
pub fn build_rhs<T: Real>(model: &RiskModel<T>, nodes: Arc<Vec<T>>) -> Result<GridFunction<T>> {
    if matches!(model.penalty, crate::model::Penalty::RuinIndicator) {
        return Ok(GridFunction::zero(nodes));
    }
    rhs_value(model, nodes[0])?;
    let mm = model.clone();
    let eval = Arc::new(move |u: T| rhs_value(&mm, u).unwrap_or_else(|_| T::nan()));
    Ok(GridFunction::from_fn(nodes, eval, true))
}

/// Frozen-coefficient roots of the operator at `u`.
pub fn characteristic_roots<T: Real>(ode: &LinearODE<T>, u: T) -> Result<(T, T)> {
    ode.characteristic_roots(u)
}
