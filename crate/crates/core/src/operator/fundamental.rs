//! Fundamental systems `t_1..t_{m+n} = s_1..s_m, r_1..r_n` of the homogeneous
//! equation, normalized to `t_i(lo) = 1` for the second-order paths.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::asymptotics::fedoryuk::corrected_log_derivatives;
use crate::error::{Error, Result};
use crate::model::{PremiumFunction, RiskModel};
use crate::numerics::grid::{cumulate, default_nodes, GridFunction, DEFAULT_GRID_NODES};
use crate::numerics::hypergeometric::{kummer_m_derivs_scaled, kummer_u_derivs};
use crate::numerics::jet::Jet;
use crate::numerics::linalg::det;
use crate::numerics::ode::Dopri5;
use crate::operator::LinearODE;
use crate::scalar::Real;

/// A solution of the homogeneous equation, evaluable with derivatives.
pub trait Solution<T: Real>: Send + Sync {
    /// `t, t', …, t^{(order)}` at `u`.
    fn derivs(&self, u: T, order: usize) -> Vec<T>;

    /// Whether values beyond the construction domain are exact rather than
    /// extrapolated from a fitted tail.
    fn exact_beyond(&self) -> bool {
        true
    }

    fn label(&self) -> String;
}

pub type SolutionRef<T> = Arc<dyn Solution<T>>;

/// How a system was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemPath {
    /// `δ = 0`: `r ≡ 1` and `s` as an integral.
    DiscountFree,
    /// Linear premium: Kummer `U` and `M` with a power-exponential prefactor.
    Kummer,
    /// Constant premium with `δ > 0`: two exponentials.
    ConstantPremium,
    /// Shooting with an adaptive Runge–Kutta integrator.
    Numeric,
    /// Given by the caller.
    Supplied,
}

#[derive(Clone)]
pub struct FundamentalSystem<T: Real> {
    pub m: usize,
    pub n: usize,
    pub solutions: Vec<SolutionRef<T>>,
    pub lo: T,
    pub hi: T,
    pub path: SystemPath,
    /// Raw values `t_i(lo)` removed by the normalization.
    pub scales: Vec<T>,
}

impl<T: Real> fmt::Debug for FundamentalSystem<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FundamentalSystem")
            .field("m", &self.m)
            .field("n", &self.n)
            .field("path", &self.path)
            .field("domain", &(self.lo, self.hi))
            .field("solutions", &self.solutions.iter().map(|s| s.label()).collect::<Vec<_>>())
            .finish()
    }
}

/// Outcome of [`FundamentalSystem::verify`].
#[derive(Clone, Debug, Serialize)]
pub struct Verification<T> {
    /// `|s_i(hi)| / |s_i(lo)|` per stable solution.
    pub stable_decay: Vec<T>,
    /// `|r_j(hi)| / |r_j(lo)|` per unstable solution.
    pub unstable_growth: Vec<T>,
    /// `min |W_N| / max |W_N|` over the grid.
    pub wronskian_spread: T,
    /// Largest relative ODE residual, when an operator was supplied.
    pub residual: Option<T>,
}

impl<T: Real> FundamentalSystem<T> {
    pub fn new(m: usize, n: usize, lo: T, hi: T, path: SystemPath, solutions: Vec<SolutionRef<T>>) -> Self {
        let scales = vec![T::one(); solutions.len()];
        Self {
            m,
            n,
            solutions,
            lo,
            hi,
            path,
            scales,
        }
    }

    pub fn order(&self) -> usize {
        self.m + self.n
    }

    pub fn stable(&self) -> &[SolutionRef<T>] {
        &self.solutions[..self.m]
    }

    pub fn unstable(&self) -> &[SolutionRef<T>] {
        &self.solutions[self.m..]
    }

    /// `cols[i][k] = t_i^{(k)}(u)` for `k ≤ order`.
    pub fn columns(&self, u: T, order: usize) -> Vec<Vec<T>> {
        self.solutions.iter().map(|s| s.derivs(u, order)).collect()
    }

    /// The Wronskian matrix at `u`, row-major with row `k` holding the
    /// `k`-th derivatives.
    pub fn matrix(&self, u: T) -> Vec<T> {
        let n = self.order();
        let cols = self.columns(u, n - 1);
        let mut a = vec![T::zero(); n * n];
        for (i, c) in cols.iter().enumerate() {
            for k in 0..n {
                a[k * n + i] = c[k];
            }
        }
        a
    }

    /// Multiplies `t_i` by `factors[i]`.
    pub fn rescaled(&self, factors: &[T]) -> Self {
        assert_eq!(factors.len(), self.order(), "one factor per solution");
        let solutions = self
            .solutions
            .iter()
            .zip(factors)
            .map(|(s, &f)| {
                Arc::new(Scaled {
                    inner: s.clone(),
                    factor: f,
                }) as SolutionRef<T>
            })
            .collect();
        let scales = self.scales.iter().zip(factors).map(|(&s, &f)| s / f).collect();
        Self {
            solutions,
            scales,
            ..self.clone()
        }
    }

    /// Largest `|T t| / (Σ|terms| + floor)` over solutions and nodes.
    pub fn residual(&self, ode: &LinearODE<T>, nodes: &[T]) -> T {
        let n = self.order();
        let mut worst = T::zero();
        for s in &self.solutions {
            for &u in nodes {
                let d = s.derivs(u, n);
                let r = ode.apply(u, &d).abs() / (ode.term_scale(u, &d) + T::min_positive_value());
                if r.is_nan() {
                    return T::infinity();
                }
                worst = worst.max(r);
            }
        }
        worst
    }

    /// Checks the stability tags and that `W_N` keeps one sign on the grid.
    pub fn verify(&self, ode: Option<&LinearODE<T>>, nodes: &[T]) -> Result<Verification<T>> {
        let mut stable_decay = Vec::new();
        for (i, s) in self.stable().iter().enumerate() {
            let a = s.derivs(self.lo, 0)[0].abs();
            let b = s.derivs(self.hi, 1);
            let ratio = b[0].abs() / a;
            // small at the end of the grid, or still heading down exponentially
            let heading_down = b[0] != T::zero() && b[1] / b[0] < T::zero();
            if !(ratio <= T::lit(1e-6) || (ratio < T::one() && heading_down)) {
                return Err(Error::Stability(format!(
                    "stable solution s_{} does not decay: |s(hi)|/|s(lo)| = {ratio}",
                    i + 1
                )));
            }
            stable_decay.push(ratio);
        }
        let mut unstable_growth = Vec::new();
        for (j, r) in self.unstable().iter().enumerate() {
            let a = r.derivs(self.lo, 0)[0].abs();
            let b = r.derivs(self.hi, 0)[0].abs();
            let ratio = b / a;
            if !(ratio > T::lit(1e-6)) {
                return Err(Error::Stability(format!(
                    "unstable solution r_{} vanishes at infinity: |r(hi)|/|r(lo)| = {ratio}",
                    j + 1
                )));
            }
            unstable_growth.push(ratio);
        }
        let n = self.order();
        let (mut wmin, mut wmax) = (T::infinity(), T::zero());
        let mut sign = T::zero();
        for &u in nodes {
            let w = det(&self.matrix(u), n);
            if !w.is_finite() || w == T::zero() || (sign != T::zero() && w.signum() != sign) {
                return Err(Error::SingularWronskian {
                    k: n,
                    u: u.to_f64_lossy(),
                });
            }
            sign = w.signum();
            wmin = wmin.min(w.abs());
            wmax = wmax.max(w.abs());
        }
        let residual = ode.map(|o| self.residual(o, nodes));
        if let Some(r) = residual {
            if !(r <= T::lit(1e-7)) {
                return Err(Error::Stability(format!("solutions miss the equation: residual {r:?}")));
            }
        }
        Ok(Verification {
            stable_decay,
            unstable_growth,
            wronskian_spread: wmin / wmax,
            residual,
        })
    }

    /// Reads a system from a CSV with columns `u, t1, t1', …` and a JSON
    /// sidecar `<path>.json` holding `{m, n, tails}`.
    pub fn from_csv(path: &Path) -> Result<Self> {
        #[derive(Deserialize)]
        struct Sidecar {
            m: usize,
            n: usize,
            #[serde(default)]
            #[allow(dead_code)]
            tails: Option<serde_json::Value>,
        }
        let side_path = path.with_extension("json");
        let side: Sidecar = serde_json::from_str(&std::fs::read_to_string(&side_path)?)
            .map_err(|e| Error::Parse(format!("{}: {e}", side_path.display())))?;
        let order = side.m + side.n;
        if side.m == 0 || side.n == 0 {
            return Err(Error::Validation("supplied systems need m, n ≥ 1".into()));
        }
        let text = std::fs::read_to_string(path)?;
        let mut rows: Vec<Vec<T>> = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: std::result::Result<Vec<f64>, _> = line.split(',').map(|f| f.trim().parse::<f64>()).collect();
            match fields {
                Ok(v) => rows.push(v.into_iter().map(T::lit).collect()),
                Err(_) if rows.is_empty() => continue, // header
                Err(e) => return Err(Error::Parse(format!("{}:{}: {e}", path.display(), ln + 1))),
            }
        }
        let width = 1 + order * order;
        if rows.len() < 4 || rows.iter().any(|r| r.len() != width) {
            return Err(Error::Parse(format!(
                "{}: expected at least 4 rows of {width} columns",
                path.display()
            )));
        }
        let nodes: Arc<Vec<T>> = Arc::new(rows.iter().map(|r| r[0]).collect());
        let solutions = (0..order)
            .map(|i| {
                let cols: Vec<Vec<T>> = (0..order).map(|k| rows.iter().map(|r| r[1 + i * order + k]).collect()).collect();
                Ok(Arc::new(Tabulated::new(nodes.clone(), cols, format!("t{}", i + 1))?) as SolutionRef<T>)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(
            side.m,
            side.n,
            nodes[0],
            nodes[nodes.len() - 1],
            SystemPath::Supplied,
            solutions,
        ))
    }
}

struct Scaled<T: Real> {
    inner: SolutionRef<T>,
    factor: T,
}

impl<T: Real> Solution<T> for Scaled<T> {
    fn derivs(&self, u: T, order: usize) -> Vec<T> {
        self.inner.derivs(u, order).into_iter().map(|v| v * self.factor).collect()
    }

    fn exact_beyond(&self) -> bool {
        self.inner.exact_beyond()
    }

    fn label(&self) -> String {
        format!("{}*{}", self.factor, self.inner.label())
    }
}

/// A solution given by a closure returning derivatives.
pub struct FnSolution<T> {
    f: Arc<dyn Fn(T, usize) -> Vec<T> + Send + Sync>,
    label: String,
}

impl<T: Real> FnSolution<T> {
    pub fn new(label: impl Into<String>, f: impl Fn(T, usize) -> Vec<T> + Send + Sync + 'static) -> Self {
        Self {
            f: Arc::new(f),
            label: label.into(),
        }
    }

    pub fn shared(label: impl Into<String>, f: impl Fn(T, usize) -> Vec<T> + Send + Sync + 'static) -> SolutionRef<T> {
        Arc::new(Self::new(label, f))
    }
}

impl<T: Real> Solution<T> for FnSolution<T> {
    fn derivs(&self, u: T, order: usize) -> Vec<T> {
        (self.f)(u, order)
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}

/// `e^{rate (u - origin)}`.
pub fn exponential<T: Real>(rate: T, origin: T) -> SolutionRef<T> {
    FnSolution::shared(format!("exp({rate} u)"), move |u, order| {
        let e = (rate * (u - origin)).exp();
        let mut out = Vec::with_capacity(order + 1);
        let mut f = e;
        for _ in 0..=order {
            out.push(f);
            f = f * rate;
        }
        out
    })
}

/// The constant solution `1`.
pub fn unit<T: Real>() -> SolutionRef<T> {
    FnSolution::shared("1", |_, order| {
        let mut v = vec![T::zero(); order + 1];
        v[0] = T::one();
        v
    })
}

/// A tabulated solution; derivative `k` is interpolated by cubic Hermite with
/// derivative `k + 1` as slope, the last column by finite differences.
struct Tabulated<T: Real> {
    cols: Vec<GridFunction<T>>,
    label: String,
}

impl<T: Real> Tabulated<T> {
    fn new(nodes: Arc<Vec<T>>, cols: Vec<Vec<T>>, label: String) -> Result<Self> {
        let cols = cols
            .into_iter()
            .map(|c| GridFunction::from_values(nodes.clone(), c, None))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { cols, label })
    }
}

impl<T: Real> Solution<T> for Tabulated<T> {
    fn derivs(&self, u: T, order: usize) -> Vec<T> {
        let nodes = self.cols[0].nodes();
        let k = self.cols[0].panel(u);
        let (a, b) = (nodes[k], nodes[(k + 1).min(nodes.len() - 1)]);
        let h = b - a;
        (0..=order)
            .map(|d| {
                if d >= self.cols.len() {
                    return T::nan();
                }
                if d + 1 == self.cols.len() || u < a || u > b || h <= T::zero() {
                    return self.cols[d].eval(u);
                }
                let (f0, f1) = (self.cols[d].values()[k], self.cols[d].values()[k + 1]);
                let (m0, m1) = (self.cols[d + 1].values()[k], self.cols[d + 1].values()[k + 1]);
                let t = (u - a) / h;
                let t2 = t * t;
                let t3 = t2 * t;
                let two = T::lit(2.0);
                let three = T::lit(3.0);
                (two * t3 - three * t2 + T::one()) * f0
                    + (t3 - two * t2 + t) * h * m0
                    + (-two * t3 + three * t2) * f1
                    + (t3 - t2) * h * m1
            })
            .collect()
    }

    fn exact_beyond(&self) -> bool {
        false
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}

/// `s(u) = ∫_u^∞ e^{-μv + λq(v)} / p(v) dv` for `δ = 0`, with `q` measured
/// from the domain start.
struct DiscountFreeStable<T: Real> {
    premium: PremiumFunction<T>,
    lambda: T,
    mu: T,
    q: QFunction<T>,
    tail_integral: GridFunction<T>,
    norm: T,
}

#[derive(Clone)]
enum QFunction<T: Real> {
    Closed { premium: PremiumFunction<T>, offset: T },
    Table(GridFunction<T>),
}

impl<T: Real> QFunction<T> {
    fn new(premium: &PremiumFunction<T>, nodes: Arc<Vec<T>>) -> Result<Self> {
        let closed = match premium {
            PremiumFunction::Constant { .. }
            | PremiumFunction::Linear { .. }
            | PremiumFunction::Quadratic { .. }
            | PremiumFunction::ExpDecay { .. } => true,
            PremiumFunction::Rational { eps, .. } => *eps != T::zero(),
            _ => false,
        };
        if closed {
            let offset = premium.reciprocal_integral(nodes[0])?;
            return Ok(QFunction::Closed {
                premium: premium.clone(),
                offset,
            });
        }
        let p = premium.clone();
        let recip = GridFunction::from_fn(nodes, Arc::new(move |u: T| T::one() / p.eval(u)), true);
        Ok(QFunction::Table(cumulate(&recip)?.a))
    }

    fn eval(&self, u: T) -> T {
        match self {
            QFunction::Closed { premium, offset } => premium.reciprocal_integral(u).map(|q| q - *offset).unwrap_or(T::nan()),
            QFunction::Table(a) => a.eval(u),
        }
    }
}

fn discount_free_integrand<T: Real>(premium: &PremiumFunction<T>, q: &QFunction<T>, lambda: T, mu: T, u: T) -> T {
    (-mu * u + lambda * q.eval(u)).exp() / premium.eval(u)
}

impl<T: Real> DiscountFreeStable<T> {
    fn build(model: &RiskModel<T>, nodes: Arc<Vec<T>>) -> Result<Self> {
        let (lambda, mu) = (model.lambda()?, model.mu()?);
        let premium = model.premium.clone();
        let q = QFunction::new(&premium, nodes.clone())?;
        let (p2, q2) = (premium.clone(), q.clone());
        let h = GridFunction::from_fn(
            nodes.clone(),
            Arc::new(move |u: T| discount_free_integrand(&p2, &q2, lambda, mu, u)),
            true,
        );
        let cum = cumulate(&h)?;
        let tail_integral = cum.b()?.clone();
        let norm = tail_integral.eval(nodes[0]);
        if !(norm.is_finite() && norm > T::zero()) {
            return Err(Error::Divergence(format!(
                "∫ e^(-μv+λq(v))/p(v) dv is not finite ({norm}); the net-profit condition fails"
            )));
        }
        Ok(Self {
            premium,
            lambda,
            mu,
            q,
            tail_integral,
            norm,
        })
    }
}

impl<T: Real> Solution<T> for DiscountFreeStable<T> {
    fn derivs(&self, u: T, order: usize) -> Vec<T> {
        let mut out = vec![self.tail_integral.eval(u) / self.norm];
        if order == 0 {
            return out;
        }
        // s^{(k)} = -h^{(k-1)} with h = exp(E)/p and E' = -μ + λ/p
        let k = order - 1;
        let pj = self.premium.jet(u, k);
        let qv = self.q.eval(u);
        let qj = if k == 0 {
            Jet::constant(qv, 0)
        } else {
            pj.clone().truncate(k - 1).recip().integrate(qv)
        };
        let e = Jet::variable(u, k).scale(-self.mu) + qj.scale(self.lambda);
        let h = e.exp() / pj;
        out.extend(h.derivatives().into_iter().map(|d| -d / self.norm));
        out
    }

    fn label(&self) -> String {
        "s (discount-free integral)".into()
    }
}

/// `(εu+c)^κ e^{-μu} F(a, b, μ(εu+c)/ε)` with `F` one of Kummer's `U`, `M`.
struct KummerSolution<T: Real> {
    second_kind: bool,
    a: T,
    b: T,
    c: T,
    eps: T,
    mu: T,
    kappa: T,
    log_norm: T,
}

impl<T: Real> KummerSolution<T> {
    fn new(second_kind: bool, model: &RiskModel<T>, c: T, eps: T, lo: T) -> Result<Self> {
        let (lambda, mu) = (model.lambda()?, model.mu()?);
        let delta = model.delta;
        let mut k = Self {
            second_kind,
            a: delta / eps + T::one(),
            b: (lambda + delta) / eps + T::one(),
            c,
            eps,
            mu,
            kappa: (lambda + delta) / eps,
            log_norm: T::zero(),
        };
        let raw = k.try_derivs(lo, 0)?[0];
        if !(raw.is_finite() && raw > T::zero()) {
            return Err(Error::Stability(format!("Kummer solution is not positive at {lo}: {raw}")));
        }
        k.log_norm = raw.ln();
        Ok(k)
    }

    fn try_derivs(&self, u: T, order: usize) -> Result<Vec<T>> {
        let x = self.eps * u + self.c;
        let z = self.mu * x / self.eps;
        let (f, base): (Vec<T>, T) = if self.second_kind {
            (kummer_u_derivs(self.a, self.b, z, order)?, T::zero())
        } else {
            let ms = kummer_m_derivs_scaled(self.a, self.b, z, order)?;
            let s0 = ms[0].1;
            (ms.iter().map(|&(m, s)| m * (s - s0).exp()).collect(), s0)
        };
        let mut pow = T::one();
        let chain: Vec<T> = f
            .into_iter()
            .map(|v| {
                let r = v * pow;
                pow = pow * self.mu;
                r
            })
            .collect();
        let xj = Jet::variable(u, order);
        let prefactor = (xj.scale(self.eps).add_scalar(self.c).ln().scale(self.kappa) + xj.scale(-self.mu))
            .add_scalar(base - self.log_norm)
            .exp();
        Ok((prefactor * Jet::from_derivatives(&chain)).derivatives())
    }
}

impl<T: Real> Solution<T> for KummerSolution<T> {
    fn derivs(&self, u: T, order: usize) -> Vec<T> {
        self.try_derivs(u, order).unwrap_or_else(|_| vec![T::nan(); order + 1])
    }

    fn label(&self) -> String {
        if self.second_kind { "s (Kummer U)" } else { "r (Kummer M)" }.into()
    }
}

const TAYLOR_ORDER: usize = 24;

/// Numerically integrated solution: states `(y, y')` at the grid nodes, local
/// Taylor expansion of the equation in between, fitted tail beyond.
struct NumericSolution<T: Real> {
    nodes: Arc<Vec<T>>,
    states: Vec<(T, T)>,
    /// Taylor coefficients of `(c_0, c_1)` at each node.
    coeff_taylor: Arc<Vec<(Vec<T>, Vec<T>)>>,
    tail: (T, T, T, T),
    label: &'static str,
}

impl<T: Real> NumericSolution<T> {
    fn taylor(&self, k: usize) -> Vec<T> {
        let (y, yp) = self.states[k];
        let (c0, c1) = &self.coeff_taylor[k];
        let mut c = vec![T::zero(); TAYLOR_ORDER + 1];
        c[0] = y;
        c[1] = yp;
        for j in 0..TAYLOR_ORDER - 1 {
            let mut s = T::zero();
            for i in 0..=j {
                s += c1[i] * T::from_usize_lossy(j - i + 1) * c[j - i + 1] + c0[i] * c[j - i];
            }
            c[j + 2] = -s / T::from_usize_lossy((j + 2) * (j + 1));
        }
        c
    }

    fn tail_derivs(&self, u: T, order: usize) -> Vec<T> {
        let (yu, rate, power, anchor) = self.tail;
        let x = Jet::variable(u, order);
        let e = x.add_scalar(-anchor).scale(rate) + x.scale(T::one() / anchor).ln().scale(power);
        e.exp().scale(yu).derivatives()
    }
}

impl<T: Real> Solution<T> for NumericSolution<T> {
    fn derivs(&self, u: T, order: usize) -> Vec<T> {
        let last = self.nodes.len() - 1;
        if u > self.nodes[last] {
            return self.tail_derivs(u, order);
        }
        let mut k = self.nodes.partition_point(|&x| x <= u).saturating_sub(1).min(last);
        if k < last && (self.nodes[k + 1] - u) < (u - self.nodes[k]) {
            k += 1;
        }
        let c = self.taylor(k);
        let h = u - self.nodes[k];
        (0..=order)
            .map(|d| {
                let mut acc = T::zero();
                for j in (d..=TAYLOR_ORDER).rev() {
                    let mut f = T::one();
                    for i in 0..d {
                        f = f * T::from_usize_lossy(j - i);
                    }
                    acc = acc * h + c[j] * f;
                }
                acc
            })
            .collect()
    }

    fn exact_beyond(&self) -> bool {
        false
    }

    fn label(&self) -> String {
        self.label.into()
    }
}

fn integrate_states<T: Real>(ode: &LinearODE<T>, nodes: &[T], y0: (T, T), forward: bool) -> Result<Vec<(T, T)>> {
    let solver = Dopri5::with_tol(T::lit(1e-12), T::lit(1e-14));
    let f = |u: T, y: &[T], dy: &mut [T]| {
        let c = ode.coefficients(u);
        dy[0] = y[1];
        dy[1] = -c[1] * y[1] - c[0] * y[0];
        Ok(())
    };
    let order: Vec<usize> = if forward {
        (0..nodes.len()).collect()
    } else {
        (0..nodes.len()).rev().collect()
    };
    let targets: Vec<T> = order[1..].iter().map(|&i| nodes[i]).collect();
    let start = nodes[order[0]];
    let out = solver.solve_at(f, start, &[y0.0, y0.1], &targets)?;
    let mut states = vec![(T::zero(), T::zero()); nodes.len()];
    states[order[0]] = y0;
    for (&i, y) in order[1..].iter().zip(out) {
        if !(y[0].is_finite() && y[1].is_finite()) {
            return Err(Error::Stability(format!(
                "solution leaves the floating-point range at u = {}",
                nodes[i]
            )));
        }
        states[i] = (y[0], y[1]);
    }
    Ok(states)
}

fn numeric_solution<T: Real>(
    nodes: Arc<Vec<T>>,
    coeff_taylor: Arc<Vec<(Vec<T>, Vec<T>)>>,
    mut states: Vec<(T, T)>,
    label: &'static str,
) -> Result<(NumericSolution<T>, T)> {
    let raw = states[0].0;
    if !(raw.is_finite() && raw != T::zero()) {
        return Err(Error::Stability(format!("{label} vanishes at the domain start")));
    }
    for s in states.iter_mut() {
        *s = (s.0 / raw, s.1 / raw);
    }
    let last = nodes.len() - 1;
    let mut sol = NumericSolution {
        nodes: nodes.clone(),
        states,
        coeff_taylor,
        tail: (T::zero(), T::zero(), T::zero(), T::one()),
        label,
    };
    // log-derivative ℓ(u) ≈ Y + β/u fitted at 0.9 U and U
    let hi = nodes[last];
    let (y_hi, yp_hi) = sol.states[last];
    let l_hi = yp_hi / y_hi;
    let u9 = hi * T::lit(0.9);
    let d9 = sol.derivs(u9, 1);
    let l9 = d9[1] / d9[0];
    let (power, rate) = if u9 > nodes[0] && hi > T::zero() {
        let beta = (l9 - l_hi) / (T::one() / u9 - T::one() / hi);
        (beta, l_hi - beta / hi)
    } else {
        (T::zero(), l_hi)
    };
    sol.tail = (y_hi, rate, power, hi);
    Ok((sol, raw))
}

/// Which construction [`fundamental_system`] would choose.
pub fn default_path<T: Real>(model: &RiskModel<T>) -> SystemPath {
    if model.delta == T::zero() {
        return SystemPath::DiscountFree;
    }
    match &model.premium {
        PremiumFunction::Linear { eps, .. } if *eps > T::zero() => SystemPath::Kummer,
        PremiumFunction::Linear { .. } | PremiumFunction::Constant { .. } => SystemPath::ConstantPremium,
        _ => SystemPath::Numeric,
    }
}

/// Builds the fundamental system of a second-order operator.
pub fn fundamental_system<T: Real>(ode: &LinearODE<T>, model: &RiskModel<T>) -> Result<FundamentalSystem<T>> {
    fundamental_system_with(ode, model, default_path(model))
}

/// Builds the system by a chosen path, for cross-checks between paths.
pub fn fundamental_system_with<T: Real>(
    ode: &LinearODE<T>,
    model: &RiskModel<T>,
    path: SystemPath,
) -> Result<FundamentalSystem<T>> {
    if ode.order() != 2 || ode.m != 1 {
        return Err(Error::Unsupported(format!(
            "no automatic fundamental system for (m, n) = ({}, {}); supply one from file",
            ode.m, ode.n
        )));
    }
    let (lo, hi) = (ode.lo, ode.hi);
    let nodes = Arc::new(default_nodes(lo, hi, DEFAULT_GRID_NODES));
    let fs = match path {
        SystemPath::DiscountFree => {
            if model.delta != T::zero() {
                return Err(Error::Unsupported("the integral stable solution needs δ = 0".into()));
            }
            let s = DiscountFreeStable::build(model, nodes)?;
            let raw = s.norm;
            let mut fs = FundamentalSystem::new(1, 1, lo, hi, path, vec![Arc::new(s), unit()]);
            fs.scales[0] = raw;
            fs
        }
        SystemPath::Kummer => {
            let (c, eps) = match &model.premium {
                PremiumFunction::Linear { c, eps } if *eps > T::zero() => (*c, *eps),
                _ => return Err(Error::Unsupported("the Kummer pair needs a linear premium with ε > 0".into())),
            };
            if model.delta <= T::zero() {
                return Err(Error::Unsupported("the Kummer pair needs δ > 0".into()));
            }
            let s = KummerSolution::new(true, model, c, eps, lo)?;
            let r = KummerSolution::new(false, model, c, eps, lo)?;
            let scales = vec![s.log_norm.exp(), r.log_norm.exp()];
            let mut fs = FundamentalSystem::new(1, 1, lo, hi, path, vec![Arc::new(s), Arc::new(r)]);
            fs.scales = scales;
            fs
        }
        SystemPath::ConstantPremium => {
            let (sigma, rho) = ode.characteristic_roots(lo)?;
            let flat = ode.characteristic_roots(hi)?;
            if (flat.0 - sigma).abs() > T::lit(1e-12) * sigma.abs().max(T::one()) {
                return Err(Error::Unsupported("exponential solutions need constant coefficients".into()));
            }
            FundamentalSystem::new(1, 1, lo, hi, path, vec![exponential(sigma, lo), exponential(rho, lo)])
        }
        SystemPath::Numeric => {
            let coeff_taylor: Vec<(Vec<T>, Vec<T>)> = nodes
                .iter()
                .map(|&u| {
                    let j = ode.coefficient_jets(u, TAYLOR_ORDER);
                    (j[0].coeffs().to_vec(), j[1].coeffs().to_vec())
                })
                .collect();
            let coeff_taylor = Arc::new(coeff_taylor);
            let (stable_start, _) = corrected_log_derivatives(ode, hi, 0)?;
            let s_states = integrate_states(ode, &nodes, (T::one(), stable_start.value()), false)?;
            let r_states = integrate_states(ode, &nodes, (T::one(), T::zero()), true)?;
            let (s, s_raw) = numeric_solution(nodes.clone(), coeff_taylor.clone(), s_states, "s (numeric)")?;
            let (r, r_raw) = numeric_solution(nodes.clone(), coeff_taylor, r_states, "r (numeric)")?;
            let mut fs = FundamentalSystem::new(1, 1, lo, hi, path, vec![Arc::new(s), Arc::new(r)]);
            fs.scales = vec![s_raw, r_raw];
            fs
        }
        SystemPath::Supplied => {
            return Err(Error::Unsupported("supplied systems are read with FundamentalSystem::from_csv".into()))
        }
    };
    Ok(fs)
}

/// Builds and verifies, tagging failures with the pipeline stage.
pub fn verified_fundamental_system<T: Real>(ode: &LinearODE<T>, model: &RiskModel<T>) -> Result<FundamentalSystem<T>> {
    let fs = fundamental_system(ode, model)?;
    let probe = default_nodes(ode.lo, ode.hi, 64);
    fs.verify(None, &probe)?;
    Ok(fs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Penalty;
    use crate::operator::build_operator;
    use approx::assert_relative_eq;

    fn model(p: PremiumFunction<f64>, delta: f64, u_max: f64) -> RiskModel<f64> {
        RiskModel::exp_exp(p, 1.0, 2.0, delta, Penalty::RuinIndicator, u_max)
    }

    #[test]
    fn constant_premium_discount_free_matches_closed_form() {
        // s(u) ∝ e^{(λ/c - μ)u}
        let m = model(PremiumFunction::Constant { c: 1.0 }, 0.0, 20.0);
        let ode = build_operator(&m).unwrap();
        let fs = fundamental_system(&ode, &m).unwrap();
        assert_eq!(fs.path, SystemPath::DiscountFree);
        for &u in &[0.0, 0.3, 2.0, 7.5, 25.0] {
            let d = fs.solutions[0].derivs(u, 2);
            assert_relative_eq!(d[0], (-u).exp(), max_relative = 1e-10);
            assert_relative_eq!(d[1], -(-u).exp(), max_relative = 1e-10);
            assert_relative_eq!(d[2], (-u).exp(), max_relative = 1e-10);
        }
        // raw s(0) = (1/c)/(μ - λ/c)
        assert_relative_eq!(fs.scales[0], 1.0, max_relative = 1e-10);
        let probe = default_nodes(0.0, 20.0, 64);
        let v = fs.verify(Some(&ode), &probe).unwrap();
        assert!(v.residual.unwrap() < 1e-9);
    }

    #[test]
    fn linear_discount_free_tail_shape() {
        let (c, eps) = (1.0, 0.5);
        let m = model(PremiumFunction::Linear { c, eps }, 0.0, 30.0);
        let ode = build_operator(&m).unwrap();
        let fs = fundamental_system(&ode, &m).unwrap();
        let k = |u: f64| fs.solutions[0].derivs(u, 0)[0] * (2.0 * u).exp() * (eps * u + c).powf(1.0 - 1.0 / eps);
        let (a, b) = (k(20.0), k(28.0));
        assert!((a / b - 1.0).abs() < 0.02, "{a} {b}");
        let probe = default_nodes(0.0, 30.0, 64);
        assert!(fs.residual(&ode, &probe) < 1e-8);
    }

    #[test]
    fn kummer_and_numeric_span_the_same_space() {
        let m = model(PremiumFunction::Linear { c: 1.0, eps: 0.5 }, 0.5, 30.0);
        let ode = build_operator(&m).unwrap();
        let kummer = fundamental_system(&ode, &m).unwrap();
        assert_eq!(kummer.path, SystemPath::Kummer);
        let numeric = fundamental_system_with(&ode, &m, SystemPath::Numeric).unwrap();
        let probe = default_nodes(0.0, 30.0, 64);
        assert!(kummer.residual(&ode, &probe) < 1e-8, "{}", kummer.residual(&ode, &probe));
        assert!(numeric.residual(&ode, &probe) < 1e-8, "{}", numeric.residual(&ode, &probe));
        // both stable solutions are normalized to 1 at 0
        for &u in &[0.0, 1.0, 5.0, 15.0] {
            let a = kummer.solutions[0].derivs(u, 1);
            let b = numeric.solutions[0].derivs(u, 1);
            assert_relative_eq!(a[0], b[0], max_relative = 1e-6);
            assert_relative_eq!(a[1], b[1], max_relative = 1e-6);
        }
        // r grows like (εu + c)^{δ/ε}
        let g = |u: f64| kummer.solutions[1].derivs(u, 0)[0] / (0.5 * u + 1.0);
        assert!((g(25.0) / g(29.0) - 1.0).abs() < 0.05);
        kummer.verify(Some(&ode), &probe).unwrap();
        numeric.verify(Some(&ode), &probe).unwrap();
    }

    #[test]
    fn constant_premium_with_discount_is_exponential() {
        let m = model(PremiumFunction::Constant { c: 1.0 }, 1.0, 20.0);
        let ode = build_operator(&m).unwrap();
        let fs = fundamental_system(&ode, &m).unwrap();
        assert_eq!(fs.path, SystemPath::ConstantPremium);
        let probe = default_nodes(0.0, 20.0, 32);
        assert!(fs.residual(&ode, &probe) < 1e-12);
    }

    #[test]
    fn rescaling_records_scales() {
        let m = model(PremiumFunction::Constant { c: 1.0 }, 1.0, 20.0);
        let ode = build_operator(&m).unwrap();
        let fs = fundamental_system(&ode, &m).unwrap().rescaled(&[3.0, -2.0]);
        assert_relative_eq!(fs.solutions[0].derivs(0.0, 0)[0], 3.0);
        assert_relative_eq!(fs.solutions[1].derivs(0.0, 0)[0], -2.0);
    }
}
