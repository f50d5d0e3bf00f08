//! Functions sampled on a nonuniform grid over `[u_min, u_max]`, with a tail
//! descriptor beyond `u_max` and optionally an exact evaluator. This is the
//! common currency between quadrature, Green's-operator application and
//! asymptotics.
//!
//! The cumulative operators are `A f(u) = ∫_{u_0}^u f`, `B f(u) = ∫_u^∞ f`
//! and `F f = ∫_{u_0}^∞ f`. Panel integrals are shared between `A` and `B`
//! so that `A + B = F` holds to rounding.

use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::gamma::{ln_upper_incomplete_gamma, upper_incomplete_gamma_any};
use super::quadrature::{gk15, Quadrature, Upper};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub type Evaluator<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

pub const DEFAULT_GRID_NODES: usize = 1024;

/// Asymptotic form beyond the last node.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Tail<T> {
    Zero,
    Constant { level: T },
    /// `f(u) ≈ coef · (u/anchor)^power · e^{-rate (u - anchor)}`
    Exponential { coef: T, rate: T, power: T, anchor: T },
}

impl<T: Real> Tail<T> {
    pub fn eval(&self, u: T) -> T {
        match *self {
            Tail::Zero => T::zero(),
            Tail::Constant { level } => level,
            Tail::Exponential {
                coef,
                rate,
                power,
                anchor,
            } => {
                let mut v = coef * (-rate * (u - anchor)).exp();
                if power != T::zero() {
                    v *= (u / anchor).powf(power);
                }
                v
            }
        }
    }

    pub fn decays(&self) -> bool {
        match *self {
            Tail::Zero => true,
            Tail::Constant { level } => level == T::zero(),
            Tail::Exponential { rate, coef, .. } => rate > T::zero() || coef == T::zero(),
        }
    }

    /// `∫_x^∞` of the tail form, for `x ≥ anchor`.
    pub fn integral_from(&self, x: T) -> Result<T> {
        match *self {
            Tail::Zero => Ok(T::zero()),
            Tail::Constant { level } if level == T::zero() => Ok(T::zero()),
            Tail::Constant { level } => Err(Error::Tail(format!(
                "B/F requested on a non-decaying tail (constant level {level})"
            ))),
            Tail::Exponential { coef, .. } if coef == T::zero() => Ok(T::zero()),
            Tail::Exponential { rate, .. } if rate <= T::zero() => Err(Error::Tail(format!(
                "B/F requested on a non-decaying exponential tail (rate {rate})"
            ))),
            Tail::Exponential {
                coef,
                rate,
                power,
                anchor,
            } => {
                if power == T::zero() {
                    return Ok(coef * (-rate * (x - anchor)).exp() / rate);
                }
                // coef · anchor^{-p} e^{r a} r^{-p-1} Γ(p+1, r x)
                let p1 = power + T::one();
                let log_pref = -power * anchor.ln() + rate * anchor - p1 * rate.ln();
                if p1 > T::zero() {
                    let lg = ln_upper_incomplete_gamma(p1, rate * x)?;
                    Ok(coef * (log_pref + lg).exp())
                } else {
                    let g = upper_incomplete_gamma_any(p1, rate * x)?;
                    Ok(coef * log_pref.exp() * g)
                }
            }
        }
    }
}

/// Default node layout: logarithmically dense near the lower end and uniform
/// beyond 1.
pub fn default_nodes<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    assert!(hi > lo && n >= 8, "grid needs hi > lo and at least 8 nodes");
    let one = T::one();
    let mut v = Vec::with_capacity(n);
    let first = if lo > T::zero() {
        lo
    } else {
        v.push(T::zero());
        T::lit(1e-4) * hi.min(one)
    };
    let knee = hi.min(one).max(first);
    if knee > first {
        let remaining = n - v.len();
        let nl = if hi > knee { (n / 4).max(2) } else { remaining };
        let ratio = (knee / first).ln() / T::from_usize_lossy(nl - 1);
        for i in 0..nl {
            v.push(first * (ratio * T::from_usize_lossy(i)).exp());
        }
        let last = v.len() - 1;
        v[last] = knee;
    } else {
        v.push(first);
    }
    let remaining = n.saturating_sub(v.len());
    if remaining > 0 && hi > knee {
        let h = (hi - knee) / T::from_usize_lossy(remaining);
        for i in 1..=remaining {
            v.push(knee + h * T::from_usize_lossy(i));
        }
        let last = v.len() - 1;
        v[last] = hi;
    }
    v
}

/// Uniform nodes, mainly for tests and user-supplied tables.
pub fn uniform_nodes<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    let h = (hi - lo) / T::from_usize_lossy(n - 1);
    (0..n).map(|i| lo + h * T::from_usize_lossy(i)).collect()
}

/// Fritsch–Carlson monotone slopes.
fn monotone_slopes<T: Real>(x: &[T], y: &[T]) -> Vec<T> {
    let n = x.len();
    if n < 2 {
        return vec![T::zero(); n];
    }
    let delta: Vec<T> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / (x[k + 1] - x[k])).collect();
    let mut d = vec![T::zero(); n];
    d[0] = delta[0];
    d[n - 1] = delta[n - 2];
    for k in 1..n - 1 {
        if delta[k - 1] * delta[k] <= T::zero() {
            d[k] = T::zero();
        } else {
            // weighted harmonic mean keeps the interpolant monotone
            let h0 = x[k] - x[k - 1];
            let h1 = x[k + 1] - x[k];
            let w1 = T::lit(2.0) * h1 + h0;
            let w2 = h1 + T::lit(2.0) * h0;
            d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    d
}

/// Fits a decaying exponential through the last tenth of the samples,
/// anchored so that the tail matches the last value exactly.
pub fn fit_tail<T: Real>(nodes: &[T], values: &[T]) -> Tail<T> {
    let n = nodes.len();
    let start = n - (n / 10).max(3).min(n);
    let xs = &nodes[start..];
    let ys = &values[start..];
    if ys.iter().all(|&v| v == T::zero()) {
        return Tail::Zero;
    }
    let last = values[n - 1];
    let sign = last.signum();
    if ys.iter().any(|&v| v == T::zero() || v.signum() != sign) {
        return Tail::Constant { level: last };
    }
    let m = T::from_usize_lossy(xs.len());
    let mx = xs.iter().copied().sum::<T>() / m;
    let ly: Vec<T> = ys.iter().map(|v| v.abs().ln()).collect();
    let my = ly.iter().copied().sum::<T>() / m;
    let mut sxy = T::zero();
    let mut sxx = T::zero();
    for (x, l) in xs.iter().zip(&ly) {
        sxy += (*x - mx) * (*l - my);
        sxx += (*x - mx) * (*x - mx);
    }
    let rate = -sxy / sxx;
    if !rate.is_finite() {
        return Tail::Constant { level: last };
    }
    Tail::Exponential {
        coef: last,
        rate,
        power: T::zero(),
        anchor: nodes[n - 1],
    }
}

/// `∫_x^∞ f` over doubling chunks, stopping once a chunk is negligible.
/// Products like `e^{σu}/e^{(σ+ρ)u}` turn into `0/0` far out, so a
/// non-finite value after the integrand has already died away ends the
/// integration instead of failing it.
pub fn chunked_integral_to_infinity<T: Real, F: FnMut(T) -> T>(mut f: F, x: T, first_len: T) -> Result<T> {
    let q = Quadrature::relative(T::lit(1e-12));
    let mut a = x;
    let mut len = first_len.max(T::lit(1e-3) * x.abs()).max(T::lit(1e-6));
    let mut total = T::zero();
    let mut last = T::infinity();
    for _ in 0..64 {
        match q.integrate(&mut f, a, Upper::Finite(a + len)) {
            Ok(r) => {
                total += r.value;
                if r.value.abs() <= T::lit(1e-17) * total.abs() || (r.value == T::zero() && last == T::zero()) {
                    return Ok(total);
                }
                last = r.value;
            }
            Err(Error::Domain(_)) if last.abs() <= T::lit(1e-14) * total.abs() => return Ok(total),
            Err(Error::Domain(m)) => return Err(Error::Tail(format!("integrand breaks down before decaying: {m}"))),
            Err(Error::NonConvergence { .. }) => {
                return Err(Error::Tail(format!("integral to infinity from {x} does not converge")))
            }
            Err(e) => return Err(e),
        }
        a = a + len;
        len = len + len;
    }
    Err(Error::Tail(format!("integral to infinity from {x} does not settle; integrand lacks decay")))
}

/// A function on a grid. Cloning is cheap (shared storage).
#[derive(Clone)]
pub struct GridFunction<T: Real> {
    nodes: Arc<Vec<T>>,
    values: Arc<Vec<T>>,
    slopes: Arc<Vec<T>>,
    tail: Tail<T>,
    exact: Option<Evaluator<T>>,
    exact_beyond: bool,
}

impl<T: Real> fmt::Debug for GridFunction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridFunction")
            .field("nodes", &self.nodes.len())
            .field("range", &(self.u_min(), self.u_max()))
            .field("tail", &self.tail)
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

fn check_nodes<T: Real>(nodes: &[T]) -> Result<()> {
    if nodes.len() < 2 {
        return Err(Error::Domain("grid needs at least two nodes".into()));
    }
    if nodes.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain("grid nodes must be strictly ascending".into()));
    }
    Ok(())
}

impl<T: Real> GridFunction<T> {
    /// Samples with an optional explicit tail; the tail is fitted when absent.
    pub fn from_values(nodes: Arc<Vec<T>>, values: Vec<T>, tail: Option<Tail<T>>) -> Result<Self> {
        check_nodes(&nodes)?;
        if nodes.len() != values.len() {
            return Err(Error::Domain(format!(
                "{} nodes but {} values",
                nodes.len(),
                values.len()
            )));
        }
        let slopes = monotone_slopes(&nodes, &values);
        let tail = tail.unwrap_or_else(|| fit_tail(&nodes, &values));
        Ok(Self {
            nodes,
            values: Arc::new(values),
            slopes: Arc::new(slopes),
            tail,
            exact: None,
            exact_beyond: false,
        })
    }

    /// Samples an evaluator and keeps it for off-grid evaluation.
    /// `exact_beyond` states that the evaluator is also valid past `u_max`.
    pub fn from_fn(nodes: Arc<Vec<T>>, f: Evaluator<T>, exact_beyond: bool) -> Self {
        let values: Vec<T> = nodes.iter().map(|&u| f(u)).collect();
        let slopes = monotone_slopes(&nodes, &values);
        let tail = fit_tail(&nodes, &values);
        Self {
            nodes,
            values: Arc::new(values),
            slopes: Arc::new(slopes),
            tail,
            exact: Some(f),
            exact_beyond,
        }
    }

    /// Like [`GridFunction::from_fn`] with the node values already computed.
    pub fn from_sampled_fn(nodes: Arc<Vec<T>>, values: Vec<T>, f: Evaluator<T>, exact_beyond: bool) -> Result<Self> {
        let mut g = Self::from_values(nodes, values, None)?;
        g.exact = Some(f);
        g.exact_beyond = exact_beyond;
        Ok(g)
    }

    pub fn zero(nodes: Arc<Vec<T>>) -> Self {
        let n = nodes.len();
        Self {
            nodes,
            values: Arc::new(vec![T::zero(); n]),
            slopes: Arc::new(vec![T::zero(); n]),
            tail: Tail::Zero,
            exact: Some(Arc::new(|_| T::zero())),
            exact_beyond: true,
        }
    }

    pub fn with_tail(mut self, tail: Tail<T>) -> Self {
        self.tail = tail;
        self
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn shared_nodes(&self) -> Arc<Vec<T>> {
        self.nodes.clone()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn tail(&self) -> &Tail<T> {
        &self.tail
    }

    pub fn has_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn exact_beyond(&self) -> bool {
        self.exact.is_some() && self.exact_beyond
    }

    pub fn u_min(&self) -> T {
        self.nodes[0]
    }

    pub fn u_max(&self) -> T {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn sup_norm(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Index `k` with `nodes[k] ≤ u < nodes[k+1]` (clamped to a valid panel).
    pub fn panel(&self, u: T) -> usize {
        let n = self.nodes.len();
        let k = self.nodes.partition_point(|&x| x <= u);
        k.saturating_sub(1).min(n - 2)
    }

    fn hermite(&self, k: usize, u: T) -> T {
        let x0 = self.nodes[k];
        let h = self.nodes[k + 1] - x0;
        let t = (u - x0) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        let h00 = two * t3 - three * t2 + T::one();
        let h10 = t3 - two * t2 + t;
        let h01 = -two * t3 + three * t2;
        let h11 = t3 - t2;
        h00 * self.values[k] + h10 * h * self.slopes[k] + h01 * self.values[k + 1] + h11 * h * self.slopes[k + 1]
    }

    /// `∫_{x_k}^{x}` of the Hermite piece on panel `k`.
    fn hermite_integral(&self, k: usize, u: T) -> T {
        let x0 = self.nodes[k];
        let h = self.nodes[k + 1] - x0;
        let s = (u - x0) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let s4 = s3 * s;
        let half = T::lit(0.5);
        let quarter = T::lit(0.25);
        let i00 = half * s4 - s3 + s;
        let i10 = quarter * s4 - T::lit(2.0 / 3.0) * s3 + half * s2;
        let i01 = -half * s4 + s3;
        let i11 = quarter * s4 - s3 / T::lit(3.0);
        h * (i00 * self.values[k] + i10 * h * self.slopes[k] + i01 * self.values[k + 1] + i11 * h * self.slopes[k + 1])
    }

    pub fn eval(&self, u: T) -> T {
        let hi = self.u_max();
        if u > hi {
            return match (&self.exact, self.exact_beyond) {
                (Some(f), true) => f(u),
                _ => self.tail.eval(u),
            };
        }
        if let Some(f) = &self.exact {
            return f(u);
        }
        let k = self.panel(u);
        if u == self.nodes[k] {
            return self.values[k];
        }
        self.hermite(k, u)
    }

    /// `∫_a^b` within panel `k` (`nodes[k] ≤ a ≤ b ≤ nodes[k+1]`).
    fn panel_integral(&self, k: usize, a: T, b: T) -> (T, T) {
        if a == b {
            return (T::zero(), T::zero());
        }
        match &self.exact {
            Some(f) => gk15(|x| f(x), a, b),
            None => (self.hermite_integral(k, b) - self.hermite_integral(k, a), T::zero()),
        }
    }

    /// `∫_x^∞` for `x ≥ u_max`.
    pub fn integral_to_infinity(&self, x: T) -> Result<T> {
        if self.exact_beyond() {
            let f = self.exact.clone().expect("exact evaluator");
            return chunked_integral_to_infinity(|u| f(u), x, (self.u_max() - self.u_min()) / T::lit(8.0));
        }
        self.tail.integral_from(x)
    }

    /// Pointwise transformation keeping the exact evaluator when present.
    pub fn map<G>(&self, g: G) -> Self
    where
        G: Fn(T, T) -> T + Send + Sync + 'static,
    {
        let g = Arc::new(g);
        match &self.exact {
            Some(f) => {
                let f = f.clone();
                let g2 = g.clone();
                GridFunction::from_fn(self.nodes.clone(), Arc::new(move |u| g2(u, f(u))), self.exact_beyond)
            }
            None => {
                let vals: Vec<T> = self.nodes.iter().zip(self.values.iter()).map(|(&u, &v)| g(u, v)).collect();
                GridFunction::from_values(self.nodes.clone(), vals, None).expect("same nodes")
            }
        }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "u,value")?;
        for (u, v) in self.nodes.iter().zip(self.values.iter()) {
            writeln!(out, "{:e},{:e}", u.to_f64_lossy(), v.to_f64_lossy())?;
        }
        out.flush()?;
        let tail_json = serde_json::to_string_pretty(&self.tail).map_err(|e| Error::Parse(e.to_string()))?;
        std::fs::write(sidecar_path(path), tail_json)?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let reader = BufReader::new(std::fs::File::open(path)?);
        let mut nodes = Vec::new();
        let mut values = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if i == 0 {
                if line.trim() != "u,value" {
                    return Err(Error::Parse(format!("expected header `u,value`, got `{line}`")));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let mut it = line.split(',');
            let mut next = || -> Result<T> {
                let s = it.next().ok_or_else(|| Error::Parse(format!("short row {i}")))?;
                let v: f64 = s.trim().parse().map_err(|_| Error::Parse(format!("bad number `{s}`")))?;
                Ok(T::lit(v))
            };
            nodes.push(next()?);
            values.push(next()?);
        }
        let side = sidecar_path(path);
        let tail = if side.exists() {
            let text = std::fs::read_to_string(side)?;
            Some(serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?)
        } else {
            None
        };
        GridFunction::from_values(Arc::new(nodes), values, tail)
    }
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".tail.json");
    PathBuf::from(s)
}

/// Which cumulative operator to apply.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CumulativeKind {
    A,
    B,
    F,
}

pub enum CumulativeOutput<T: Real> {
    Function(GridFunction<T>),
    Scalar(T),
}

/// Prefix / suffix tables of `∫ f` sharing the same panel integrals.
#[derive(Clone, Debug)]
pub struct Cumulative<T: Real> {
    pub a: GridFunction<T>,
    /// `None` when `f` has a non-decaying tail.
    pub b: Option<GridFunction<T>>,
    pub total: Option<T>,
    /// Accumulated panel error estimate.
    pub error: T,
}

impl<T: Real> Cumulative<T> {
    pub fn b(&self) -> Result<&GridFunction<T>> {
        self.b
            .as_ref()
            .ok_or_else(|| Error::Tail("B requested on a non-decaying integrand".into()))
    }

    pub fn total(&self) -> Result<T> {
        self.total
            .ok_or_else(|| Error::Tail("F requested on a non-decaying integrand".into()))
    }
}

/// Running Neumaier sums.
fn running_sums<T: Real>(parts: impl Iterator<Item = T>, start: T) -> Vec<T> {
    let mut out = vec![start];
    let mut sum = start;
    let mut comp = T::zero();
    for x in parts {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
        out.push(sum + comp);
    }
    out
}

/// Builds the `A`, `B` and `F` integrals of `f` at once.
pub fn cumulate<T: Real>(f: &GridFunction<T>) -> Result<Cumulative<T>> {
    cumulate_with(f, true)
}

/// Only the `A` integral; skips the integral to infinity, which is the
/// expensive part for nested integrands.
pub fn cumulate_prefix<T: Real>(f: &GridFunction<T>) -> Result<Cumulative<T>> {
    cumulate_with(f, false)
}

fn cumulate_with<T: Real>(f: &GridFunction<T>, with_tail: bool) -> Result<Cumulative<T>> {
    let nodes = f.shared_nodes();
    let n = nodes.len();
    let mut panels = Vec::with_capacity(n - 1);
    let mut err = T::zero();
    for k in 0..n - 1 {
        let (v, e) = f.panel_integral(k, nodes[k], nodes[k + 1]);
        panels.push(v);
        err += e;
    }
    let a_vals = running_sums(panels.iter().copied(), T::zero());
    let tail_int = if with_tail {
        f.integral_to_infinity(f.u_max())
    } else {
        Err(Error::Tail("not requested".into()))
    };
    let (b_vals, total) = match tail_int {
        Ok(t) => {
            let mut rev = running_sums(panels.iter().rev().copied(), t);
            rev.reverse();
            let total = rev[0];
            (Some(rev), Some(total))
        }
        Err(Error::Tail(_)) => (None, None),
        Err(e) => return Err(e),
    };

    let a_table = Arc::new(a_vals.clone());
    let fa = f.clone();
    let nodes_a = nodes.clone();
    let a_eval: Evaluator<T> = Arc::new(move |x: T| {
        let hi = nodes_a[nodes_a.len() - 1];
        if x > hi {
            let extra = Quadrature::relative(T::lit(1e-12))
                .integrate(|u| fa.eval(u), hi, Upper::Finite(x))
                .map(|r| r.value)
                .unwrap_or_else(|_| T::nan());
            return a_table[a_table.len() - 1] + extra;
        }
        let k = fa.panel(x);
        a_table[k] + fa.panel_integral(k, nodes_a[k], x.max(nodes_a[k])).0
    });
    let a_tail = match total {
        Some(t) => Tail::Constant { level: t },
        None => Tail::Constant {
            level: a_vals[n - 1],
        },
    };
    let a_fn = build_from_table(nodes.clone(), a_vals, a_eval, a_tail);

    let b_fn = b_vals.map(|bv| {
        let b_table = Arc::new(bv.clone());
        let fb = f.clone();
        let nodes_b = nodes.clone();
        let b_eval: Evaluator<T> = Arc::new(move |x: T| {
            let hi = nodes_b[nodes_b.len() - 1];
            if x >= hi {
                return fb.integral_to_infinity(x).unwrap_or_else(|_| T::nan());
            }
            let k = fb.panel(x);
            b_table[k + 1] + fb.panel_integral(k, x.max(nodes_b[k]), nodes_b[k + 1]).0
        });
        let tail = fit_tail(&nodes, &bv);
        build_from_table(nodes.clone(), bv, b_eval, tail)
    });

    Ok(Cumulative {
        a: a_fn,
        b: b_fn,
        total,
        error: err,
    })
}

fn build_from_table<T: Real>(nodes: Arc<Vec<T>>, values: Vec<T>, eval: Evaluator<T>, tail: Tail<T>) -> GridFunction<T> {
    let slopes = monotone_slopes(&nodes, &values);
    GridFunction {
        nodes,
        values: Arc::new(values),
        slopes: Arc::new(slopes),
        tail,
        exact: Some(eval),
        exact_beyond: true,
    }
}

/// The `A`, `B` or `F` operator applied to `f`.
pub fn cumulative<T: Real>(f: &GridFunction<T>, kind: CumulativeKind) -> Result<CumulativeOutput<T>> {
    let c = cumulate(f)?;
    Ok(match kind {
        CumulativeKind::A => CumulativeOutput::Function(c.a),
        CumulativeKind::B => CumulativeOutput::Function(c.b()?.clone()),
        CumulativeKind::F => CumulativeOutput::Scalar(c.total()?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid(hi: f64) -> Arc<Vec<f64>> {
        Arc::new(default_nodes(0.0, hi, 256))
    }

    #[test]
    fn default_grid_shape() {
        let g = default_nodes(0.0_f64, 30.0, 1024);
        assert_eq!(g.len(), 1024);
        assert_eq!(g[0], 0.0);
        assert_eq!(*g.last().unwrap(), 30.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert!(g.contains(&1.0));
        let g = default_nodes(1e-3_f64, 40.0, 512);
        assert_eq!(g[0], 1e-3);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn cumulative_of_exponential_exact_and_sampled() {
        let nodes = grid(20.0);
        let exact = GridFunction::from_fn(nodes.clone(), Arc::new(|x: f64| (-x).exp()), true);
        let sampled = GridFunction::from_values(nodes.clone(), nodes.iter().map(|x| (-x).exp()).collect(), None).unwrap();
        for (f, tol) in [(exact, 1e-13), (sampled, 1e-4)] {
            let c = cumulate(&f).unwrap();
            let b = c.b().unwrap();
            assert_relative_eq!(c.total().unwrap(), 1.0, max_relative = tol);
            for &u in &[0.0, 0.37, 1.0, 5.5, 19.0] {
                assert_relative_eq!(c.a.eval(u), 1.0 - (-u as f64).exp(), epsilon = tol, max_relative = tol);
                assert_relative_eq!(b.eval(u), (-u as f64).exp(), max_relative = 10.0 * tol);
                assert!((c.a.eval(u) + b.eval(u) - c.total().unwrap()).abs() <= 2e-10);
            }
        }
    }

    #[test]
    fn tail_integral_with_power() {
        // ∫_x^∞ u^2 e^{-u} du = e^{-x}(x^2 + 2x + 2)
        let t = Tail::Exponential {
            coef: 4.0 * (-2.0f64).exp(),
            rate: 1.0,
            power: 2.0,
            anchor: 2.0,
        };
        assert_relative_eq!(t.eval(3.0), 9.0 * (-3.0f64).exp(), max_relative = 1e-14);
        let x = 3.0f64;
        assert_relative_eq!(t.integral_from(x).unwrap(), (-x).exp() * (x * x + 2.0 * x + 2.0), max_relative = 1e-12);
        let flat = Tail::Constant { level: 1.0 };
        assert!(matches!(flat.integral_from(1.0), Err(Error::Tail(_))));
    }

    #[test]
    fn non_decaying_integrand_refuses_b() {
        let nodes = grid(5.0);
        let f = GridFunction::from_values(nodes.clone(), vec![1.0; nodes.len()], None).unwrap();
        assert!(matches!(cumulative(&f, CumulativeKind::B), Err(Error::Tail(_))));
        assert!(matches!(cumulative(&f, CumulativeKind::A), Ok(CumulativeOutput::Function(_))));
    }

    #[test]
    fn monotone_interpolation_stays_monotone() {
        let nodes = Arc::new(vec![0.0, 1.0, 2.0, 3.0, 4.0]);
        let f = GridFunction::from_values(nodes, vec![0.0, 0.0, 1.0, 1.0, 1.0], Some(Tail::Zero)).unwrap();
        let mut prev = -1.0;
        for i in 0..=400 {
            let v = f.eval(i as f64 * 0.01);
            assert!(v >= prev - 1e-15);
            prev = v;
        }
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        let nodes = grid(3.0);
        let f = GridFunction::from_values(nodes.clone(), nodes.iter().map(|x| (-2.0 * x).exp()).collect(), None).unwrap();
        f.write_csv(&p).unwrap();
        let g = GridFunction::<f64>::read_csv(&p).unwrap();
        assert_eq!(g.len(), f.len());
        assert_eq!(g.tail(), f.tail());
        assert_relative_eq!(g.eval(1.234), f.eval(1.234), max_relative = 1e-12);
    }
}
