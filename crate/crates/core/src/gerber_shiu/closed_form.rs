//! Closed-form and quadrature-level ruin probabilities for exponential claims
//! and Poisson arrivals, used as independent references.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PremiumFunction;
use crate::numerics::gamma::{ln_gamma, ln_upper_incomplete_gamma};
use crate::numerics::grid::{chunked_integral_to_infinity, cumulate, cumulate_prefix, Evaluator, GridFunction};
use crate::numerics::hypergeometric::{hyp2f1, kummer_m_scaled, kummer_u};
use crate::numerics::quadrature::{Quadrature, Upper};
use crate::scalar::Real;

/// `ψ(u) = λ/(cμ) e^{-(μ - λ/c) u}` for a constant premium.
pub fn ruin_classical<T: Real>(c: T, lambda: T, mu: T, u: T) -> T {
    lambda / (c * mu) * (-(mu - lambda / c) * u).exp()
}

fn tail_integral<T: Real, F: FnMut(T) -> T>(f: F, u: T) -> Result<T> {
    chunked_integral_to_infinity(f, u, T::one()).map_err(|e| match e {
        Error::Tail(m) => Error::Divergence(format!("μx - λq(x) does not grow: {m}")),
        e => e,
    })
}

fn finite_integral<T: Real, F: FnMut(T) -> T>(f: F, a: T, b: T) -> Result<T> {
    if a == b {
        return Ok(T::zero());
    }
    Ok(Quadrature::relative(T::lit(1e-13)).integrate(f, a, Upper::Finite(b))?.value)
}

/// `ψ(u) = λ I(u) / (1 + λ I(0))` with `I(u) = ∫_u^∞ e^{λq(x) - μx}/p(x) dx`,
/// the general formula for monotone premiums.
#[derive(Clone, Debug)]
pub struct TichyRuin<T: Real> {
    premium: PremiumFunction<T>,
    lambda: T,
    mu: T,
    i0: T,
}

impl<T: Real> TichyRuin<T> {
    pub fn new(premium: &PremiumFunction<T>, lambda: T, mu: T) -> Result<Self> {
        let mut t = Self {
            premium: premium.clone(),
            lambda,
            mu,
            i0: T::zero(),
        };
        t.i0 = tail_integral(|x| t.integrand(x), T::zero())?;
        if !(t.i0.is_finite() && t.i0 > T::zero()) {
            return Err(Error::Divergence(format!("∫_0^∞ e^(λq-μx)/p = {}", t.i0)));
        }
        Ok(t)
    }

    /// `e^{λq(x) - μx}/p(x)`.
    pub fn integrand(&self, x: T) -> T {
        match self.premium.reciprocal_integral(x) {
            Ok(q) => (self.lambda * q - self.mu * x).exp() / self.premium.eval(x),
            Err(_) => T::nan(),
        }
    }

    /// `I(u)`.
    pub fn tail(&self, u: T) -> Result<T> {
        tail_integral(|x| self.integrand(x), u)
    }

    pub fn gamma0(&self) -> T {
        T::one() / (T::one() + self.lambda * self.i0)
    }

    pub fn eval(&self, u: T) -> Result<T> {
        Ok(self.lambda * self.tail(u)? * self.gamma0())
    }
}

/// Convenience wrapper around [`TichyRuin`].
pub fn ruin_tichy<T: Real>(premium: &PremiumFunction<T>, lambda: T, mu: T, u: T) -> Result<T> {
    TichyRuin::new(premium, lambda, mu)?.eval(u)
}

/// Argument order of the incomplete gamma in the linear-premium formula.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaOrder {
    /// `Γ(μ(c+εu)/ε, λ/ε)`: the large quantity as the shape.
    AsPrinted,
    /// `Γ(λ/ε, μ(c+εu)/ε)`: the large quantity as the lower limit, which is
    /// what the general quadrature formula reduces to.
    Swapped,
}

/// Ruin probability for `p(u) = c + εu`, evaluated in log space.
pub fn ruin_segerdahl<T: Real>(c: T, eps: T, lambda: T, mu: T, u: T, order: GammaOrder) -> Result<T> {
    if !(eps > T::zero() && c > T::zero()) {
        return Err(Error::Domain(format!("linear premium needs c, ε > 0 (c = {c}, ε = {eps})")));
    }
    let k = lambda / eps;
    let lg = |z: T| match order {
        GammaOrder::AsPrinted => ln_upper_incomplete_gamma(z, k),
        GammaOrder::Swapped => ln_upper_incomplete_gamma(k, z),
    };
    let lead = lambda.ln() + (k - T::one()) * eps.ln();
    let ln_num = lead + lg(mu * (c + eps * u) / eps)?;
    let ln_a = k * (mu * c).ln() - mu * c / eps;
    let ln_b = lead + lg(mu * c / eps)?;
    let m = ln_a.max(ln_b);
    let ln_den = m + ((ln_a - m).exp() + (ln_b - m).exp()).ln();
    Ok((ln_num - ln_den).exp())
}

/// Both argument orders of the linear-premium formula next to the quadrature
/// value.
#[derive(Clone, Debug, Serialize)]
pub struct SegerdahlReport<T> {
    pub u: T,
    pub as_printed: Option<T>,
    pub swapped: T,
    pub tichy: T,
}

impl<T: Real> SegerdahlReport<T> {
    pub fn new(c: T, eps: T, lambda: T, mu: T, u: T) -> Result<Self> {
        let tichy = ruin_tichy(&PremiumFunction::Linear { c, eps }, lambda, mu, u)?;
        Ok(Self {
            u,
            as_printed: ruin_segerdahl(c, eps, lambda, mu, u, GammaOrder::AsPrinted).ok(),
            swapped: ruin_segerdahl(c, eps, lambda, mu, u, GammaOrder::Swapped)?,
            tichy,
        })
    }

    pub fn deviation(&self, order: GammaOrder) -> T {
        let v = match order {
            GammaOrder::AsPrinted => self.as_printed.unwrap_or(T::nan()),
            GammaOrder::Swapped => self.swapped,
        };
        let d = (v - self.tichy).abs() / self.tichy.abs();
        if d.is_nan() { T::infinity() } else { d }
    }
}

/// The exponential-premium display next to the quadrature value it should
/// reproduce.
#[derive(Clone, Debug, Serialize)]
pub struct ExpPremiumRuin<T> {
    pub display: T,
    pub tichy: T,
    /// Whether a hypergeometric argument sat on the branch cut `z > 1`.
    pub branch_cut: bool,
    pub warning: Option<String>,
}

/// Ruin probability for `p(u) = c(1 + e^{-u})` from the hypergeometric
/// display, cross-evaluated by quadrature. The quadrature value is the
/// authoritative one.
pub fn ruin_exponential_premium<T: Real>(c: T, lambda: T, mu: T, u: T) -> Result<ExpPremiumRuin<T>> {
    let one = T::one();
    let two = T::lit(2.0);
    let l = lambda / c;
    let top = hyp2f1(l, mu, one + l, u.exp() + one)?;
    let bottom = hyp2f1(one + mu, one + l, two + l, two)?;
    let display = -(one + l) * top.value * ((u.exp() + one) / two).powf(l) / (two * mu * bottom.value);
    let tichy = ruin_tichy(&PremiumFunction::ExpDecay { c }, lambda, mu, u)?;
    let branch_cut = top.branch_cut || bottom.branch_cut;
    let dev = (display - tichy).abs() / tichy.abs().max(T::min_positive_value());
    let warning = if dev > T::lit(1e-6) || branch_cut {
        Some(format!(
            "hypergeometric display gives {display} but quadrature gives {tichy} (relative deviation {dev:?}); \
             arguments on the branch cut: {branch_cut}; the quadrature value is used"
        ))
    } else {
        None
    };
    Ok(ExpPremiumRuin {
        display,
        tichy,
        branch_cut,
        warning,
    })
}

/// Ruin probability for `p(u) = c + 1/(1+u)` from its quadrature display.
pub fn ruin_rational_premium<T: Real>(c: T, lambda: T, mu: T, u: T) -> Result<T> {
    let one = T::one();
    let c2 = c * c;
    let f = |x: T| (-x * (c * mu - lambda) / c).exp() * (c + c * x + one).powf(-(lambda + c2) / c2) * (one + x);
    let pre = lambda * (c + one).powf(lambda / c2);
    let tail = tail_integral(f, u)?;
    let full = finite_integral(f, T::zero(), u)? + tail;
    Ok(pre * tail / (one + pre * full))
}

/// Ruin probability for `p(u) = c + u²` from its quadrature display.
pub fn ruin_quadratic_premium<T: Real>(c: T, lambda: T, mu: T, u: T) -> Result<T> {
    let r = c.sqrt();
    let f = |x: T| (-(-lambda * (x / r).atan() + mu * x * r) / r).exp() / (c + x * x);
    let tail = tail_integral(f, u)?;
    let full = finite_integral(f, T::zero(), u)? + tail;
    Ok(lambda * tail / (T::one() + lambda * full))
}

/// The Kummer pair for the linear premium, as raw functions of `u`, with the
/// closed-form Wronskian.
#[derive(Clone, Copy, Debug)]
pub struct LinearKummer<T> {
    pub c: T,
    pub eps: T,
    pub lambda: T,
    pub mu: T,
    pub delta: T,
}

impl<T: Real> LinearKummer<T> {
    fn abz(&self, u: T) -> (T, T, T) {
        let a = self.delta / self.eps + T::one();
        let b = (self.lambda + self.delta) / self.eps + T::one();
        (a, b, self.mu * u + self.mu * self.c / self.eps)
    }

    fn kappa(&self) -> T {
        (self.lambda + self.delta) / self.eps
    }

    /// `U(a, b, z(u))`.
    pub fn u_fn(&self, u: T) -> Result<T> {
        let (a, b, z) = self.abz(u);
        kummer_u(a, b, z)
    }

    /// `M(a, b, z(u))`.
    pub fn m_fn(&self, u: T) -> Result<T> {
        let (a, b, z) = self.abz(u);
        let (m, s) = kummer_m_scaled(a, b, z)?;
        Ok(m * s.exp())
    }

    /// `ln((εu+c)^κ e^{-μu})`.
    pub fn ln_prefactor(&self, u: T) -> T {
        self.kappa() * (self.eps * u + self.c).ln() - self.mu * u
    }

    pub fn s(&self, u: T) -> Result<T> {
        Ok(self.u_fn(u)? * self.ln_prefactor(u).exp())
    }

    /// `s'(u)`, from `dU/dz = -a U(a+1, b+1, z)`.
    pub fn s_prime(&self, u: T) -> Result<T> {
        let (a, b, z) = self.abz(u);
        let one = T::one();
        let dlnp = self.kappa() * self.eps / (self.eps * u + self.c) - self.mu;
        let du = -a * self.mu * kummer_u(a + one, b + one, z)?;
        Ok(self.ln_prefactor(u).exp() * (dlnp * kummer_u(a, b, z)? + du))
    }

    pub fn r(&self, u: T) -> Result<T> {
        let (a, b, z) = self.abz(u);
        let (m, sc) = kummer_m_scaled(a, b, z)?;
        Ok(m * (sc + self.ln_prefactor(u)).exp())
    }

    /// The closed-form Wronskian `s r' - s' r`.
    pub fn wronskian(&self, u: T) -> T {
        let (l, d, e, mu, c) = (self.lambda, self.delta, self.eps, self.mu, self.c);
        let k = self.kappa();
        let ln = ln_gamma(k) - ln_gamma(d / e) + (e * (l + d) / d).ln() + k * (e / mu).ln()
            + (k - T::one()) * (u * e + c).ln()
            - mu * u
            + mu * c / e;
        ln.exp()
    }

    /// `1/C = Γ(δ/ε + 1) / (ε Γ(κ + 1)) · (μ/ε)^κ`, the constant in front of
    /// the Green's operator display.
    pub fn ln_inv_c(&self) -> T {
        let k = self.kappa();
        ln_gamma(self.delta / self.eps + T::one()) - ln_gamma(k + T::one()) - self.eps.ln() + k * (self.mu / self.eps).ln()
    }
}

/// `Gg` for the linear premium from the Kummer display, with the constant
/// corrected to `Γ(κ+1)` and the factor `(εv + c)` restored in the integrands:
/// `Gg(u) = (εu+c)^κ e^{-μu - μc/ε}/C · (-U(u)∫_0^u M(v) - M(u)∫_u^∞ U(v)
///  + M(0)/U(0) U(u)∫_0^∞ U(v)) (εv+c) g(v) dv`.
pub fn linear_greens_display<T: Real>(k: LinearKummer<T>, g: &GridFunction<T>, nodes: Arc<Vec<T>>) -> Result<GridFunction<T>> {
    let lo = nodes[0];
    let g1 = g.clone();
    let mg: Evaluator<T> = Arc::new(move |v| k.m_fn(v).unwrap_or(T::nan()) * (k.eps * v + k.c) * g1.eval(v));
    let g2 = g.clone();
    let ug: Evaluator<T> = Arc::new(move |v| k.u_fn(v).unwrap_or(T::nan()) * (k.eps * v + k.c) * g2.eval(v));
    let am = cumulate_prefix(&GridFunction::from_fn(nodes.clone(), mg, true))?.a;
    let bu = cumulate(&GridFunction::from_fn(nodes.clone(), ug, true))?;
    let total = bu.total()?;
    let bu = bu.b()?.clone();
    let ratio = k.m_fn(lo)? / k.u_fn(lo)?;
    let lnc = k.ln_inv_c() - k.mu * k.c / k.eps;
    let f: Evaluator<T> = Arc::new(move |u| {
        let (uu, mm) = match (k.u_fn(u), k.m_fn(u)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => return T::nan(),
        };
        let bracket = -uu * am.eval(u) - mm * bu.eval(u) + ratio * uu * total;
        (k.ln_prefactor(u) + lnc).exp() * bracket
    });
    Ok(GridFunction::from_fn(nodes, f, true))
}

/// `(Gg)'(0)` from the display: `(r(0)s'(0) - r'(0)s(0))/s(0) · ∫_0^∞ s g / w`.
pub fn linear_greens_slope_at_zero<T: Real>(k: LinearKummer<T>, g: &GridFunction<T>, nodes: Arc<Vec<T>>) -> Result<T> {
    let lo = nodes[0];
    let g1 = g.clone();
    let sgw: Evaluator<T> = Arc::new(move |v| k.s(v).unwrap_or(T::nan()) * g1.eval(v) / k.wronskian(v));
    let total = cumulate(&GridFunction::from_fn(nodes, sgw, true))?.total()?;
    Ok(-k.wronskian(lo) / k.s(lo)? * total)
}
