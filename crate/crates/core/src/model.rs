//! Problem instances: premium rule, claim and interclaim laws, discount rate
//! and penalty, plus sanity checks on them.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::grid::Evaluator;
use crate::numerics::jet::Jet;
use crate::numerics::quadrature::{Quadrature, Upper};
use crate::numerics::roots::poly_roots;
use crate::scalar::Real;

/// Lower end of the working domain for premiums singular at zero.
pub const DEFAULT_U_MIN: f64 = 1e-3;
const VALIDATION_POINTS: usize = 512;

/// User-supplied premium rule. `dp` is optional; it is replaced by central
/// differences when absent.
#[derive(Clone)]
pub struct CustomPremium<T> {
    pub label: String,
    pub p: Evaluator<T>,
    pub dp: Option<Evaluator<T>>,
    /// Limit of `p` at infinity when finite.
    pub limit: Option<T>,
}

impl<T> fmt::Debug for CustomPremium<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Custom({})", self.label)
    }
}

#[derive(Clone, Debug)]
pub enum PremiumFunction<T> {
    Constant { c: T },
    Linear { c: T, eps: T },
    /// `c (1 + e^{-u})`
    ExpDecay { c: T },
    /// `c + 1/(1 + ε u)`
    Rational { c: T, eps: T },
    /// `c + u²`
    Quadratic { c: T },
    /// `c e^{ε/u}`
    ExpRecip { c: T, eps: T },
    /// `c + Σ ε_i u^i`, `i = 1..=l`
    Polynomial { c: T, eps: Vec<T> },
    Custom(CustomPremium<T>),
}

/// Large-u behaviour of a premium rule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PremiumClass<T> {
    /// Tends to a finite positive constant.
    Bounded { limit: T },
    /// Grows like a polynomial of degree `l`.
    Polynomial { degree: usize },
}

impl<T: Real> PremiumFunction<T> {
    pub fn family(&self) -> &'static str {
        match self {
            PremiumFunction::Constant { .. } => "constant",
            PremiumFunction::Linear { .. } => "linear",
            PremiumFunction::ExpDecay { .. } => "exp_decay",
            PremiumFunction::Rational { .. } => "rational",
            PremiumFunction::Quadratic { .. } => "quadratic",
            PremiumFunction::ExpRecip { .. } => "exp_recip",
            PremiumFunction::Polynomial { .. } => "polynomial",
            PremiumFunction::Custom(_) => "custom",
        }
    }

    pub fn base_rate(&self) -> Option<T> {
        match self {
            PremiumFunction::Constant { c }
            | PremiumFunction::Linear { c, .. }
            | PremiumFunction::ExpDecay { c }
            | PremiumFunction::Rational { c, .. }
            | PremiumFunction::Quadratic { c }
            | PremiumFunction::ExpRecip { c, .. }
            | PremiumFunction::Polynomial { c, .. } => Some(*c),
            PremiumFunction::Custom(_) => None,
        }
    }

    /// Whether the rule is singular at `u = 0`, so the domain must start later.
    pub fn singular_at_zero(&self) -> bool {
        matches!(self, PremiumFunction::ExpRecip { eps, .. } if *eps != T::zero())
    }

    pub fn eval(&self, u: T) -> T {
        let one = T::one();
        match self {
            PremiumFunction::Constant { c } => *c,
            PremiumFunction::Linear { c, eps } => *c + *eps * u,
            PremiumFunction::ExpDecay { c } => *c * (one + (-u).exp()),
            PremiumFunction::Rational { c, eps } => *c + one / (one + *eps * u),
            PremiumFunction::Quadratic { c } => *c + u * u,
            PremiumFunction::ExpRecip { c, eps } => *c * (*eps / u).exp(),
            PremiumFunction::Polynomial { c, eps } => {
                let mut acc = T::zero();
                for e in eps.iter().rev() {
                    acc = (acc + *e) * u;
                }
                *c + acc
            }
            PremiumFunction::Custom(cp) => (cp.p)(u),
        }
    }

    pub fn derivative(&self, u: T) -> T {
        self.jet(u, 1).derivative(1)
    }

    /// Taylor jet of `p` at `u` up to the given order.
    pub fn jet(&self, u: T, order: usize) -> Jet<T> {
        let x = Jet::variable(u, order);
        let one = T::one();
        match self {
            PremiumFunction::Constant { c } => Jet::constant(*c, order),
            PremiumFunction::Linear { c, eps } => x.scale(*eps).add_scalar(*c),
            PremiumFunction::ExpDecay { c } => x.scale(-one).exp().add_scalar(one).scale(*c),
            PremiumFunction::Rational { c, eps } => x.scale(*eps).add_scalar(one).recip().add_scalar(*c),
            PremiumFunction::Quadratic { c } => (x.clone() * x).add_scalar(*c),
            PremiumFunction::ExpRecip { c, eps } => x.recip().scale(*eps).exp().scale(*c),
            PremiumFunction::Polynomial { c, eps } => {
                let mut acc = Jet::constant(T::zero(), order);
                for e in eps.iter().rev() {
                    acc = acc.add_scalar(*e) * x.clone();
                }
                acc.add_scalar(*c)
            }
            PremiumFunction::Custom(cp) => custom_jet(cp, u, order),
        }
    }

    /// `q(x) = ∫_0^x dy / p(y)`.
    pub fn reciprocal_integral(&self, x: T) -> Result<T> {
        if x < T::zero() {
            return Err(Error::Domain(format!("q(x) needs x ≥ 0, got {x}")));
        }
        let one = T::one();
        match self {
            PremiumFunction::Constant { c } => Ok(x / *c),
            PremiumFunction::Linear { c, eps } if *eps != T::zero() => Ok((*eps * x / *c).ln_1p() / *eps),
            PremiumFunction::Linear { c, .. } => Ok(x / *c),
            PremiumFunction::Quadratic { c } => {
                let r = c.sqrt();
                Ok((x / r).atan() / r)
            }
            PremiumFunction::ExpDecay { c } => {
                // ln((e^x + 1)/2) = x + ln((1 + e^{-x})/2)
                Ok((x + ((-x).exp().ln_1p() - T::LN_2())) / *c)
            }
            PremiumFunction::Rational { c, eps } if *eps != T::zero() => {
                let c = *c;
                let e = *eps;
                Ok(x / c - ((c * e * x) / (c + one)).ln_1p() / (e * c * c))
            }
            _ => {
                if x == T::zero() {
                    return Ok(T::zero());
                }
                let q = Quadrature::relative(T::lit(1e-13));
                match q.integrate(|y| one / self.eval(y), T::zero(), Upper::Finite(x)) {
                    Ok(r) if r.value.is_finite() => Ok(r.value),
                    Ok(_) | Err(Error::NonConvergence { .. }) | Err(Error::Domain(_)) => Err(Error::Divergence(format!(
                        "∫_0^{x} dy/p(y) does not converge for the {} premium",
                        self.family()
                    ))),
                    Err(e) => Err(e),
                }
            }
        }
    }

    /// Large-u class of the premium, when it can be decided.
    pub fn class(&self) -> Option<PremiumClass<T>> {
        match self {
            PremiumFunction::Constant { c }
            | PremiumFunction::ExpDecay { c }
            | PremiumFunction::Rational { c, .. }
            | PremiumFunction::ExpRecip { c, .. } => Some(PremiumClass::Bounded { limit: *c }),
            PremiumFunction::Linear { c, eps } => Some(if *eps == T::zero() {
                PremiumClass::Bounded { limit: *c }
            } else {
                PremiumClass::Polynomial { degree: 1 }
            }),
            PremiumFunction::Quadratic { .. } => Some(PremiumClass::Polynomial { degree: 2 }),
            PremiumFunction::Polynomial { c, eps } => {
                match eps.iter().rposition(|e| *e != T::zero()) {
                    Some(i) => Some(PremiumClass::Polynomial { degree: i + 1 }),
                    None => Some(PremiumClass::Bounded { limit: *c }),
                }
            }
            PremiumFunction::Custom(cp) => cp.limit.map(|limit| PremiumClass::Bounded { limit }),
        }
    }

    fn check_params(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Validation(msg));
        let finite = |v: T, name: &str| -> Result<()> {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::Validation(format!("premium parameter {name} is not finite")))
            }
        };
        if let Some(c) = self.base_rate() {
            finite(c, "c")?;
            if !(c > T::zero()) && !matches!(self, PremiumFunction::Quadratic { .. } | PremiumFunction::Rational { .. }) {
                return bad(format!("premium base rate c must be positive, got {c}"));
            }
        }
        match self {
            PremiumFunction::Linear { eps, .. } | PremiumFunction::Rational { eps, .. } => {
                finite(*eps, "eps")?;
                if *eps < T::zero() {
                    return bad(format!("eps must be nonnegative for the {} premium, got {eps}", self.family()));
                }
            }
            PremiumFunction::ExpRecip { eps, .. } => finite(*eps, "eps")?,
            PremiumFunction::Polynomial { eps, .. } => {
                for e in eps {
                    finite(*e, "eps_list")?;
                }
            }
            _ => {}
        }
        Ok(())
    }
}

fn custom_jet<T: Real>(cp: &CustomPremium<T>, u: T, order: usize) -> Jet<T> {
    let h = T::lit(1e-4) * u.abs().max(T::one());
    let d1 = |x: T| match &cp.dp {
        Some(dp) => dp(x),
        None => ((cp.p)(x + h) - (cp.p)(x - h)) / (h + h),
    };
    let mut derivs = vec![(cp.p)(u)];
    if order >= 1 {
        derivs.push(d1(u));
    }
    if order >= 2 {
        derivs.push((d1(u + h) - d1(u - h)) / (h + h));
    }
    if order >= 3 {
        derivs.push((d1(u + h) - T::lit(2.0) * d1(u) + d1(u - h)) / (h * h));
    }
    // beyond third order the custom rule is treated as locally cubic
    derivs.resize(order + 1, T::zero());
    Jet::from_derivatives(&derivs)
}

/// Roots of a monic polynomial given by its lower coefficients.
fn monic_roots<T: Real>(lower: &[T]) -> Result<Vec<Complex<T>>> {
    let mut c = lower.to_vec();
    c.push(T::one());
    poly_roots(&c)
}

fn check_rational_law<T: Real>(lower: &[T], name: &str) -> Result<()> {
    if lower.is_empty() {
        return Err(Error::Validation(format!("{name} polynomial needs at least one coefficient")));
    }
    if !(lower[0] > T::zero()) {
        return Err(Error::Validation(format!("{name}: constant coefficient must be positive")));
    }
    let roots = monic_roots(lower)?;
    if let Some(r) = roots.iter().find(|r| !(r.re < T::zero())) {
        return Err(Error::Validation(format!(
            "{name}: root {} + {}i does not have negative real part",
            r.re, r.im
        )));
    }
    Ok(())
}

/// Claim size law. For `RationalLaplace` the Laplace transform of the density
/// is `β_0 / L_X(s)` with `L_X(s) = s^m + β_{m-1} s^{m-1} + … + β_0`.
#[derive(Clone, Debug, PartialEq)]
pub enum ClaimLaw<T> {
    Exponential { mu: T },
    RationalLaplace { beta: Vec<T> },
}

/// Interclaim time law, `α_0 / L_τ(s)` analogously.
#[derive(Clone, Debug, PartialEq)]
pub enum InterclaimLaw<T> {
    Exponential { lambda: T },
    RationalLaplace { alpha: Vec<T> },
}

/// A law whose Laplace transform is `a_0 / L(s)`, handled through the roots
/// of `L`.
#[derive(Clone, Debug)]
pub struct RationalLaw<T> {
    /// Lower coefficients of the monic polynomial `L`.
    pub lower: Vec<T>,
}

impl<T: Real> RationalLaw<T> {
    /// Full ascending coefficient vector of `L` (including the leading 1).
    pub fn poly(&self) -> Vec<T> {
        let mut c = self.lower.clone();
        c.push(T::one());
        c
    }

    pub fn order(&self) -> usize {
        self.lower.len()
    }

    pub fn mean(&self) -> T {
        // -d/ds [a_0/L(s)] at 0 = L'(0)/a_0
        let l1 = if self.lower.len() > 1 { self.lower[1] } else { T::one() };
        l1 / self.lower[0]
    }

    /// Rates `θ_k = -r_k` of the exponential stages when all roots are real.
    pub fn stage_rates(&self) -> Result<Vec<T>> {
        let roots = monic_roots(&self.lower)?;
        if roots.iter().any(|r| r.im != T::zero()) {
            return Err(Error::Unsupported(
                "law has complex roots; it is not a sum of exponential stages".into(),
            ));
        }
        Ok(roots.iter().map(|r| -r.re).collect())
    }

    /// Density as `Σ A_k e^{r_k x}` (distinct roots).
    pub fn density_terms(&self) -> Result<Vec<(Complex<T>, Complex<T>)>> {
        let roots = monic_roots(&self.lower)?;
        let poly = self.poly();
        let a0 = Complex::new(self.lower[0], T::zero());
        let mut out = Vec::with_capacity(roots.len());
        for (i, &r) in roots.iter().enumerate() {
            if roots.iter().enumerate().any(|(j, &s)| j != i && (r - s).norm() < T::lit(1e-9) * (T::one() + r.norm())) {
                return Err(Error::Unsupported("repeated roots in a rational Laplace law".into()));
            }
            // L'(r)
            let mut d = Complex::new(T::zero(), T::zero());
            let n = poly.len() - 1;
            for k in (1..=n).rev() {
                d = d * r + Complex::new(poly[k] * T::from_usize_lossy(k), T::zero());
            }
            out.push((a0 / d, r));
        }
        Ok(out)
    }

    pub fn density(&self, x: T) -> Result<T> {
        Ok(self
            .density_terms()?
            .iter()
            .map(|(a, r)| (*a * (*r * x).exp()).re)
            .sum())
    }

    pub fn survival(&self, x: T) -> Result<T> {
        Ok(self
            .density_terms()?
            .iter()
            .map(|(a, r)| (-(*a / *r) * (*r * x).exp()).re)
            .sum())
    }
}

impl<T: Real> ClaimLaw<T> {
    pub fn rational(&self) -> RationalLaw<T> {
        match self {
            ClaimLaw::Exponential { mu } => RationalLaw { lower: vec![*mu] },
            ClaimLaw::RationalLaplace { beta } => RationalLaw { lower: beta.clone() },
        }
    }

    pub fn mean(&self) -> T {
        self.rational().mean()
    }

    pub fn order(&self) -> usize {
        self.rational().order()
    }

    pub fn exponential_rate(&self) -> Option<T> {
        match self {
            ClaimLaw::Exponential { mu } => Some(*mu),
            ClaimLaw::RationalLaplace { beta } if beta.len() == 1 => Some(beta[0]),
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            ClaimLaw::Exponential { mu } if !(*mu > T::zero() && mu.is_finite()) => {
                Err(Error::Validation(format!("claim rate mu must be positive, got {mu}")))
            }
            ClaimLaw::Exponential { .. } => Ok(()),
            ClaimLaw::RationalLaplace { beta } => check_rational_law(beta, "claim law"),
        }
    }
}

impl<T: Real> InterclaimLaw<T> {
    pub fn rational(&self) -> RationalLaw<T> {
        match self {
            InterclaimLaw::Exponential { lambda } => RationalLaw { lower: vec![*lambda] },
            InterclaimLaw::RationalLaplace { alpha } => RationalLaw { lower: alpha.clone() },
        }
    }

    pub fn mean(&self) -> T {
        self.rational().mean()
    }

    pub fn order(&self) -> usize {
        self.rational().order()
    }

    pub fn exponential_rate(&self) -> Option<T> {
        match self {
            InterclaimLaw::Exponential { lambda } => Some(*lambda),
            InterclaimLaw::RationalLaplace { alpha } if alpha.len() == 1 => Some(alpha[0]),
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            InterclaimLaw::Exponential { lambda } if !(*lambda > T::zero() && lambda.is_finite()) => Err(
                Error::Validation(format!("claim intensity lambda must be positive, got {lambda}")),
            ),
            InterclaimLaw::Exponential { .. } => Ok(()),
            InterclaimLaw::RationalLaplace { alpha } => check_rational_law(alpha, "interclaim law"),
        }
    }
}

pub type BivariateEvaluator<T> = Arc<dyn Fn(T, T) -> T + Send + Sync>;

/// Penalty `w(x, y)` on the surplus before ruin `x` and the deficit `y`.
#[derive(Clone)]
pub enum Penalty<T> {
    RuinIndicator,
    ExpSurplus { nu: T },
    Custom { label: String, w: BivariateEvaluator<T> },
}

impl<T: fmt::Debug> fmt::Debug for Penalty<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Penalty::RuinIndicator => write!(f, "RuinIndicator"),
            Penalty::ExpSurplus { nu } => write!(f, "ExpSurplus {{ nu: {nu:?} }}"),
            Penalty::Custom { label, .. } => write!(f, "Custom({label})"),
        }
    }
}

impl<T: Real> Penalty<T> {
    pub fn eval(&self, x: T, y: T) -> T {
        match self {
            Penalty::RuinIndicator => T::one(),
            Penalty::ExpSurplus { nu } => (-*nu * x).exp(),
            Penalty::Custom { w, .. } => w(x, y),
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            Penalty::RuinIndicator => "ruin_indicator",
            Penalty::ExpSurplus { .. } => "exp_surplus",
            Penalty::Custom { .. } => "custom",
        }
    }
}

/// A complete problem instance. Values are immutable after construction.
#[derive(Clone, Debug)]
pub struct RiskModel<T> {
    pub premium: PremiumFunction<T>,
    pub claims: ClaimLaw<T>,
    pub interclaims: InterclaimLaw<T>,
    pub delta: T,
    pub penalty: Penalty<T>,
    pub u_max: T,
    /// Start of the working domain; zero unless the premium is singular there.
    pub u_min: Option<T>,
}

impl<T: Real> RiskModel<T> {
    /// Compound Poisson model with exponential claims.
    pub fn exp_exp(premium: PremiumFunction<T>, lambda: T, mu: T, delta: T, penalty: Penalty<T>, u_max: T) -> Self {
        Self {
            premium,
            claims: ClaimLaw::Exponential { mu },
            interclaims: InterclaimLaw::Exponential { lambda },
            delta,
            penalty,
            u_max,
            u_min: None,
        }
    }

    pub fn with_delta(mut self, delta: T) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_penalty(mut self, penalty: Penalty<T>) -> Self {
        self.penalty = penalty;
        self
    }

    pub fn with_u_max(mut self, u_max: T) -> Self {
        self.u_max = u_max;
        self
    }

    /// The ruin-probability reduction: `δ = 0`, `w ≡ 1`.
    pub fn ruin_model(&self) -> Self {
        self.clone().with_delta(T::zero()).with_penalty(Penalty::RuinIndicator)
    }

    pub fn domain_start(&self) -> T {
        match self.u_min {
            Some(u) => u,
            None if self.premium.singular_at_zero() => T::lit(DEFAULT_U_MIN),
            None => T::zero(),
        }
    }

    /// `(λ, μ)` when both laws are exponential.
    pub fn exp_rates(&self) -> Option<(T, T)> {
        Some((self.interclaims.exponential_rate()?, self.claims.exponential_rate()?))
    }

    pub fn lambda(&self) -> Result<T> {
        self.interclaims
            .exponential_rate()
            .ok_or_else(|| Error::Unsupported("this step needs exponential interclaim times".into()))
    }

    pub fn mu(&self) -> Result<T> {
        self.claims
            .exponential_rate()
            .ok_or_else(|| Error::Unsupported("this step needs exponential claims".into()))
    }

    /// Mean claim outflow per unit time, `E[X]/E[τ]`.
    pub fn claim_outflow_rate(&self) -> T {
        self.claims.mean() / self.interclaims.mean()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta >= T::zero() && self.delta.is_finite()) {
            return Err(Error::Validation(format!("delta must be ≥ 0, got {}", self.delta)));
        }
        if !(self.u_max > T::zero() && self.u_max.is_finite()) {
            return Err(Error::Validation(format!("u_max must be positive, got {}", self.u_max)));
        }
        let lo = self.domain_start();
        if !(lo >= T::zero() && lo < self.u_max) {
            return Err(Error::Validation(format!("u_min {lo} must lie in [0, u_max)")));
        }
        if let Penalty::ExpSurplus { nu } = self.penalty {
            if !(nu >= T::zero() && nu.is_finite()) {
                return Err(Error::Validation(format!("penalty nu must be ≥ 0, got {nu}")));
            }
        }
        self.premium.check_params()?;
        self.claims.validate()?;
        self.interclaims.validate()?;
        for u in validation_grid(lo, self.u_max) {
            let p = self.premium.eval(u);
            if !(p > T::zero() && p.is_finite()) {
                return Err(Error::Validation(format!(
                    "premium must be positive; p({u}) = {p} for the {} family",
                    self.premium.family()
                )));
            }
        }
        Ok(())
    }
}

/// 512 log-spaced points over `[lo, hi]` (the first point is `lo` itself).
fn validation_grid<T: Real>(lo: T, hi: T) -> Vec<T> {
    let start = if lo > T::zero() { lo } else { T::lit(1e-6) * hi };
    let ratio = (hi / start).ln() / T::from_usize_lossy(VALIDATION_POINTS - 2);
    let mut v = vec![lo];
    v.extend((0..VALIDATION_POINTS - 1).map(|i| start * (ratio * T::from_usize_lossy(i)).exp()));
    v
}

/// Net-profit check: `p(u) > E[X]/E[τ] + ς` on `[u_check, u_max]`.
pub fn validate_drift<T: Real>(model: &RiskModel<T>, varsigma: T, u_check: T) -> Result<bool> {
    if !(varsigma > T::zero()) || !(u_check > T::zero()) {
        return Err(Error::Domain("validate_drift needs ς > 0 and u_check > 0".into()));
    }
    let rate = model.claim_outflow_rate();
    if !rate.is_finite() {
        return Err(Error::Domain("claim or interclaim mean is undefined".into()));
    }
    let hi = model.u_max.max(u_check);
    let n = VALIDATION_POINTS;
    let ok = (0..n).all(|i| {
        let u = u_check + (hi - u_check) * T::from_usize_lossy(i) / T::from_usize_lossy(n - 1);
        model.premium.eval(u) > rate + varsigma
    });
    Ok(ok)
}

/// `q(x) = ∫_0^x dy/p(y)`.
pub fn premium_reciprocal_integral<T: Real>(p: &PremiumFunction<T>, x: T) -> Result<T> {
    p.reciprocal_integral(x)
}

// ---------------------------------------------------------------------------
// JSON model files

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PremiumSpec {
    pub family: String,
    pub c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_list: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClaimSpec {
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterclaimSpec {
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PenaltySpec {
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
}

/// On-disk model description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub premium: PremiumSpec,
    pub claims: ClaimSpec,
    pub interclaims: InterclaimSpec,
    #[serde(default)]
    pub delta: f64,
    #[serde(default = "default_penalty")]
    pub penalty: PenaltySpec,
    pub u_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_min: Option<f64>,
}

fn default_penalty() -> PenaltySpec {
    PenaltySpec {
        family: "ruin_indicator".into(),
        nu: None,
    }
}

fn need<V: Clone>(v: &Option<V>, what: &str, family: &str) -> Result<V> {
    v.clone()
        .ok_or_else(|| Error::Validation(format!("{family} needs field `{what}`")))
}

impl ModelSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model spec serializes")
    }

    pub fn to_model<T: Real>(&self) -> Result<RiskModel<T>> {
        let l = |v: f64| T::lit(v);
        let ps = &self.premium;
        let c = l(ps.c);
        let eps = || need(&ps.eps, "eps", &ps.family).map(l);
        let premium = match ps.family.as_str() {
            "constant" => PremiumFunction::Constant { c },
            "linear" => PremiumFunction::Linear { c, eps: eps()? },
            "exp_decay" => PremiumFunction::ExpDecay { c },
            "rational" => PremiumFunction::Rational { c, eps: eps()? },
            "quadratic" => PremiumFunction::Quadratic { c },
            "exp_recip" => PremiumFunction::ExpRecip { c, eps: eps()? },
            "polynomial" => PremiumFunction::Polynomial {
                c,
                eps: need(&ps.eps_list, "eps_list", &ps.family)?.into_iter().map(l).collect(),
            },
            other => return Err(Error::Validation(format!("unknown premium family `{other}`"))),
        };
        let cs = &self.claims;
        let claims = match cs.family.as_str() {
            "exponential" => ClaimLaw::Exponential {
                mu: l(need(&cs.mu, "mu", &cs.family)?),
            },
            "rational_laplace" => ClaimLaw::RationalLaplace {
                beta: need(&cs.beta, "beta", &cs.family)?.into_iter().map(l).collect(),
            },
            other => return Err(Error::Validation(format!("unknown claim family `{other}`"))),
        };
        let is = &self.interclaims;
        let interclaims = match is.family.as_str() {
            "exponential" => InterclaimLaw::Exponential {
                lambda: l(need(&is.lambda, "lambda", &is.family)?),
            },
            "rational_laplace" => InterclaimLaw::RationalLaplace {
                alpha: need(&is.alpha, "alpha", &is.family)?.into_iter().map(l).collect(),
            },
            other => return Err(Error::Validation(format!("unknown interclaim family `{other}`"))),
        };
        let pen = &self.penalty;
        let penalty = match pen.family.as_str() {
            "ruin_indicator" => Penalty::RuinIndicator,
            "exp_surplus" => Penalty::ExpSurplus {
                nu: l(need(&pen.nu, "nu", &pen.family)?),
            },
            other => return Err(Error::Validation(format!("unknown penalty family `{other}`"))),
        };
        let model = RiskModel {
            premium,
            claims,
            interclaims,
            delta: l(self.delta),
            penalty,
            u_max: l(self.u_max),
            u_min: self.u_min.map(l),
        };
        model.validate()?;
        Ok(model)
    }

    /// Spec of a model built from built-in families; `None` for custom parts.
    pub fn from_model<T: Real>(m: &RiskModel<T>) -> Option<Self> {
        let f = |v: T| v.to_f64_lossy();
        let (family, c, eps, eps_list) = match &m.premium {
            PremiumFunction::Constant { c } => ("constant", *c, None, None),
            PremiumFunction::Linear { c, eps } => ("linear", *c, Some(f(*eps)), None),
            PremiumFunction::ExpDecay { c } => ("exp_decay", *c, None, None),
            PremiumFunction::Rational { c, eps } => ("rational", *c, Some(f(*eps)), None),
            PremiumFunction::Quadratic { c } => ("quadratic", *c, None, None),
            PremiumFunction::ExpRecip { c, eps } => ("exp_recip", *c, Some(f(*eps)), None),
            PremiumFunction::Polynomial { c, eps } => ("polynomial", *c, None, Some(eps.iter().map(|e| f(*e)).collect())),
            PremiumFunction::Custom(_) => return None,
        };
        let claims = match &m.claims {
            ClaimLaw::Exponential { mu } => ClaimSpec {
                family: "exponential".into(),
                mu: Some(f(*mu)),
                beta: None,
            },
            ClaimLaw::RationalLaplace { beta } => ClaimSpec {
                family: "rational_laplace".into(),
                mu: None,
                beta: Some(beta.iter().map(|b| f(*b)).collect()),
            },
        };
        let interclaims = match &m.interclaims {
            InterclaimLaw::Exponential { lambda } => InterclaimSpec {
                family: "exponential".into(),
                lambda: Some(f(*lambda)),
                alpha: None,
            },
            InterclaimLaw::RationalLaplace { alpha } => InterclaimSpec {
                family: "rational_laplace".into(),
                lambda: None,
                alpha: Some(alpha.iter().map(|a| f(*a)).collect()),
            },
        };
        let penalty = match &m.penalty {
            Penalty::RuinIndicator => default_penalty(),
            Penalty::ExpSurplus { nu } => PenaltySpec {
                family: "exp_surplus".into(),
                nu: Some(f(*nu)),
            },
            Penalty::Custom { .. } => return None,
        };
        Some(ModelSpec {
            premium: PremiumSpec {
                family: family.into(),
                c: f(c),
                eps,
                eps_list,
            },
            claims,
            interclaims,
            delta: f(m.delta),
            penalty,
            u_max: f(m.u_max),
            u_min: m.u_min.map(f),
        })
    }
}
