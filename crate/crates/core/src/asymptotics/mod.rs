//! Large-u behaviour: WKB solutions, the expansion theorem and the ruin and
//! Gerber–Shiu asymptotes.

pub mod fedoryuk;
pub mod pi;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Stage, StageExt};
use crate::gerber_shiu::{assemble, Assembly};
use crate::model::{Penalty, PremiumClass, PremiumFunction, RiskModel};
use crate::numerics::grid::{chunked_integral_to_infinity, Evaluator};
use crate::operator::fundamental::{fundamental_system, FundamentalSystem, SolutionRef};
use crate::operator::{build_operator, quadratic_roots, rhs_jet, LinearODE};
use crate::scalar::Real;

pub use fedoryuk::{corrected_log_derivatives, fedoryuk_solutions, root_jets, wkb_residual, FedoryukSolutions};
pub use pi::{pi_closed_pattern, pi_constants, pi_constants_by_determinants};

/// How much is known about a coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum CoefficientStatus {
    Known,
    /// Fitted from late-u ratios; `band` is the spread between checkpoints.
    Estimated { band: f64 },
    /// Left unnamed; ratio tests check the shape only.
    Symbolic,
}

/// `coef · shape(u)` where `shape ~ u^power e^{rate u}`.
#[derive(Clone)]
pub struct Term<T: Real> {
    pub label: String,
    pub coef: T,
    pub status: CoefficientStatus,
    pub power: T,
    pub rate: T,
    pub shape: Evaluator<T>,
    /// The quantity this term approximates, from an exact route.
    pub reference: Option<Evaluator<T>>,
}

impl<T: Real> std::fmt::Debug for Term<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Term")
            .field("label", &self.label)
            .field("coef", &self.coef)
            .field("status", &self.status)
            .field("power", &self.power)
            .field("rate", &self.rate)
            .finish()
    }
}

impl<T: Real> Term<T> {
    fn effective_coef(&self) -> T {
        match self.status {
            CoefficientStatus::Symbolic => T::one(),
            _ => self.coef,
        }
    }

    pub fn eval(&self, u: T) -> T {
        self.effective_coef() * (self.shape)(u)
    }

    /// `reference(u) / term(u)`; with a symbolic coefficient this is the
    /// implied coefficient.
    pub fn ratio(&self, u: T) -> Result<T> {
        let r = self
            .reference
            .as_ref()
            .ok_or_else(|| Error::Unsupported(format!("no reference for term `{}`", self.label)))?;
        Ok(r(u) / self.eval(u))
    }
}

#[derive(Clone, Debug)]
pub struct AsymptoticForm<T: Real> {
    pub terms: Vec<Term<T>>,
    /// Smallest checked `u` past which the leading ratio stays within 1%;
    /// extrapolated with a `1/u` law when that lies beyond `u_max`.
    pub validity: Option<T>,
    pub notes: Vec<String>,
    pub u_max: T,
}

impl<T: Real> AsymptoticForm<T> {
    pub fn eval(&self, u: T) -> T {
        self.terms.iter().map(|t| t.eval(u)).fold(T::zero(), |a, b| a + b)
    }

    /// `[(u, ratio)]` for term `i` at `fractions · u_max`.
    pub fn ratio_checkpoints(&self, i: usize, fractions: &[f64]) -> Result<Vec<(T, T)>> {
        let t = self.terms.get(i).ok_or_else(|| Error::Domain(format!("no term {i}")))?;
        fractions
            .iter()
            .map(|&f| {
                let u = T::lit(f) * self.u_max;
                Ok((u, t.ratio(u)?))
            })
            .collect()
    }

    fn with_validity(mut self) -> Self {
        let t = &self.terms[0];
        if t.reference.is_none() || t.status != CoefficientStatus::Known {
            return self;
        }
        let us: Vec<T> = (1..=40).map(|k| self.u_max * T::from_usize_lossy(k) / T::lit(40.0)).collect();
        let ok: Vec<bool> = us
            .iter()
            .map(|&u| t.ratio(u).map(|r| (r - T::one()).abs() <= T::lit(0.01)).unwrap_or(false))
            .collect();
        self.validity = ok.iter().rposition(|b| !b).map_or(Some(us[0]), |k| us.get(k + 1).copied());
        if self.validity.is_none() {
            // ratio - 1 ~ K/u
            if let Ok(r) = t.ratio(self.u_max) {
                let u = self.u_max * (r - T::one()).abs() / T::lit(0.01);
                if u.is_finite() {
                    self.validity = Some(u);
                    self.notes.push(format!("1% validity threshold extrapolated beyond u_max to {u:?}"));
                }
            }
        }
        self
    }

    pub fn report(&self, term: usize, fractions: &[f64]) -> AsymptoteReport {
        AsymptoteReport {
            terms: self
                .terms
                .iter()
                .map(|t| TermReport {
                    label: t.label.clone(),
                    coef: match t.status {
                        CoefficientStatus::Symbolic => None,
                        _ => Some(t.coef.to_f64_lossy()),
                    },
                    status: t.status,
                    power: t.power.to_f64_lossy(),
                    rate: t.rate.to_f64_lossy(),
                })
                .collect(),
            ratio_checkpoints: self
                .ratio_checkpoints(term, fractions)
                .map(|v| v.into_iter().map(|(u, r)| [u.to_f64_lossy(), r.to_f64_lossy()]).collect())
                .unwrap_or_default(),
            validity: self.validity.map(|v| v.to_f64_lossy()),
            notes: self.notes.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermReport {
    pub label: String,
    pub coef: Option<f64>,
    pub status: CoefficientStatus,
    pub power: f64,
    pub rate: f64,
}

/// JSON export of an asymptote.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoteReport {
    pub terms: Vec<TermReport>,
    pub ratio_checkpoints: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validity: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl AsymptoteReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Least-squares fit of `t'/t` to `y + β/u` on `[hi/10, hi]`.
#[derive(Clone, Copy, Debug)]
pub struct ExponentFit<T> {
    pub rate: T,
    pub power: T,
    /// Largest fit error relative to the largest `|t'/t|`.
    pub residual: T,
}

pub fn fit_exponents<T: Real>(sol: &SolutionRef<T>, hi: T) -> ExponentFit<T> {
    let k = 32;
    let a = hi / T::lit(10.0);
    let pts: Vec<(T, T)> = (0..k)
        .map(|j| {
            let u = a + (hi - a) * T::from_usize_lossy(j) / T::from_usize_lossy(k - 1);
            let d = sol.derivs(u, 1);
            (u, d[1] / d[0])
        })
        .collect();
    let (mut s11, mut s1x, mut sxx, mut s1y, mut sxy) = (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
    for &(u, e) in &pts {
        let x = T::one() / u;
        s11 += T::one();
        s1x += x;
        sxx += x * x;
        s1y += e;
        sxy += x * e;
    }
    let det = s11 * sxx - s1x * s1x;
    let rate = (sxx * s1y - s1x * sxy) / det;
    let power = (s11 * sxy - s1x * s1y) / det;
    let scale = pts.iter().map(|p| p.1.abs()).fold(T::zero(), T::max).max(T::min_positive_value());
    let residual = pts
        .iter()
        .map(|&(u, e)| (e - rate - power / u).abs())
        .fold(T::zero(), T::max)
        / scale;
    ExponentFit { rate, power, residual }
}

/// `(t_i'/t_i)(u)` for every solution.
pub fn log_derivatives<T: Real>(fs: &FundamentalSystem<T>, u: T) -> Vec<T> {
    fs.solutions
        .iter()
        .map(|s| {
            let d = s.derivs(u, 1);
            d[1] / d[0]
        })
        .collect()
}

const FIT_TOLERANCE: f64 = 1e-2;

/// The expansion theorem for a rational-Laplace model with `m = 1`:
/// `Φ ~ h_1 t_1 + K g` when `g ~ e^{-νu}` with `ν > -y_1`. The coefficient
/// `K` is `1/Π(-ν - y_i)`; the printed `Σ π_i/(y_i+ν)` is reported in the notes.
pub fn expansion_theorem41<T: Real>(model: &RiskModel<T>, fs: &FundamentalSystem<T>, nu: T) -> Result<AsymptoticForm<T>> {
    let fits: Vec<ExponentFit<T>> = fs.solutions.iter().map(|s| fit_exponents(s, fs.hi)).collect();
    let g_zero = matches!(model.penalty, Penalty::RuinIndicator);
    let mut failed = Vec::new();
    for (i, f) in fits.iter().enumerate() {
        if i >= fs.m && g_zero {
            continue;
        }
        if !(f.residual <= T::lit(FIT_TOLERANCE)) {
            failed.push(format!("(C1)-(C2): t_{} log-derivative misfits y + β/u by {:?}", i + 1, f.residual));
        }
    }
    let ys: Vec<T> = fits.iter().map(|f| f.rate).collect();
    let stable_sorted = ys[..fs.m].windows(2).all(|w| w[1] < w[0]);
    let stable_ok = stable_sorted && ys[fs.m - 1] <= T::lit(1e-6) * ys.iter().fold(T::one(), |a, y| a.max(y.abs()));
    let scale = ys.iter().fold(T::zero(), |a, y| a.max(y.abs()));
    let unstable_ok = g_zero || ys[fs.m..].iter().all(|&y| y > T::lit(1e-3) * scale);
    if !(stable_ok && unstable_ok) {
        failed.push(format!("(C3): rates {ys:?} are not ordered y_m < … < y_1 ≤ 0 < y_(m+1)"));
    }
    if !g_zero && !(nu > -ys[0]) {
        failed.push(format!("ν = {nu} does not exceed -y_1 = {}", -ys[0]));
    }
    if !failed.is_empty() {
        return Err(Error::Condition(failed.join("; ")).at(Stage::Asymptotics));
    }
    let asm = assemble(model, fs)?;
    let h = asm.gamma
        + if g_zero {
            T::zero()
        } else {
            asm.gg.stable_coefficients().stage(Stage::Asymptotics)?[0]
        };
    let mut form = AsymptoticForm {
        terms: vec![stable_term(fs, &asm, h, fits[0], g_zero)],
        validity: None,
        notes: vec![],
        u_max: fs.hi,
    };
    if !g_zero {
        let pis = pi_constants(&ys)?;
        let printed = pis.iter().zip(&ys).fold(T::zero(), |a, (&p, &y)| a + p / (y + nu));
        let k = T::one() / ys.iter().fold(T::one(), |a, &y| a * (-nu - y));
        form.notes.push(format!(
            "forcing coefficient 1/Π(-ν-y_i) = {k:?}; the printed Σ π_i/(y_i+ν) gives {printed:?}"
        ));
        form.terms.push(forcing_term(&asm, k, CoefficientStatus::Known, T::zero(), -nu, false));
    }
    Ok(form.with_validity())
}

fn stable_term<T: Real>(fs: &FundamentalSystem<T>, asm: &Assembly<T>, h: T, fit: ExponentFit<T>, exact: bool) -> Term<T> {
    let s = fs.solutions[0].clone();
    let s2 = s.clone();
    let (gamma, gg) = (asm.gamma, asm.gg.clone());
    let reference: Evaluator<T> = if exact {
        Arc::new(move |u| gamma * s2.derivs(u, 0)[0])
    } else {
        Arc::new(move |u| gamma * s2.derivs(u, 0)[0] + gg.eval(u))
    };
    Term {
        label: "h_1 s(u)".into(),
        coef: h,
        status: CoefficientStatus::Known,
        power: fit.power,
        rate: fit.rate,
        shape: Arc::new(move |u| s.derivs(u, 0)[0]),
        reference: Some(reference),
    }
}

/// `K g(u)` or `K u g(u)`, referenced against `Φ - h_1 s`.
fn forcing_term<T: Real>(asm: &Assembly<T>, k: T, status: CoefficientStatus, power: T, rate: T, times_u: bool) -> Term<T> {
    let g = asm.g.clone();
    let gg = asm.gg.clone();
    let shape: Evaluator<T> = if times_u {
        Arc::new(move |u| u * g.eval(u))
    } else {
        Arc::new(move |u| g.eval(u))
    };
    Term {
        label: if times_u { "K u g(u)".into() } else { "K g(u)".into() },
        coef: k,
        status,
        power,
        rate,
        shape,
        reference: Some(Arc::new(move |u| gg.remainder(u).unwrap_or(T::nan()))),
    }
}

fn exp_rates<T: Real>(model: &RiskModel<T>) -> Result<(T, T)> {
    model
        .exp_rates()
        .ok_or_else(|| Error::Unsupported("the premium-class asymptotes need exponential laws".into()))
}

fn class_of<T: Real>(model: &RiskModel<T>) -> Result<PremiumClass<T>> {
    model.premium.class().ok_or_else(|| {
        Error::Condition(format!(
            "premium `{}` is neither asymptotically constant nor polynomial",
            model.premium.family()
        ))
        .at(Stage::Asymptotics)
    })
}

/// Ruin asymptote for `δ = 0`, `w ≡ 1`, exponential laws:
/// `ψ ~ γ/s(0) · e^{-μu + λq(u)}/(μ p(∞) - λ)` when `p` tends to a constant and
/// `ψ ~ γ/(μ s(0)) · e^{-μu + λq(u)}/p(u)` when it grows without bound, with
/// `s(0)` the raw integral normalization of the stable solution.
pub fn ruin_asymptote<T: Real>(model: &RiskModel<T>) -> Result<AsymptoticForm<T>> {
    if model.delta != T::zero() || !matches!(model.penalty, Penalty::RuinIndicator) {
        return Err(Error::Unsupported("the ruin asymptote needs δ = 0 and w ≡ 1".into()));
    }
    let (lambda, mu) = exp_rates(model)?;
    let class = class_of(model)?;
    let ode = build_operator(model).stage(Stage::Operator)?;
    let fs = fundamental_system(&ode, model).stage(Stage::FundamentalSystem)?;
    let asm = assemble(model, &fs)?;
    let lo = fs.lo;
    let norm = asm.gamma / fs.scales[0];
    let p = model.premium.clone();
    let q_lo = p.reciprocal_integral(lo)?;
    let exponent = {
        let p = p.clone();
        move |u: T| -mu * u + lambda * (p.reciprocal_integral(u).unwrap_or(T::nan()) - q_lo)
    };
    let (coef, shape, power, rate, case): (T, Evaluator<T>, T, T, usize) = match class {
        PremiumClass::Bounded { limit } => {
            let den = mu * limit - lambda;
            if !(den > T::zero()) {
                return Err(Error::Condition(format!("μ p(∞) - λ = {den} ≤ 0")).at(Stage::Asymptotics));
            }
            (norm / den, Arc::new(move |u| exponent(u).exp()), T::zero(), -mu + lambda / limit, 1)
        }
        PremiumClass::Polynomial { degree } => {
            let p2 = p.clone();
            let power = match (&p, degree) {
                (PremiumFunction::Linear { eps, .. }, 1) => lambda / *eps - T::one(),
                _ => -T::from_usize_lossy(degree),
            };
            (norm / mu, Arc::new(move |u| exponent(u).exp() / p2.eval(u)), power, -mu, 2)
        }
    };
    let s = fs.solutions[0].clone();
    let gamma = asm.gamma;
    let form = AsymptoticForm {
        terms: vec![Term {
            label: if case == 1 {
                "C e^(-μu + λq(u))".into()
            } else {
                "C e^(-μu + λq(u)) / p(u)".into()
            },
            coef,
            status: CoefficientStatus::Known,
            power,
            rate,
            shape,
            reference: Some(Arc::new(move |u| gamma * s.derivs(u, 0)[0])),
        }],
        validity: None,
        notes: vec![format!(
            "case {case}; the prefactor (μ/λ)γ depends on how s is normalized; with s(0) = 1 it is {:?}",
            mu / lambda * gamma
        )],
        u_max: fs.hi,
    };
    Ok(form.with_validity())
}

/// `K_1 = (k_1 + k_2)/(k_1 k_2 (k_2 - k_1))` with `k_{1,2}` the roots of
/// `x² + (μ - (λ+δ)/c)x - δμ/c`.
pub fn k1_constant<T: Real>(c: T, lambda: T, mu: T, delta: T) -> Result<T> {
    let (k1, k2) = quadratic_roots(mu - (lambda + delta) / c, -delta * mu / c)?;
    Ok((k1 + k2) / (k1 * k2 * (k2 - k1)))
}

/// Gerber–Shiu asymptote for `δ > 0`: `Φ ~ h_1 s + K_1 g` for asymptotically
/// constant premiums, `Φ ~ h_1 s + K_2 u g` for linear ones and
/// `Φ ~ h_1 s + K g` for higher-degree polynomials, with `h_1` the full
/// coefficient of `s` in `γ s + Gg`.
pub fn gs_asymptote<T: Real>(model: &RiskModel<T>) -> Result<AsymptoticForm<T>> {
    if !(model.delta > T::zero()) {
        return Err(Error::Unsupported("the Gerber–Shiu asymptote needs δ > 0; use the ruin asymptote".into()));
    }
    let (lambda, mu) = exp_rates(model)?;
    let class = class_of(model)?;
    let ode = build_operator(model).stage(Stage::Operator)?;
    let fs = fundamental_system(&ode, model).stage(Stage::FundamentalSystem)?;
    let asm = assemble(model, &fs)?;
    let g_zero = matches!(model.penalty, Penalty::RuinIndicator);
    let h1 = asm.gamma
        + if g_zero {
            T::zero()
        } else {
            asm.gg.stable_coefficients().stage(Stage::Asymptotics)?[0]
        };
    let fit = fit_exponents(&fs.solutions[0], fs.hi);
    let mut form = AsymptoticForm {
        terms: vec![stable_term(&fs, &asm, h1, fit, g_zero)],
        validity: None,
        notes: vec![],
        u_max: fs.hi,
    };
    if g_zero {
        form.notes.push("g ≡ 0, so Φ = γ s exactly".into());
        return Ok(form.with_validity());
    }
    let hi = fs.hi;
    let gj = rhs_jet(model, hi, 1)?;
    let g_rate = gj.coeffs()[1] / gj.value();
    let (sigma, rho) = ode.characteristic_roots(hi)?;
    match class {
        PremiumClass::Bounded { limit } => {
            let k1 = k1_constant(limit, lambda, mu, model.delta)?;
            let (s_inf, r_inf) = quadratic_roots(mu - (lambda + model.delta) / limit, -model.delta * mu / limit)?;
            let exact = T::one() / ((s_inf - g_rate) * (r_inf - g_rate));
            form.notes.push(format!(
                "K_1 from the root formula is {k1:?}; the particular solution for g ~ e^({g_rate:?} u) has coefficient {exact:?}"
            ));
            form.terms.push(forcing_term(&asm, k1, CoefficientStatus::Known, T::zero(), g_rate, false));
        }
        PremiumClass::Polynomial { degree } => {
            let times_u = degree == 1;
            let mut t = forcing_term(&asm, T::nan(), CoefficientStatus::Symbolic, T::zero(), g_rate, times_u);
            let r1 = t.ratio(T::lit(0.75) * hi)?;
            let r2 = t.ratio(T::lit(0.9) * hi)?;
            t.coef = r2;
            t.status = CoefficientStatus::Estimated {
                band: ((r2 - r1).abs() / r2.abs()).to_f64_lossy(),
            };
            form.notes.push(format!(
                "coefficient of {} estimated from late ratios; local roots at u_max are ({sigma:?}, {rho:?})",
                t.label
            ));
            form.terms.push(t);
        }
    }
    Ok(form.with_validity())
}

/// `(∫_1^∞ |a_1|, ∫_1^∞ |a_0|)` for the deviations `a_k = c_k(u) - c_k(∞)` of
/// the operator coefficients from their limits. A `Divergence` error means the
/// constant-coefficient limit does not fix the solutions up to `1 + o(1)`.
pub fn coefficient_perturbation_integrals<T: Real>(ode: &LinearODE<T>, limits: (T, T)) -> Result<(T, T)> {
    let int = |k: usize, lim: T| {
        chunked_integral_to_infinity(|u| (ode.coefficients(u)[k] - lim).abs(), T::one(), T::lit(8.0)).map_err(|e| match e {
            Error::Tail(_) => Error::Divergence(format!("∫_1^∞ |a_{k}(u)| du does not converge")),
            e => e,
        })
    };
    Ok((int(1, limits.1)?, int(0, limits.0)?))
}

/// `∫_1^x |a_k|` for `k = 1, 0`, to watch how the integrals grow.
pub fn coefficient_perturbation_integrals_to<T: Real>(ode: &LinearODE<T>, limits: (T, T), x: T) -> Result<(T, T)> {
    let q = crate::numerics::quadrature::Quadrature::relative(T::lit(1e-10));
    let up = crate::numerics::quadrature::Upper::Finite(x);
    let a1 = q.integrate(|u| (ode.coefficients(u)[1] - limits.1).abs(), T::one(), up)?.value;
    let a0 = q.integrate(|u| (ode.coefficients(u)[0] - limits.0).abs(), T::one(), up)?.value;
    Ok((a1, a0))
}

/// The limiting coefficients `(c_0(∞), c_1(∞)) = (-δμ/c, μ - (λ+δ)/c)` of an
/// asymptotically constant premium.
pub fn limiting_coefficients<T: Real>(model: &RiskModel<T>) -> Result<(T, T)> {
    let (lambda, mu) = exp_rates(model)?;
    match class_of(model)? {
        PremiumClass::Bounded { limit } => Ok((-model.delta * mu / limit, mu - (lambda + model.delta) / limit)),
        PremiumClass::Polynomial { .. } => Err(Error::Condition("the premium has no finite limit".into())),
    }
}

#[cfg(test)]
mod tests;
