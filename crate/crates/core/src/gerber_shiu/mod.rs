//! Assembly of `Φ = γ s + Gg` and the closed-form references.

pub mod closed_form;
pub mod omega;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Stage, StageExt};
use crate::greens::{greens_collapsed, GreensOperator, GreensResult};
use crate::model::{ModelSpec, Penalty, PremiumFunction, RiskModel};
use crate::numerics::grid::{cumulate, default_nodes, Evaluator, GridFunction, DEFAULT_GRID_NODES};
use crate::operator::fundamental::{fundamental_system, FundamentalSystem, SystemPath};
use crate::operator::{build_operator, build_rhs, LinearODE};
use crate::scalar::Real;

use closed_form::{
    linear_greens_display, linear_greens_slope_at_zero, ruin_classical, ruin_exponential_premium, ruin_quadratic_premium,
    ruin_rational_premium, ruin_segerdahl, GammaOrder, LinearKummer, TichyRuin,
};
pub use omega::omega;

/// Which computation produced a solution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    ClosedForm,
    GreensOperator,
    Asymptotic,
    MonteCarlo,
}

/// What the caller asks [`phi`] for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RouteChoice {
    Auto,
    Greens,
    ClosedForm,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `sup |T Φ - g| / sup |g|` (absolute when `g ≡ 0`) on interior nodes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    /// `|Φ(u_max)| / sup |Φ|`, which should be small under the stability condition.
    pub tail: f64,
    /// Name of the closed form used, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formula: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system_path: Option<SystemPath>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct GerberShiuSolution<T: Real> {
    pub phi: GridFunction<T>,
    pub gamma: T,
    pub s: GridFunction<T>,
    pub gg: GridFunction<T>,
    pub route: Route,
    pub diagnostics: Diagnostics,
}

impl<T: Real> GerberShiuSolution<T> {
    pub fn eval(&self, u: T) -> T {
        self.phi.eval(u)
    }

    /// Values for presentation, clamped to `[0, 1]` when `Φ` is a probability.
    pub fn presented(&self, u: T, probability: bool) -> T {
        let v = self.eval(u);
        if probability {
            v.max(T::zero()).min(T::one())
        } else {
            v
        }
    }

    pub fn report(&self, model: &RiskModel<T>) -> SolutionReport {
        SolutionReport {
            model: ModelSpec::from_model(model),
            route: self.route,
            gamma: self.gamma.to_f64_lossy(),
            grid: self
                .phi
                .nodes()
                .iter()
                .zip(self.phi.values())
                .map(|(u, v)| [u.to_f64_lossy(), v.to_f64_lossy()])
                .collect(),
            diagnostics: self.diagnostics.clone(),
        }
    }
}

/// JSON export of a solution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionReport {
    pub model: Option<ModelSpec>,
    pub route: Route,
    pub gamma: f64,
    pub grid: Vec<[f64; 2]>,
    pub diagnostics: Diagnostics,
}

impl SolutionReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// `γ = [λω(0) + p(0)(Gg)'(0)] / [(λ+δ)s(0) - p(0)s'(0)]`, from the
/// integro-differential equation at the left end of the domain.
pub fn gamma_constant<T: Real>(model: &RiskModel<T>, fs: &FundamentalSystem<T>, gg: &GreensResult<T>) -> Result<T> {
    if fs.m != 1 || fs.n != 1 {
        return Err(Error::Unsupported(format!(
            "the matching constant is implemented for (m, n) = (1, 1), not ({}, {})",
            fs.m, fs.n
        )));
    }
    let lo = fs.lo;
    let dgg = gg.derivs(lo, 1)?[1];
    gamma_from_parts(model, lo, &fs.solutions[0].derivs(lo, 1), dgg)
}

fn gamma_from_parts<T: Real>(model: &RiskModel<T>, lo: T, s: &[T], dgg: T) -> Result<T> {
    let lambda = model.lambda()?;
    let w0 = omega::omega_jet(model, lo, 0)?.value();
    let p0 = model.premium.eval(lo);
    let a = (lambda + model.delta) * s[0];
    let b = p0 * s[1];
    let den = a - b;
    if !(den.abs() > T::lit(1e-13) * (a.abs() + b.abs())) {
        return Err(Error::Degenerate(format!("(λ+δ)s(0) - p(0)s'(0) = {den}")));
    }
    Ok((lambda * w0 + p0 * dgg) / den)
}

fn model_nodes<T: Real>(model: &RiskModel<T>) -> Arc<Vec<T>> {
    Arc::new(default_nodes(model.domain_start(), model.u_max, DEFAULT_GRID_NODES))
}

fn tail_ratio<T: Real>(phi: &GridFunction<T>) -> f64 {
    let sup = phi.sup_norm();
    if sup == T::zero() {
        return 0.0;
    }
    (phi.values()[phi.len() - 1].abs() / sup).to_f64_lossy()
}

fn solution_grid<T: Real>(fs: &FundamentalSystem<T>, nodes: Arc<Vec<T>>) -> GridFunction<T> {
    let s = fs.solutions[0].clone();
    GridFunction::from_fn(nodes, Arc::new(move |u| s.derivs(u, 0)[0]), true)
}

/// `sup |T(γ s + Gg) - g|` relative to `sup |g|` over `nodes`.
fn phi_residual<T: Real>(ode: &LinearODE<T>, fs: &FundamentalSystem<T>, gamma: T, gg: &GreensResult<T>, g: &GridFunction<T>, nodes: &[T]) -> Result<T> {
    let n = ode.order();
    let (mut worst, mut gmax) = (T::zero(), T::zero());
    for &u in nodes {
        let s = fs.solutions[0].derivs(u, n);
        let d: Vec<T> = gg.derivs(u, n)?.iter().zip(&s).map(|(a, b)| *a + gamma * *b).collect();
        let gv = g.eval(u);
        worst = worst.max((ode.apply(u, &d) - gv).abs());
        gmax = gmax.max(gv.abs());
    }
    Ok(if gmax > T::zero() { worst / gmax } else { worst })
}

/// The pieces of `Φ = γ s + Gg` for a given fundamental system.
#[derive(Clone, Debug)]
pub struct Assembly<T: Real> {
    pub nodes: Arc<Vec<T>>,
    pub g: GridFunction<T>,
    pub gg: GreensResult<T>,
    pub gamma: T,
}

pub fn assemble<T: Real>(model: &RiskModel<T>, fs: &FundamentalSystem<T>) -> Result<Assembly<T>> {
    let nodes = Arc::new(default_nodes(fs.lo, fs.hi, DEFAULT_GRID_NODES));
    let g = build_rhs(model, nodes.clone()).stage(Stage::Operator)?;
    let op = GreensOperator::new(fs, nodes.clone()).stage(Stage::Wronskian)?;
    let gg = greens_collapsed(&op, &g).stage(Stage::Greens)?;
    let gamma = gamma_constant(model, fs, &gg).stage(Stage::Constant)?;
    Ok(Assembly { nodes, g, gg, gamma })
}

/// Full assembly with a given fundamental system.
pub fn phi_with_system<T: Real>(model: &RiskModel<T>, ode: &LinearODE<T>, fs: &FundamentalSystem<T>) -> Result<GerberShiuSolution<T>> {
    let Assembly { nodes, g, gg, gamma } = assemble(model, fs)?;
    let s = solution_grid(fs, nodes.clone());
    let (s2, gg2) = (s.clone(), gg.value.clone());
    let f: Evaluator<T> = Arc::new(move |u| gamma * s2.eval(u) + gg2.eval(u));
    let phi = GridFunction::from_fn(nodes.clone(), f, true);
    let interior: Vec<T> = nodes
        .iter()
        .copied()
        .filter(|&u| u > fs.lo && u < fs.hi)
        .step_by(8)
        .collect();
    let residual = phi_residual(ode, fs, gamma, &gg, &g, &interior).stage(Stage::Greens)?;
    let mut warnings = Vec::new();
    let tail = tail_ratio(&phi);
    if tail > 1e-3 {
        warnings.push(format!("Φ(u_max) is {tail:.2e} of its maximum; the grid may be too short"));
    }
    Ok(GerberShiuSolution {
        phi,
        gamma,
        s,
        gg: gg.value,
        route: Route::GreensOperator,
        diagnostics: Diagnostics {
            residual: Some(residual.to_f64_lossy()),
            tail,
            formula: None,
            system_path: Some(fs.path),
            warnings,
        },
    })
}

fn phi_greens<T: Real>(model: &RiskModel<T>) -> Result<GerberShiuSolution<T>> {
    model.validate().stage(Stage::Model)?;
    let ode = build_operator(model).stage(Stage::Operator)?;
    let fs = fundamental_system(&ode, model).stage(Stage::FundamentalSystem)?;
    phi_with_system(model, &ode, &fs)
}

/// The closed form matching the model, if any.
pub fn closed_form_name<T: Real>(model: &RiskModel<T>) -> Option<&'static str> {
    model.exp_rates()?;
    let ruin = model.delta == T::zero() && matches!(model.penalty, Penalty::RuinIndicator);
    if ruin {
        return Some(match &model.premium {
            PremiumFunction::Constant { .. } => "classical",
            PremiumFunction::Linear { eps, .. } if *eps > T::zero() => "segerdahl",
            PremiumFunction::Linear { .. } => "classical",
            PremiumFunction::ExpDecay { .. } => "exponential_premium",
            PremiumFunction::Rational { eps, .. } if *eps == T::one() => "rational_premium",
            PremiumFunction::Quadratic { .. } => "quadratic_premium",
            _ => "tichy",
        });
    }
    match &model.premium {
        PremiumFunction::Linear { eps, .. } if *eps > T::zero() && model.delta > T::zero() => Some("linear_kummer"),
        _ => None,
    }
}

/// Samples a fallible evaluator in parallel, keeping it for off-grid points.
fn pointwise<T: Real>(nodes: Arc<Vec<T>>, f: impl Fn(T) -> Result<T> + Send + Sync + 'static) -> Result<GridFunction<T>> {
    use rayon::prelude::*;
    let vals = nodes.par_iter().map(|&u| f(u)).collect::<Result<Vec<T>>>()?;
    let eval: Evaluator<T> = Arc::new(move |u| f(u).unwrap_or(T::nan()));
    GridFunction::from_sampled_fn(nodes, vals, eval, true)
}

fn phi_closed<T: Real>(model: &RiskModel<T>) -> Result<GerberShiuSolution<T>> {
    model.validate().stage(Stage::Model)?;
    let name = closed_form_name(model).ok_or_else(|| {
        Error::Unsupported(format!(
            "no closed form for premium `{}` with δ = {} and penalty `{}`",
            model.premium.family(),
            model.delta,
            model.penalty.family()
        ))
    })?;
    let (lambda, mu) = model.exp_rates().expect("checked by closed_form_name");
    let nodes = model_nodes(model);
    let mut warnings = Vec::new();
    if name == "linear_kummer" {
        return phi_linear_kummer(model, nodes);
    }
    // δ = 0: Φ = γ s with s(u) = ∫_u^∞ e^{λq - μx}/p and γ = λγ₀
    let tichy = Arc::new(TichyRuin::new(&model.premium, lambda, mu)?);
    let t = tichy.clone();
    let integrand: Evaluator<T> = Arc::new(move |x| t.integrand(x));
    let s = cumulate(&GridFunction::from_fn(nodes.clone(), integrand, true))?.b()?.clone();
    let gamma = lambda * tichy.gamma0();
    let premium = model.premium.clone();
    let phi = match (name, premium) {
        ("classical", PremiumFunction::Constant { c }) | ("classical", PremiumFunction::Linear { c, .. }) => {
            pointwise(nodes, move |u| Ok(ruin_classical(c, lambda, mu, u)))?
        }
        ("segerdahl", PremiumFunction::Linear { c, eps }) => {
            warnings.push(
                "the incomplete gamma is evaluated as Γ(λ/ε, μ(c+εu)/ε); the printed argument order does not reproduce the quadrature value"
                    .to_string(),
            );
            pointwise(nodes, move |u| ruin_segerdahl(c, eps, lambda, mu, u, GammaOrder::Swapped))?
        }
        ("exponential_premium", PremiumFunction::ExpDecay { c }) => {
            let probe = ruin_exponential_premium(c, lambda, mu, model.domain_start())?;
            if let Some(w) = probe.warning {
                warnings.push(w);
            }
            let s2 = s.clone();
            pointwise(nodes, move |u| Ok(gamma * s2.eval(u)))?
        }
        ("rational_premium", PremiumFunction::Rational { c, .. }) => pointwise(nodes, move |u| ruin_rational_premium(c, lambda, mu, u))?,
        ("quadratic_premium", PremiumFunction::Quadratic { c }) => pointwise(nodes, move |u| ruin_quadratic_premium(c, lambda, mu, u))?,
        _ => {
            let s2 = s.clone();
            pointwise(nodes, move |u| Ok(gamma * s2.eval(u)))?
        }
    };
    let tail = tail_ratio(&phi);
    Ok(GerberShiuSolution {
        gg: GridFunction::zero(phi.shared_nodes()),
        phi,
        gamma,
        s,
        route: Route::ClosedForm,
        diagnostics: Diagnostics {
            residual: None,
            tail,
            formula: Some(name.to_string()),
            system_path: None,
            warnings,
        },
    })
}

fn phi_linear_kummer<T: Real>(model: &RiskModel<T>, nodes: Arc<Vec<T>>) -> Result<GerberShiuSolution<T>> {
    let (lambda, mu) = model.exp_rates().expect("exponential laws");
    let (c, eps) = match model.premium {
        PremiumFunction::Linear { c, eps } => (c, eps),
        _ => unreachable!("dispatched on a linear premium"),
    };
    let k = LinearKummer {
        c,
        eps,
        lambda,
        mu,
        delta: model.delta,
    };
    let lo = nodes[0];
    let g = build_rhs(model, nodes.clone()).stage(Stage::Operator)?;
    let gg = linear_greens_display(k, &g, nodes.clone()).stage(Stage::Greens)?;
    let dgg = linear_greens_slope_at_zero(k, &g, nodes.clone()).stage(Stage::Greens)?;
    let s0 = [k.s(lo)?, k.s_prime(lo)?];
    let gamma = gamma_from_parts(model, lo, &s0, dgg).stage(Stage::Constant)?;
    let s = GridFunction::from_fn(nodes.clone(), Arc::new(move |u| k.s(u).unwrap_or(T::nan())), true);
    let (s2, gg2) = (s.clone(), gg.clone());
    let phi = GridFunction::from_fn(nodes, Arc::new(move |u| gamma * s2.eval(u) + gg2.eval(u)), true);
    let tail = tail_ratio(&phi);
    Ok(GerberShiuSolution {
        phi,
        gamma,
        s,
        gg,
        route: Route::ClosedForm,
        diagnostics: Diagnostics {
            residual: None,
            tail,
            formula: Some("linear_kummer".into()),
            system_path: None,
            warnings: vec![
                "Kummer display evaluated with the constant Γ(κ+1) and the factor (εv+c) in the integrands".into(),
            ],
        },
    })
}

/// `Φ` by the requested route. `Auto` takes the closed form when the model
/// matches one and the Green's operator otherwise.
pub fn phi<T: Real>(model: &RiskModel<T>, route: RouteChoice) -> Result<GerberShiuSolution<T>> {
    match route {
        RouteChoice::Greens => phi_greens(model),
        RouteChoice::ClosedForm => phi_closed(model),
        RouteChoice::Auto if closed_form_name(model).is_some() => phi_closed(model),
        RouteChoice::Auto => phi_greens(model),
    }
}
