//! Built-in check matrix: Sylvester lemma, operator residuals, route
//! consistency, asymptotic ratio tests and special-function identities.
//!
//! Every check reports a measured value against a tolerance. Checks whose
//! target is known to be unattainable are marked `expected_failure` and do
//! not fail the run; their values are still measured and reported.

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::asymptotics::{
    gs_asymptote, log_derivatives, limiting_coefficients, pi_constants, pi_constants_by_determinants,
    ruin_asymptote,
};
use crate::error::{Error, Result};
use crate::gerber_shiu::closed_form::{
    ruin_exponential_premium, ruin_quadratic_premium, ruin_rational_premium, ruin_tichy, GammaOrder, SegerdahlReport,
};
use crate::gerber_shiu::{phi, RouteChoice};
use crate::greens::{
    greens_collapsed, greens_factored, greens_second_order_system, sylvester_max_residual, Fault, GreensOperator,
    WronskianTable,
};
use crate::model::{Penalty, PremiumFunction, RiskModel};
use crate::montecarlo::{estimate_penalty, estimate_ruin, SimConfig};
use crate::numerics::gamma::{gamma, upper_incomplete_gamma};
use crate::numerics::grid::{default_nodes, GridFunction, DEFAULT_GRID_NODES};
use crate::numerics::hypergeometric::{hyp2f1, kummer_m, kummer_u_derivs};
use crate::operator::fundamental::{exponential, fundamental_system, fundamental_system_with, FnSolution, FundamentalSystem, SystemPath};
use crate::operator::{build_operator, build_rhs, quadratic_roots};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Quick,
    Full,
}

#[derive(Clone, Debug)]
pub struct SelftestOptions {
    pub level: Level,
    /// Corrupts every Wronskian table the checks build.
    pub fault: Option<Fault>,
    pub seed: u64,
    /// Overrides the Monte Carlo path count of the level.
    pub paths: Option<usize>,
}

impl SelftestOptions {
    pub fn new(level: Level) -> Self {
        Self {
            level,
            fault: None,
            seed: SimConfig::default().seed,
            paths: None,
        }
    }

    fn paths(&self) -> usize {
        self.paths.unwrap_or(match self.level {
            Level::Quick => 20_000,
            Level::Full => 100_000,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub criterion: Option<String>,
    pub value: f64,
    pub tolerance: f64,
    /// `tolerance - value`; negative when the check fails.
    pub margin: f64,
    pub passed: bool,
    pub expected_failure: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub level: Level,
    pub fault: Option<Fault>,
    pub checks: Vec<CheckResult>,
    /// Names of failed checks that were expected to pass.
    pub failures: Vec<String>,
}

impl Manifest {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// A measurement: value and free-form detail.
type Measured = Result<(f64, String)>;

struct Spec {
    name: &'static str,
    criterion: Option<&'static str>,
    tolerance: f64,
    expected_failure: bool,
}

const fn spec(name: &'static str, criterion: Option<&'static str>, tolerance: f64) -> Spec {
    Spec {
        name,
        criterion,
        tolerance,
        expected_failure: false,
    }
}

const fn xfail(name: &'static str, criterion: Option<&'static str>, tolerance: f64) -> Spec {
    Spec {
        name,
        criterion,
        tolerance,
        expected_failure: true,
    }
}

fn record(spec: Spec, f: impl FnOnce() -> Measured) -> CheckResult {
    let t = Instant::now();
    let (value, detail) = match f() {
        Ok((v, d)) => (v, d),
        Err(e) => (f64::INFINITY, format!("error: {e}")),
    };
    let passed = value <= spec.tolerance;
    CheckResult {
        name: spec.name.into(),
        criterion: spec.criterion.map(String::from),
        value,
        tolerance: spec.tolerance,
        margin: spec.tolerance - value,
        passed,
        expected_failure: spec.expected_failure,
        detail,
        seconds: t.elapsed().as_secs_f64(),
    }
}

fn exp_exp(p: PremiumFunction<f64>, delta: f64, penalty: Penalty<f64>, u_max: f64) -> RiskModel<f64> {
    RiskModel::exp_exp(p, 1.0, 2.0, delta, penalty, u_max)
}

fn linear_penalty_model() -> RiskModel<f64> {
    exp_exp(PremiumFunction::Linear { c: 1.0, eps: 0.5 }, 0.5, Penalty::ExpSurplus { nu: 1.0 }, 40.0)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn sup_diff(nodes: &[f64], a: impl Fn(f64) -> f64, b: impl Fn(f64) -> f64) -> f64 {
    nodes.iter().map(|&u| (a(u) - b(u)).abs()).fold(0.0, f64::max)
}

fn table(fs: &FundamentalSystem<f64>, nodes: Arc<Vec<f64>>, fault: Option<Fault>) -> Result<WronskianTable<f64>> {
    let t = WronskianTable::build(fs, nodes)?;
    Ok(match fault {
        Some(f) => t.with_fault(f),
        None => t,
    })
}

/// `e^{-u}, 1 + u, e^{u/2}` on `[0.01, 40]`; the third Wronskian vanishes at 0.
pub fn synthetic_system() -> FundamentalSystem<f64> {
    let lin = FnSolution::shared("1+u", |u: f64, order| {
        let mut v = vec![0.0; order + 1];
        v[0] = 1.0 + u;
        if order >= 1 {
            v[1] = 1.0;
        }
        v
    });
    FundamentalSystem::new(
        1,
        2,
        0.01,
        40.0,
        SystemPath::Supplied,
        vec![exponential(-1.0, 0.0), lin, exponential(0.5, 0.0)],
    )
}

fn check_sylvester(fault: Option<Fault>) -> Measured {
    let syn = synthetic_system();
    let nodes = Arc::new(default_nodes(syn.lo, syn.hi, DEFAULT_GRID_NODES));
    let a = sylvester_max_residual(&table(&syn, nodes, fault)?)?;
    let m = linear_penalty_model();
    let fs = fundamental_system(&build_operator(&m)?, &m)?;
    let nodes = Arc::new(default_nodes(fs.lo, fs.hi, 256));
    let b = sylvester_max_residual(&table(&fs, nodes, fault)?)?;
    Ok((a.max(b), format!("synthetic m=1,n=2: {a:.3e}; linear premium m=n=1: {b:.3e}")))
}

struct LinearGreens {
    res: f64,
    boundary: f64,
    forms: f64,
    detail: String,
}

fn linear_greens(fault: Option<Fault>) -> Result<LinearGreens> {
    let m = linear_penalty_model();
    let ode = build_operator(&m)?;
    let fs = fundamental_system(&ode, &m)?;
    let nodes = Arc::new(default_nodes(fs.lo, fs.hi, DEFAULT_GRID_NODES));
    let g = build_rhs(&m, nodes.clone())?;
    let op = GreensOperator::from_table(table(&fs, nodes.clone(), fault)?);
    let col = greens_collapsed(&op, &g)?;
    let interior: Vec<f64> = nodes.iter().copied().filter(|&u| u > fs.lo && u < fs.hi).step_by(4).collect();
    let res = col.operator_residual(&ode, &g, &interior)?;
    let gnorm = g.sup_norm();
    let boundary = col.eval(fs.lo).abs() / gnorm;
    let fac = greens_factored(&fs, nodes.clone(), &g)?;
    let so = greens_second_order_system(&fs, nodes.clone(), &g)?;
    let scale = col.value.sup_norm();
    let d1 = sup_diff(&nodes, |u| col.eval(u), |u| fac.eval(u)) / scale;
    let d2 = sup_diff(&nodes, |u| col.eval(u), |u| so.eval(u)) / scale;
    let d3 = sup_diff(&nodes, |u| fac.eval(u), |u| so.eval(u)) / scale;
    Ok(LinearGreens {
        res,
        boundary,
        forms: d1.max(d2).max(d3),
        detail: format!("collapsed-factored {d1:.2e}, collapsed-second-order {d2:.2e}, factored-second-order {d3:.2e}"),
    })
}

fn check_synthetic_forms(fault: Option<Fault>) -> Measured {
    let fs = synthetic_system();
    let nodes = Arc::new(default_nodes(fs.lo, fs.hi, DEFAULT_GRID_NODES));
    let g = GridFunction::from_fn(nodes.clone(), Arc::new(|u: f64| (-2.0 * u).exp()), true);
    let op = GreensOperator::from_table(table(&fs, nodes.clone(), fault)?);
    let col = greens_collapsed(&op, &g)?;
    let fac = greens_factored(&fs, nodes.clone(), &g)?;
    let d = sup_diff(&nodes, |u| col.eval(u), |u| fac.eval(u));
    Ok((d, format!("sup |collapsed - factored| = {d:.3e}")))
}

fn check_classical_anchor() -> Measured {
    let p = PremiumFunction::Constant { c: 1.0 };
    let a = rel(ruin_tichy(&p, 1.0, 2.0, 0.0)?, 0.5);
    let b = rel(ruin_tichy(&p, 1.0, 2.0, 1.0)?, 0.5 * (-1f64).exp());
    Ok((a.max(b), format!("relative deviation at u=0: {a:.2e}, u=1: {b:.2e}")))
}

fn check_classical_mc(opts: &SelftestOptions) -> Measured {
    let m = exp_exp(PremiumFunction::Constant { c: 1.0 }, 0.0, Penalty::RuinIndicator, 5.0);
    let cfg = SimConfig::default().with_paths(opts.paths()).with_seed(opts.seed);
    let e = estimate_ruin(&m, 0.0, &cfg)?;
    let z = e.z_score(0.5);
    Ok((z.abs(), format!("estimate {:.5} ± {:.5} against 0.5, z = {z:.2}", e.mean, e.std_error)))
}

const SEGERDAHL_U: [f64; 5] = [0.0, 0.5, 1.0, 2.0, 5.0];

fn segerdahl(order: GammaOrder) -> Measured {
    let mut worst = 0.0f64;
    let mut lines = Vec::new();
    for u in SEGERDAHL_U {
        let r = SegerdahlReport::new(1.0, 0.5, 1.0, 2.0, u)?;
        worst = worst.max(r.deviation(order));
        lines.push(format!(
            "u={u}: as printed {}, swapped {:.10}, quadrature {:.10}",
            r.as_printed.map_or("undefined".into(), |v| format!("{v:.10}")),
            r.swapped,
            r.tichy
        ));
    }
    Ok((worst, lines.join("; ")))
}

fn check_rational_quadratic() -> Measured {
    let mut worst = 0.0f64;
    for u in [0.0, 1.0, 3.0] {
        let c = rel(ruin_rational_premium(1.0, 1.0, 2.0, u)?, ruin_tichy(&PremiumFunction::Rational { c: 1.0, eps: 1.0 }, 1.0, 2.0, u)?);
        let d = rel(ruin_quadratic_premium(1.0, 1.0, 2.0, u)?, ruin_tichy(&PremiumFunction::Quadratic { c: 1.0 }, 1.0, 2.0, u)?);
        worst = worst.max(c).max(d);
    }
    Ok((worst, "rational and quadratic displays against the quadrature formula".into()))
}

fn check_exponential_premium() -> Measured {
    let mut worst = 0.0f64;
    let mut warned = true;
    for u in [0.0, 1.0, 3.0] {
        let r = ruin_exponential_premium(1.0, 1.0, 2.0, u)?;
        worst = worst.max(rel(r.display, r.tichy));
        warned &= r.warning.is_some();
    }
    // a carried warning satisfies the check
    let value = if warned { 0.0 } else { worst };
    Ok((value, format!("display deviation {worst:.3e}; branch warning carried: {warned}")))
}

fn check_route_consistency() -> Measured {
    let mut worst = 0.0f64;
    let mut lines = Vec::new();
    for p in [
        PremiumFunction::Linear { c: 1.0, eps: 0.5 },
        PremiumFunction::ExpDecay { c: 1.0 },
        PremiumFunction::Rational { c: 1.0, eps: 1.0 },
        PremiumFunction::Quadratic { c: 1.0 },
    ] {
        let m = exp_exp(p.clone(), 0.0, Penalty::RuinIndicator, 40.0);
        let g = phi(&m, RouteChoice::Greens)?;
        let d = [0.0, 1.0, 3.0]
            .iter()
            .map(|&u| Ok(rel(g.eval(u), ruin_tichy(&p, 1.0, 2.0, u)?)))
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        lines.push(format!("{}: {d:.2e}", p.family()));
        worst = worst.max(d);
    }
    let m = linear_penalty_model();
    let (g, c) = (phi(&m, RouteChoice::Greens)?, phi(&m, RouteChoice::ClosedForm)?);
    let d = [0.0, 1.0, 3.0].iter().map(|&u| rel(g.eval(u), c.eval(u))).fold(0.0, f64::max);
    lines.push(format!("linear δ=0.5 Kummer display: {d:.2e}"));
    Ok((worst.max(d), lines.join(", ")))
}

fn check_penalty_mc(opts: &SelftestOptions) -> Measured {
    let m = linear_penalty_model();
    let sol = phi(&m, RouteChoice::Greens)?;
    let cfg = SimConfig::default().with_paths(opts.paths()).with_seed(opts.seed);
    let mut worst = 0.0f64;
    let mut lines = Vec::new();
    for u in [0.0, 1.0, 2.0] {
        let e = estimate_penalty(&m, u, &cfg)?;
        let z = e.z_score(sol.eval(u));
        worst = worst.max(z.abs());
        lines.push(format!("u={u}: Φ={:.6}, MC {:.6} ± {:.6}, z={z:.2}", sol.eval(u), e.mean, e.std_error));
    }
    Ok((worst, lines.join("; ")))
}

fn check_ruin_ratios() -> Measured {
    let mut worst = 0.0f64;
    let mut lines = Vec::new();
    for p in [PremiumFunction::ExpDecay { c: 1.0 }, PremiumFunction::Quadratic { c: 1.0 }] {
        let m = exp_exp(p.clone(), 0.0, Penalty::RuinIndicator, 40.0);
        let a = ruin_asymptote(&m)?;
        let r = |u: f64| -> Result<f64> { Ok(ruin_tichy(&p, 1.0, 2.0, u)? / a.eval(u)) };
        let (r5, r9) = (r(20.0)?, r(36.0)?);
        let (d5, d9) = ((r5 - 1.0).abs(), (r9 - 1.0).abs());
        // not moving toward 1 counts as a failure
        let v = if d9 < d5 || d9 < 1e-12 { d9 } else { f64::INFINITY };
        worst = worst.max(v);
        lines.push(format!("{}: ratio {r5:.6} at 0.5U, {r9:.6} at 0.9U", p.family()));
    }
    Ok((worst, lines.join("; ")))
}

fn check_k1() -> Measured {
    let m = exp_exp(PremiumFunction::ExpDecay { c: 1.0 }, 0.5, Penalty::ExpSurplus { nu: 1.0 }, 40.0);
    let a = gs_asymptote(&m)?;
    let t = &a.terms[1];
    let r = t.ratio(0.9 * 40.0)?;
    Ok(((r - 1.0).abs(), format!("(Φ - h₁s)/(K₁g) = {r:.6} at 0.9U with K₁ = {:.7}", t.coef)))
}

fn check_p2_shape() -> Measured {
    let m = linear_penalty_model();
    let a = gs_asymptote(&m)?;
    let t = &a.terms[1];
    let (r1, r2) = (t.ratio(0.75 * 40.0)?, t.ratio(0.9 * 40.0)?);
    let v = (r2 / r1 - 1.0).abs();
    Ok((v, format!("(Φ - h₁s)/(u g) implied coefficient {:.6e} at 0.75U, {:.6e} at 0.9U", r1 * t.coef, r2 * t.coef)))
}

fn check_almost_constant() -> Measured {
    let m = exp_exp(PremiumFunction::ExpRecip { c: 1.0, eps: 0.3 }, 0.5, Penalty::RuinIndicator, 40.0);
    let ode = build_operator(&m)?;
    let fs = fundamental_system_with(&ode, &m, SystemPath::Numeric)?;
    let ld = log_derivatives(&fs, m.u_max);
    let lim = limiting_coefficients(&m)?;
    let (sigma, rho) = quadratic_roots(lim.1, lim.0)?;
    let (a, b) = (rel(ld[0], sigma), rel(ld[1], rho));
    Ok((a.max(b), format!("log-derivatives {:.6}, {:.6} against roots {sigma:.6}, {rho:.6}", ld[0], ld[1])))
}

fn check_pi() -> Measured {
    let sets: [&[f64]; 6] = [
        &[-1.0, 2.0],
        &[-0.7],
        &[-2.0, -1.0, 1.0],
        &[-1.3, 0.4, 2.2],
        &[-3.0, -0.5, 0.8, 1.9],
        &[-2.5, -1.5, 0.3, 4.0],
    ];
    let mut worst = 0.0f64;
    for y in sets {
        let a = pi_constants(y)?;
        let b = pi_constants_by_determinants(y)?;
        for (x, z) in a.iter().zip(&b) {
            worst = worst.max((x - z).abs() / x.abs().max(1.0));
        }
    }
    let two: Vec<f64> = pi_constants(&[-1.0, 2.0])?;
    worst = worst.max((two[0] - 1.0 / 3.0).abs()).max((two[1] - 1.0 / 6.0).abs());
    Ok((worst, "enumeration against determinant ratios, sizes 1 to 4".into()))
}

fn check_incomplete_gamma() -> Measured {
    // Γ(a+1, x) = a Γ(a, x) + x^a e^{-x}
    let mut worst = 0.0f64;
    for &(a, x) in &[(0.5f64, 0.3f64), (1.7, 2.0), (3.2, 10.0), (6.0, 1.0), (2.5, 25.0)] {
        let lhs = upper_incomplete_gamma(a + 1.0, x)?;
        let rhs = a * upper_incomplete_gamma(a, x)? + x.powf(a) * (-x).exp();
        worst = worst.max(rel(lhs, rhs));
    }
    let full = rel(upper_incomplete_gamma(2.5, 0.0)?, gamma(2.5));
    Ok((worst.max(full), "recurrence and Γ(a, 0) = Γ(a)".into()))
}

fn check_kummer_wronskian() -> Measured {
    // M U' - M' U = -Γ(b) z^{-b} e^z / Γ(a)
    let mut worst = 0.0f64;
    for &(a, b) in &[(1.5f64, 4.0f64), (2.0, 3.5), (1.25, 2.0)] {
        for &z in &[0.5f64, 2.0, 8.0, 20.0] {
            let m0 = kummer_m(a, b, z)?;
            // M' = (a/b) M(a+1, b+1, z)
            let m1 = a / b * kummer_m(a + 1.0, b + 1.0, z)?;
            let u = kummer_u_derivs(a, b, z, 1)?;
            let w = m0 * u[1] - m1 * u[0];
            let want = -gamma(b) / gamma(a) * z.powf(-b) * z.exp();
            worst = worst.max(rel(w, want));
        }
    }
    Ok((worst, "Wronskian of M and U".into()))
}

fn check_hyp2f1() -> Measured {
    let mut worst = 0.0f64;
    for &z in &[-4.0, -0.5, 0.3, 0.8, 0.95] {
        let f = hyp2f1(1.0, 1.0, 2.0, z)?.value;
        worst = worst.max(rel(f, -(-z).ln_1p() / z));
    }
    let gauss = hyp2f1(0.5, 0.5, 2.0, 1.0)?.value;
    worst = worst.max(rel(gauss, 4.0 / std::f64::consts::PI));
    Ok((worst, "₂F₁(1,1;2;z) = -ln(1-z)/z and Gauss summation".into()))
}

/// Runs the matrix. Quick and full differ in Monte Carlo path counts.
pub fn run(opts: &SelftestOptions) -> Manifest {
    let fault = opts.fault;
    let mut checks = Vec::new();
    checks.push(record(spec("numerics.incomplete_gamma", Some("10"), 1e-12), check_incomplete_gamma));
    checks.push(record(spec("numerics.kummer_wronskian", Some("10"), 1e-7), check_kummer_wronskian));
    checks.push(record(spec("numerics.hyp2f1", Some("10"), 1e-8), check_hyp2f1));
    checks.push(record(spec("asymptotics.pi_constants", Some("9"), 1e-12), check_pi));
    checks.push(record(spec("greens.sylvester", Some("5"), 1e-6), || check_sylvester(fault)));
    checks.push(record(spec("greens.synthetic_forms", Some("5"), 1e-5), || check_synthetic_forms(fault)));
    let lg = linear_greens(fault);
    let pick = |f: fn(&LinearGreens) -> f64| -> Measured {
        match &lg {
            Ok(l) => Ok((f(l), l.detail.clone())),
            Err(e) => Err(Error::Domain(e.to_string())),
        }
    };
    checks.push(record(spec("greens.operator_residual", Some("4"), 1e-5), || pick(|l| l.res)));
    checks.push(record(spec("greens.boundary", Some("4"), 1e-8), || pick(|l| l.boundary)));
    checks.push(record(spec("greens.forms", Some("4"), 1e-6), || pick(|l| l.forms)));
    checks.push(record(spec("closed_form.classical_anchor", Some("1"), 1e-8), check_classical_anchor));
    checks.push(record(xfail("closed_form.segerdahl_verbatim", Some("2"), 1e-6), || segerdahl(GammaOrder::AsPrinted)));
    checks.push(record(spec("closed_form.segerdahl_swapped", Some("2"), 1e-6), || segerdahl(GammaOrder::Swapped)));
    checks.push(record(spec("closed_form.rational_quadratic", Some("3"), 1e-8), check_rational_quadratic));
    checks.push(record(spec("closed_form.exponential_premium", Some("3"), 1e-6), check_exponential_premium));
    checks.push(record(spec("gerber_shiu.route_consistency", None, 1e-5), check_route_consistency));
    checks.push(record(spec("asymptotics.ruin_ratio", Some("7a"), 0.05), check_ruin_ratios));
    checks.push(record(xfail("asymptotics.k1", Some("7b"), 0.10), check_k1));
    checks.push(record(xfail("asymptotics.p2_shape", Some("7c"), 0.05), check_p2_shape));
    checks.push(record(spec("asymptotics.almost_constant", Some("8"), 0.02), check_almost_constant));
    checks.push(record(spec("montecarlo.classical", Some("1"), 3.0), || check_classical_mc(opts)));
    checks.push(record(spec("montecarlo.penalty", Some("6"), 3.0), || check_penalty_mc(opts)));
    let failures = checks
        .iter()
        .filter(|c| !c.passed && !c.expected_failure)
        .map(|c| c.name.clone())
        .collect();
    Manifest {
        level: opts.level,
        fault,
        checks,
        failures,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn injected_wronskian_fault_is_named() {
        let f = Some(Fault::WronskianSign);
        let c = record(spec("greens.sylvester", None, 1e-6), || check_sylvester(f));
        assert!(!c.passed, "{c:?}");
        assert!(record(spec("greens.sylvester", None, 1e-6), || check_sylvester(None)).passed);
    }

    #[test]
    fn manifest_round_trip() {
        let m = Manifest {
            level: Level::Quick,
            fault: Some(Fault::WronskianSign),
            checks: vec![record(spec("numerics.hyp2f1", Some("10"), 1e-8), check_hyp2f1)],
            failures: vec![],
        };
        assert!(m.checks[0].passed);
        assert_eq!(Manifest::from_json(&m.to_json()).unwrap(), m);
    }
}
