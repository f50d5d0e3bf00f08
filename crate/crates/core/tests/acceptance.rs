//! Acceptance matrix. One PASS/FAIL line per criterion with the measured value,
//! the pinned tolerance and the runtime against its budget.
//!
//! Oracles are computed here, independently of the library: a Simpson
//! quadrature of the ruin integral with hand-derived q(x), hand Wronskians of
//! the synthetic system, characteristic roots and the Lagrange form of the π
//! constants.
//!
//! Criteria listed in `UNATTAINABLE` are evaluated faithfully and print FAIL;
//! the analysis is in the README. They do not fail the target. Any other FAIL
//! does.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use ruin_core::asymptotics::{gs_asymptote, log_derivatives, pi_constants, pi_constants_by_determinants, ruin_asymptote};
use ruin_core::gerber_shiu::closed_form::{
    ruin_exponential_premium, ruin_quadratic_premium, ruin_rational_premium, ruin_tichy, SegerdahlReport,
};
use ruin_core::gerber_shiu::{phi, RouteChoice};
use ruin_core::greens::{
    greens_collapsed, greens_factored, greens_second_order_system, sylvester_max_residual, GreensOperator,
    WronskianTable,
};
use ruin_core::model::{Penalty, PremiumFunction};
use ruin_core::montecarlo::{estimate_penalty, estimate_ruin, SimConfig};
use ruin_core::numerics::gamma::{gamma, upper_incomplete_gamma};
use ruin_core::numerics::grid::{default_nodes, GridFunction, DEFAULT_GRID_NODES};
use ruin_core::numerics::hypergeometric::{hyp2f1, kummer_m, kummer_u_derivs};
use ruin_core::operator::fundamental::{
    exponential, fundamental_system, fundamental_system_with, FnSolution, FundamentalSystem, SystemPath,
};
use ruin_core::operator::build_operator;
use ruin_core::{Model, Premium};

const UNATTAINABLE: [&str; 3] = ["2", "7b", "7c"];

struct Outcome {
    value: f64,
    tol: f64,
    pass: bool,
    detail: Vec<String>,
}

impl Outcome {
    fn at_most(value: f64, tol: f64, detail: Vec<String>) -> Self {
        Self { value, tol, pass: value <= tol, detail }
    }
}

type Check = fn() -> Result<Outcome, String>;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn exp_exp(p: Premium, lambda: f64, mu: f64, delta: f64, penalty: Penalty<f64>, u_max: f64) -> Model {
    Model::exp_exp(p, lambda, mu, delta, penalty, u_max)
}

// ---------------------------------------------------------------- oracles

/// Composite Simpson on [a, b] with step close to `h`.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, h: f64) -> f64 {
    let n = ((((b - a) / h).ceil() as usize).max(2) + 1) & !1usize;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Premium rate and q(x) = ∫_0^x dy/p(y), both by hand.
fn premium_and_q(p: &Premium) -> (Box<dyn Fn(f64) -> f64>, Box<dyn Fn(f64) -> f64>) {
    match *p {
        PremiumFunction::Constant { c } => (Box::new(move |_| c), Box::new(move |x| x / c)),
        PremiumFunction::Linear { c, eps } => {
            (Box::new(move |x| c + eps * x), Box::new(move |x| (eps * x / c).ln_1p() / eps))
        }
        PremiumFunction::Quadratic { c } => {
            let r = c.sqrt();
            (Box::new(move |x| c + x * x), Box::new(move |x| (x / r).atan() / r))
        }
        PremiumFunction::ExpDecay { c } => (
            Box::new(move |x| c * (1.0 + (-x).exp())),
            // (1/c) ln((e^x + 1)/2), written to stay finite for large x
            Box::new(move |x| (x + (-x).exp().ln_1p() - 2f64.ln()) / c),
        ),
        PremiumFunction::Rational { c, eps } => (
            Box::new(move |x| c + 1.0 / (1.0 + eps * x)),
            Box::new(move |x| x / c - (c * eps * x / (c + 1.0)).ln_1p() / (c * c * eps)),
        ),
        _ => panic!("no hand oracle for {}", p.family()),
    }
}

/// ψ(u) = γ₀λ ∫_u^∞ e^{λq(x) − μx}/p(x) dx with 1/γ₀ = 1 + λ ∫_0^∞ (same).
fn psi_oracle(p: &Premium, lambda: f64, mu: f64, u: f64) -> f64 {
    let (rate, q) = premium_and_q(p);
    let f = |x: f64| (lambda * q(x) - mu * x).exp() / rate(x);
    let h = 2e-3;
    let tail = simpson(&f, u, u + 60.0, h);
    let total = simpson(&f, 0.0, u, h) + tail;
    lambda * tail / (1.0 + lambda * total)
}

/// Roots (σ, ρ) of x² + b x + c0 = 0 with σ < ρ.
fn roots(b: f64, c0: f64) -> (f64, f64) {
    let d = (b * b - 4.0 * c0).sqrt();
    ((-b - d) / 2.0, (-b + d) / 2.0)
}

fn synthetic_system() -> FundamentalSystem<f64> {
    let lin = FnSolution::shared("1+u", |u: f64, order| {
        let mut v = vec![0.0; order + 1];
        v[0] = 1.0 + u;
        if order >= 1 {
            v[1] = 1.0;
        }
        v
    });
    // W₃ = (3/4) u e^{-u/2} vanishes at 0, so the interval starts at 0.01
    FundamentalSystem::new(1, 2, 0.01, 40.0, SystemPath::Supplied, vec![exponential(-1.0, 0.0), lin, exponential(0.5, 0.0)])
}

// ---------------------------------------------------------------- criteria

fn classical_anchor() -> Result<Outcome, String> {
    let p = PremiumFunction::Constant { c: 1.0 };
    let a = rel(ruin_tichy(&p, 1.0, 2.0, 0.0).map_err(err)?, 0.5);
    let b = rel(ruin_tichy(&p, 1.0, 2.0, 1.0).map_err(err)?, 0.5 * (-1f64).exp());
    let m = exp_exp(p, 1.0, 2.0, 0.0, Penalty::RuinIndicator, 5.0);
    let cfg = SimConfig::default().with_paths(100_000);
    let mut z = 0f64;
    let mut detail = vec![format!("ruin_tichy relative deviation: u=0 {a:.2e}, u=1 {b:.2e} (tol 1e-8)")];
    for (u, want) in [(0.0, 0.5), (1.0, 0.5 * (-1f64).exp())] {
        let e = estimate_ruin(&m, u, &cfg).map_err(err)?;
        let zu = e.z_score(want);
        z = z.max(zu.abs());
        detail.push(format!("MC u={u}: {:.5} ± {:.5} against {want:.5}, z = {zu:.2}", e.mean, e.std_error));
    }
    let pass = a <= 1e-8 && b <= 1e-8 && z <= 3.0;
    Ok(Outcome { value: a.max(b), tol: 1e-8, pass, detail })
}

fn segerdahl() -> Result<Outcome, String> {
    let p = PremiumFunction::Linear { c: 1.0, eps: 0.5 };
    let (mut printed, mut swapped) = (0f64, 0f64);
    let mut detail = Vec::new();
    for u in [0.0, 0.5, 1.0, 2.0, 5.0] {
        let r = SegerdahlReport::new(1.0, 0.5, 1.0, 2.0, u).map_err(err)?;
        let oracle = psi_oracle(&p, 1.0, 2.0, u);
        let dp = r.as_printed.map_or(f64::INFINITY, |v| rel(v, oracle));
        let ds = rel(r.swapped, oracle);
        printed = printed.max(dp);
        swapped = swapped.max(ds);
        detail.push(format!(
            "u={u}: as printed {} (dev {dp:.2e}), swapped {:.10} (dev {ds:.2e}), quadrature {oracle:.10}",
            r.as_printed.map_or("undefined".into(), |v| format!("{v:.10}")),
            r.swapped
        ));
    }
    detail.push(format!(
        "dual-order diagnostic: printed argument order max deviation {printed:.3e}, swapped order {swapped:.3e}"
    ));
    Ok(Outcome::at_most(printed, 1e-6, detail))
}

fn section_52_displays() -> Result<Outcome, String> {
    let mut worst = 0f64;
    let mut detail = Vec::new();
    let rational = PremiumFunction::Rational { c: 1.0, eps: 1.0 };
    let quadratic = PremiumFunction::Quadratic { c: 1.0 };
    let decay = PremiumFunction::ExpDecay { c: 1.0 };
    let mut warned = true;
    let mut b_dev = 0f64;
    for u in [0.0, 1.0, 3.0] {
        let c = ruin_rational_premium(1.0, 1.0, 2.0, u).map_err(err)?;
        let d = ruin_quadratic_premium(1.0, 1.0, 1.0, u).map_err(err)?;
        let dc = rel(c, ruin_tichy(&rational, 1.0, 2.0, u).map_err(err)?);
        let dd = rel(d, ruin_tichy(&quadratic, 1.0, 1.0, u).map_err(err)?);
        // and the library quadrature against the one here
        let oc = rel(c, psi_oracle(&rational, 1.0, 2.0, u));
        let od = rel(d, psi_oracle(&quadratic, 1.0, 1.0, u));
        worst = worst.max(dc).max(dd).max(oc).max(od);
        let b = ruin_exponential_premium(1.0, 1.0, 2.0, u).map_err(err)?;
        b_dev = b_dev.max(rel(b.display, ruin_tichy(&decay, 1.0, 2.0, u).map_err(err)?));
        warned &= b.warning.is_some();
        detail.push(format!("u={u}: C {dc:.2e} (oracle {oc:.2e}), D {dd:.2e} (oracle {od:.2e})"));
    }
    detail.push(format!("B display deviation {b_dev:.3e}, branch warning carried: {warned}"));
    let b_ok = b_dev <= 1e-6 || warned;
    Ok(Outcome { value: worst, tol: 1e-8, pass: worst <= 1e-8 && b_ok, detail })
}

fn greens_linear() -> Result<Outcome, String> {
    let (c, eps, lambda, mu, delta, nu) = (1.0, 0.5, 1.0, 2.0, 0.5, 1.0);
    let m = exp_exp(PremiumFunction::Linear { c, eps }, lambda, mu, delta, Penalty::ExpSurplus { nu }, 40.0);
    let ode = build_operator(&m).map_err(err)?;
    let fs = fundamental_system(&ode, &m).map_err(err)?;
    let nodes = Arc::new(default_nodes(fs.lo, fs.hi, DEFAULT_GRID_NODES));
    // monic form: Φ'' + c₁Φ' + c₀Φ = g
    let p = move |u: f64| c + eps * u;
    let c1 = move |u: f64| mu + eps / p(u) - (lambda + delta) / p(u);
    let c0 = move |u: f64| -delta * mu / p(u);
    let gf = move |u: f64| lambda * nu / p(u) * (-(nu + mu) * u).exp();
    let g = GridFunction::from_fn(nodes.clone(), Arc::new(gf), true);
    let op = GreensOperator::new(&fs, nodes.clone()).map_err(err)?;
    let col = greens_collapsed(&op, &g).map_err(err)?;
    let gnorm = nodes.iter().map(|&u| gf(u).abs()).fold(0.0, f64::max);
    let mut res = 0f64;
    for &u in nodes.iter().filter(|&&u| u > fs.lo && u < fs.hi) {
        let d = col.derivs(u, 2).map_err(err)?;
        res = res.max((d[2] + c1(u) * d[1] + c0(u) * d[0] - gf(u)).abs());
    }
    let res = res / gnorm;
    let boundary = col.eval(fs.lo).abs() / gnorm;
    let fac = greens_factored(&fs, nodes.clone(), &g).map_err(err)?;
    let so = greens_second_order_system(&fs, nodes.clone(), &g).map_err(err)?;
    let scale = col.value.sup_norm();
    let sup = |a: &dyn Fn(f64) -> f64, b: &dyn Fn(f64) -> f64| {
        nodes.iter().map(|&u| (a(u) - b(u)).abs()).fold(0.0, f64::max) / scale
    };
    let d1 = sup(&|u| col.eval(u), &|u| fac.eval(u));
    let d2 = sup(&|u| col.eval(u), &|u| so.eval(u));
    let d3 = sup(&|u| fac.eval(u), &|u| so.eval(u));
    let forms = d1.max(d2).max(d3);
    let detail = vec![
        format!("‖T(Gg) − g‖/‖g‖ = {res:.3e} (tol 1e-5)"),
        format!("|Gg(0)|/‖g‖ = {boundary:.3e} (tol 1e-8)"),
        format!("forms, relative to ‖Gg‖: collapsed-factored {d1:.2e}, collapsed-second-order {d2:.2e}, factored-second-order {d3:.2e} (tol 1e-6)"),
    ];
    let pass = res <= 1e-5 && boundary <= 1e-8 && forms <= 1e-6;
    Ok(Outcome { value: res, tol: 1e-5, pass, detail })
}

fn greens_synthetic() -> Result<Outcome, String> {
    let fs = synthetic_system();
    let nodes = Arc::new(default_nodes(fs.lo, fs.hi, DEFAULT_GRID_NODES));
    let table = WronskianTable::build(&fs, nodes.clone()).map_err(err)?;
    // hand Wronskians: e^{-u}, (2+u) e^{-u}, (3/4) u e^{-u/2}
    let hand = [
        |u: f64| (-u).exp(),
        |u: f64| (2.0 + u) * (-u).exp(),
        |u: f64| 0.75 * u * (-0.5 * u).exp(),
    ];
    let mut wdev = 0f64;
    for &u in nodes.iter().step_by(7) {
        for (k, w) in hand.iter().enumerate() {
            wdev = wdev.max(rel(table.w(k + 1, u), w(u)));
        }
    }
    let syl = sylvester_max_residual(&table).map_err(err)?;
    let g = GridFunction::from_fn(nodes.clone(), Arc::new(|u: f64| (-2.0 * u).exp()), true);
    let col = greens_collapsed(&GreensOperator::from_table(table), &g).map_err(err)?;
    let fac = greens_factored(&fs, nodes.clone(), &g).map_err(err)?;
    let forms = nodes.iter().map(|&u| (col.eval(u) - fac.eval(u)).abs()).fold(0.0, f64::max);
    let detail = vec![
        format!("Wronskian table against hand determinants: {wdev:.2e} relative"),
        format!("Sylvester residual {syl:.3e} (tol 1e-6)"),
        format!("sup |collapsed − factored| = {forms:.3e} (tol 1e-5)"),
    ];
    let pass = forms <= 1e-5 && syl <= 1e-6 && wdev <= 1e-10;
    Ok(Outcome { value: forms, tol: 1e-5, pass, detail })
}

fn pipeline_vs_monte_carlo() -> Result<Outcome, String> {
    let m = exp_exp(PremiumFunction::Linear { c: 1.0, eps: 0.5 }, 1.0, 2.0, 0.5, Penalty::ExpSurplus { nu: 1.0 }, 40.0);
    let sol = phi(&m, RouteChoice::Auto).map_err(err)?;
    let cfg = SimConfig::default().with_paths(100_000);
    let mut worst = 0f64;
    let mut detail = Vec::new();
    for u in [0.0, 1.0, 2.0] {
        let e = estimate_penalty(&m, u, &cfg).map_err(err)?;
        let z = e.z_score(sol.eval(u));
        worst = worst.max(z.abs());
        detail.push(format!("u={u}: Φ = {:.6}, MC {:.6} ± {:.6}, z = {z:.2}", sol.eval(u), e.mean, e.std_error));
    }
    Ok(Outcome::at_most(worst, 3.0, detail))
}

fn ruin_ratio() -> Result<Outcome, String> {
    let mut worst = 0f64;
    let mut pass = true;
    let mut detail = Vec::new();
    for p in [PremiumFunction::ExpDecay { c: 1.0 }, PremiumFunction::Quadratic { c: 1.0 }] {
        let m = exp_exp(p.clone(), 1.0, 2.0, 0.0, Penalty::RuinIndicator, 40.0);
        let a = ruin_asymptote(&m).map_err(err)?;
        let (r5, r9) = (psi_oracle(&p, 1.0, 2.0, 20.0) / a.eval(20.0), psi_oracle(&p, 1.0, 2.0, 36.0) / a.eval(36.0));
        let (d5, d9) = ((r5 - 1.0).abs(), (r9 - 1.0).abs());
        pass &= (0.95..=1.05).contains(&r9) && d9 < d5;
        worst = worst.max(d9);
        detail.push(format!("{}: ψ/asymptote {r5:.6} at 0.5U, {r9:.6} at 0.9U", p.family()));
    }
    Ok(Outcome { value: worst, tol: 0.05, pass, detail })
}

fn k1_ratio() -> Result<Outcome, String> {
    let (c, lambda, mu, delta, nu) = (1.0, 1.0, 2.0, 0.5, 1.0);
    let m = exp_exp(PremiumFunction::ExpDecay { c }, lambda, mu, delta, Penalty::ExpSurplus { nu }, 40.0);
    let a = gs_asymptote(&m).map_err(err)?;
    let t = &a.terms[1];
    let b = mu - (lambda + delta) / c;
    let k1 = b / (delta * mu / c * (b * b + 4.0 * delta * mu / c).sqrt());
    let r = t.ratio(36.0).map_err(err)?;
    // the forced response to g ~ e^{-(ν+μ)u} has coefficient 1/((σ+ν+μ)(ρ+ν+μ))
    let (sigma, rho) = roots(b, -delta * mu / c);
    let exact = 1.0 / ((sigma + nu + mu) * (rho + nu + mu));
    let detail = vec![
        format!("K₁ by hand {k1:.7}, library {:.7}", t.coef),
        format!("(Φ − h₁s)/(K₁g) = {r:.6} at 0.9U"),
        format!("particular-solution coefficient {exact:.7}; predicted limit of the ratio {:.6}", exact / k1),
    ];
    let pass = (r - 1.0).abs() <= 0.10 && rel(t.coef, k1) <= 1e-12;
    Ok(Outcome { value: (r - 1.0).abs(), tol: 0.10, pass, detail })
}

fn p2_shape() -> Result<Outcome, String> {
    let m = exp_exp(PremiumFunction::Linear { c: 1.0, eps: 0.5 }, 1.0, 2.0, 0.5, Penalty::ExpSurplus { nu: 1.0 }, 40.0);
    let a = gs_asymptote(&m).map_err(err)?;
    let t = &a.terms[1];
    let (r1, r2) = (t.ratio(30.0).map_err(err)?, t.ratio(36.0).map_err(err)?);
    let v = (r2 / r1 - 1.0).abs();
    let (k1, k2) = (r1 * t.coef, r2 * t.coef);
    let detail = vec![
        format!("(Φ − h₁s)/(u g) = {k1:.6e} at 0.75U, {k2:.6e} at 0.9U"),
        format!("u·(ratio) = {:.6e}, {:.6e}: the remainder scales like g, not u g", 30.0 * k1, 36.0 * k2),
    ];
    Ok(Outcome::at_most(v, 0.05, detail))
}

fn almost_constant() -> Result<Outcome, String> {
    let (c, lambda, mu, delta) = (1.0, 1.0, 2.0, 0.5);
    let m = exp_exp(PremiumFunction::ExpRecip { c, eps: 0.3 }, lambda, mu, delta, Penalty::RuinIndicator, 40.0);
    let ode = build_operator(&m).map_err(err)?;
    let fs = fundamental_system_with(&ode, &m, SystemPath::Numeric).map_err(err)?;
    let ld = log_derivatives(&fs, m.u_max);
    let (sigma, rho) = roots(mu - (lambda + delta) / c, -delta * mu / c);
    let (a, b) = (rel(ld[0], sigma), rel(ld[1], rho));
    let detail = vec![format!("log-derivatives {:.6}, {:.6} against σ = {sigma:.6}, ρ = {rho:.6}", ld[0], ld[1])];
    Ok(Outcome::at_most(a.max(b), 0.02, detail))
}

fn pi_constants_check() -> Result<Outcome, String> {
    let sets: [&[f64]; 7] = [
        &[-0.7],
        &[1.5],
        &[-1.0, 2.0],
        &[-2.0, -1.0, 1.0],
        &[-1.3, 0.4, 2.2],
        &[-3.0, -0.5, 0.8, 1.9],
        &[-2.5, -1.5, 0.3, 4.0],
    ];
    let mut worst = 0f64;
    for y in sets {
        let a = pi_constants(y).map_err(err)?;
        let b = pi_constants_by_determinants(y).map_err(err)?;
        for i in 0..y.len() {
            // inverse of the scaled Vandermonde matrix: 1/(y_i Π_{k≠i}(y_i − y_k))
            let lagrange = 1.0 / (y[i] * (0..y.len()).filter(|&k| k != i).map(|k| y[i] - y[k]).product::<f64>());
            let s = lagrange.abs().max(1.0);
            worst = worst.max((a[i] - b[i]).abs() / s).max((a[i] - lagrange).abs() / s);
        }
    }
    let two: Vec<f64> = pi_constants(&[-1.0, 2.0]).map_err(err)?;
    let hand = (two[0] - 1.0 / 3.0).abs().max((two[1] - 1.0 / 6.0).abs());
    worst = worst.max(hand);
    let detail = vec![format!("y = [−1, 2] → ({:.15}, {:.15}); sizes 1 to 4 against determinants and the Lagrange form", two[0], two[1])];
    Ok(Outcome::at_most(worst, 1e-12, detail))
}

fn special_functions() -> Result<Outcome, String> {
    // Γ(η, x) against a quadrature in t = v², which removes the t^{-1/2} singularity
    let mut ig = 0f64;
    for eta in [0.5, 1.0, 2.5] {
        for x in [0.0f64, 1.0, 10.0] {
            let v0 = x.sqrt();
            let q = simpson(|v| 2.0 * v.powf(2.0 * eta - 1.0) * (-v * v).exp(), v0, v0 + 12.0, 1e-4);
            ig = ig.max(rel(upper_incomplete_gamma(eta, x).map_err(err)?, q));
        }
    }
    let mut rec = 0f64;
    for (a, x) in [(0.5f64, 0.3f64), (1.7, 2.0), (3.2, 10.0), (2.5, 25.0)] {
        let lhs = upper_incomplete_gamma(a + 1.0, x).map_err(err)?;
        let rhs = a * upper_incomplete_gamma(a, x).map_err(err)? + x.powf(a) * (-x).exp();
        rec = rec.max(rel(lhs, rhs));
    }
    let mut kw = 0f64;
    for (a, b) in [(1.5f64, 4.0f64), (2.0, 3.5), (1.25, 2.7), (0.8, 1.3)] {
        for z in [0.5f64, 2.0, 8.0, 20.0] {
            let m0 = kummer_m(a, b, z).map_err(err)?;
            let m1 = a / b * kummer_m(a + 1.0, b + 1.0, z).map_err(err)?;
            let u = kummer_u_derivs(a, b, z, 1).map_err(err)?;
            let want = -gamma(b) / gamma(a) * z.powf(-b) * z.exp();
            kw = kw.max(rel(m0 * u[1] - m1 * u[0], want));
        }
    }
    // Gauss contiguous relation in a, and two elementary closed forms
    let mut hg = 0f64;
    let f = |a: f64, b: f64, c: f64, z: f64| hyp2f1(a, b, c, z).map(|h| h.value).map_err(err);
    for (a, b, c) in [(1.3f64, 0.7f64, 2.4f64), (2.1, 1.6, 3.3), (0.6, 2.2, 1.9)] {
        for z in [-0.8f64, -0.3, 0.2, 0.5, 0.8] {
            let (fm, f0, fp) = (f(a - 1.0, b, c, z)?, f(a, b, c, z)?, f(a + 1.0, b, c, z)?);
            let terms = [(c - a) * fm, (2.0 * a - c + (b - a) * z) * f0, a * (z - 1.0) * fp];
            let scale = terms.iter().map(|t| t.abs()).fold(0.0, f64::max);
            hg = hg.max(terms.iter().sum::<f64>().abs() / scale);
        }
    }
    let mut closed = 0f64;
    for z in [-4.0, -0.5, 0.3, 0.8, 0.95] {
        closed = closed.max(rel(f(1.0, 1.0, 2.0, z)?, -(-z).ln_1p() / z));
        closed = closed.max(rel(f(0.5, 1.0, 1.5, -z * z)?, z.abs().atan() / z.abs()));
    }
    let detail = vec![
        format!("Γ(η,x) vs quadrature {ig:.2e} (tol 1e-9), recurrence {rec:.2e} (tol 1e-12)"),
        format!("Kummer Wronskian {kw:.2e} (tol 1e-7)"),
        format!("₂F₁ contiguous residual {hg:.2e} (tol 1e-7), closed forms {closed:.2e} (tol 1e-8)"),
    ];
    let pass = ig <= 1e-9 && rec <= 1e-12 && kw <= 1e-7 && hg <= 1e-7 && closed <= 1e-8;
    Ok(Outcome { value: kw, tol: 1e-7, pass, detail })
}

fn main() -> ExitCode {
    let criteria: [(&str, &str, f64, Check); 12] = [
        ("1", "classical anchor and Monte Carlo", 10.0, classical_anchor),
        ("2", "Segerdahl formula against the ruin integral", 5.0, segerdahl),
        ("3", "rational, quadratic and exponential displays", 10.0, section_52_displays),
        ("4", "Green's operator, linear premium", 30.0, greens_linear),
        ("5", "Green's operator beyond second order", 30.0, greens_synthetic),
        ("6", "Gerber-Shiu pipeline against Monte Carlo", 120.0, pipeline_vs_monte_carlo),
        ("7a", "ruin asymptote ratios", 60.0, ruin_ratio),
        ("7b", "K1 asymptote, bounded premium", 60.0, k1_ratio),
        ("7c", "u g asymptote shape, linear premium", 60.0, p2_shape),
        ("8", "almost constant coefficients", 30.0, almost_constant),
        ("9", "pi constants", 1.0, pi_constants_check),
        ("10", "special-function identities", 10.0, special_functions),
    ];
    let mut unexpected = Vec::new();
    let mut passed = 0;
    for (id, title, budget, check) in criteria {
        let t0 = Instant::now();
        let outcome = check();
        let secs = t0.elapsed().as_secs_f64();
        let (pass, line, detail) = match outcome {
            Ok(o) => (
                o.pass && secs <= budget,
                format!("measured {:.3e}, tol {:.0e}", o.value, o.tol),
                o.detail,
            ),
            Err(e) => (false, "error".into(), vec![e]),
        };
        let tag = if pass { "PASS" } else { "FAIL" };
        println!("{tag} [{id:>3}] {title:<46} {line}  ({secs:.2}s of {budget:.0}s)");
        for d in detail {
            println!("           {d}");
        }
        if pass {
            passed += 1;
            if UNATTAINABLE.contains(&id) {
                println!("           note: listed as unattainable but passed");
            }
        } else if !UNATTAINABLE.contains(&id) {
            unexpected.push(id);
        }
    }
    println!("acceptance: {passed}/{} criteria pass; known unattainable: {}", criteria.len(), UNATTAINABLE.join(", "));
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected failures: {}", unexpected.join(", "));
        ExitCode::FAILURE
    }
}
