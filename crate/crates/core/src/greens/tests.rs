use std::sync::Arc;

use approx::assert_relative_eq;

use super::*;
use crate::model::{Penalty, PremiumFunction, RiskModel};
use crate::numerics::grid::{default_nodes, uniform_nodes};
use crate::operator::fundamental::{exponential, fundamental_system, FnSolution, SystemPath};
use crate::operator::{build_operator, build_rhs};

fn exp_pair(sigma: f64, rho: f64, hi: f64) -> FundamentalSystem<f64> {
    FundamentalSystem::new(
        1,
        1,
        0.0,
        hi,
        SystemPath::Supplied,
        vec![exponential(sigma, 0.0), exponential(rho, 0.0)],
    )
}

fn poly_triple() -> FundamentalSystem<f64> {
    let mono = |p: i32| {
        FnSolution::shared(format!("u^{p}"), move |u: f64, order| {
            (0..=order)
                .map(|k| {
                    let k = k as i32;
                    if k > p {
                        0.0
                    } else {
                        let f: f64 = ((p - k + 1)..=p).map(f64::from).product();
                        f * u.powi(p - k)
                    }
                })
                .collect()
        })
    };
    FundamentalSystem::new(1, 2, 0.0, 5.0, SystemPath::Supplied, vec![mono(0), mono(1), mono(2)])
}

// W_3 = (3/4) u e^{-u/2} vanishes at 0, so the domain starts just after it
const SYNTHETIC_LO: f64 = 0.01;

fn synthetic() -> FundamentalSystem<f64> {
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
        SYNTHETIC_LO,
        40.0,
        SystemPath::Supplied,
        vec![exponential(-1.0, 0.0), lin, exponential(0.5, 0.0)],
    )
}

fn exp_g(nodes: Arc<Vec<f64>>, nu: f64) -> GridFunction<f64> {
    GridFunction::from_fn(nodes, Arc::new(move |u: f64| (-nu * u).exp()), true)
}

#[test]
fn exponential_pair_table() {
    let (s, r) = (-1.3, 0.7);
    let nodes = Arc::new(uniform_nodes(0.0, 10.0, 50));
    let t = WronskianTable::build(&exp_pair(s, r, 10.0), nodes).unwrap();
    for &u in &[0.0, 1.5, 7.0] {
        assert_relative_eq!(t.w(2, u), (r - s) * ((s + r) * u).exp(), max_relative = 1e-13);
        assert_relative_eq!(t.cof(1, 2, u), -(r * u).exp(), max_relative = 1e-13);
        assert_relative_eq!(t.cof(2, 2, u), t.w(1, u), max_relative = 1e-13);
    }
}

#[test]
fn polynomial_triple_table() {
    let nodes = Arc::new(uniform_nodes(0.0, 5.0, 40));
    let t = WronskianTable::build(&poly_triple(), nodes).unwrap();
    for &u in &[0.0, 0.5, 3.0] {
        assert_relative_eq!(t.w(3, u), 2.0, max_relative = 1e-13);
        for k in 1..=3 {
            assert_relative_eq!(t.cof(k, k, u), t.w(k - 1, u), max_relative = 1e-13);
        }
    }
}

#[test]
fn sylvester_identity_holds_and_detects_faults() {
    let nodes = Arc::new(uniform_nodes(0.0, 5.0, 40));
    let t = WronskianTable::build(&poly_triple(), nodes).unwrap();
    assert!(sylvester_max_residual(&t).unwrap() <= 1e-6);
    let nodes = Arc::new(uniform_nodes(0.0, 10.0, 60));
    let t = WronskianTable::build(&exp_pair(-2.0, 0.5, 10.0), nodes).unwrap();
    assert!(sylvester_lemma_residual(&t, 1, 1).unwrap() <= 1e-6);
    assert!(sylvester_lemma_residual(&t.with_fault(Fault::WronskianSign), 1, 1).unwrap() > 0.5);
    assert!(sylvester_lemma_residual(&t.with_fault(Fault::Perturb { amplitude: 0.01 }), 1, 1).unwrap() > 1e-3);
    assert!(sylvester_lemma_residual(&t, 2, 1).is_err());
}

#[test]
fn vanishing_wronskian_is_refused() {
    let fs = FundamentalSystem::new(
        1,
        1,
        0.0,
        5.0,
        SystemPath::Supplied,
        vec![exponential(-1.0, 0.0), exponential(-1.0, 0.0)],
    );
    let e = WronskianTable::build(&fs, Arc::new(uniform_nodes(0.0, 5.0, 10))).unwrap_err();
    assert!(matches!(e, Error::SingularWronskian { k: 2, .. }));
}

#[test]
fn collapsed_matches_constant_coefficient_green() {
    let (s, r, nu) = (-1.5, 0.8, 0.9);
    let nodes = Arc::new(default_nodes(0.0, 30.0, 512));
    let fs = exp_pair(s, r, 30.0);
    let op = GreensOperator::new(&fs, nodes.clone()).unwrap();
    let g = exp_g(nodes.clone(), nu);
    let gg = greens_collapsed(&op, &g).unwrap();
    let c11 = -1.0 / (r - s);
    let exact = |u: f64| {
        let i1 = (s * u).exp() * (1.0 - (-(s + nu) * u).exp()) / (s + nu);
        let i2 = (-nu * u).exp() / (r + nu);
        let i3 = (s * u).exp() / (r + nu);
        c11 * (i1 + i2 - i3)
    };
    for &u in &[0.0, 0.3, 1.0, 4.0, 12.0, 29.0] {
        assert!((gg.eval(u) - exact(u)).abs() <= 1e-10, "u = {u}: {} vs {}", gg.eval(u), exact(u));
    }
    let fac = greens_factored(&fs, nodes.clone(), &g).unwrap();
    let so = greens_second_order_system(&fs, nodes.clone(), &g).unwrap();
    for &u in nodes.iter().step_by(7) {
        assert!((fac.eval(u) - gg.eval(u)).abs() <= 1e-7);
        assert!((so.eval(u) - gg.eval(u)).abs() <= 1e-7);
    }
}

#[test]
fn zero_forcing_gives_zero() {
    let nodes = Arc::new(uniform_nodes(0.0, 10.0, 40));
    let fs = exp_pair(-1.0, 1.0, 10.0);
    let op = GreensOperator::new(&fs, nodes.clone()).unwrap();
    let gg = greens_collapsed(&op, &GridFunction::zero(nodes.clone())).unwrap();
    assert_eq!(gg.value.sup_norm(), 0.0);
}

#[test]
fn second_order_closed_form() {
    // s = e^{-u}, r = e^{u}, w = 2, g = e^{-2u}:
    // Gg = e^{-u}(e^{-u} - 1)/2·(-1/... ) evaluated symbolically
    let nodes = Arc::new(default_nodes(0.0, 30.0, 512));
    let fs = exp_pair(-1.0, 1.0, 30.0);
    let g = exp_g(nodes.clone(), 2.0);
    let so = greens_second_order_system(&fs, nodes, &g).unwrap();
    // -e^{-u}(1-e^{-u})/2 - e^{u} e^{-3u}/6 + e^{-u}/6
    let exact = |u: f64| -(-u).exp() * (1.0 - (-u).exp()) / 2.0 - (-2.0 * u).exp() / 6.0 + (-u).exp() / 6.0;
    assert!(so.eval(0.0).abs() < 1e-14);
    for &u in &[0.5, 2.0, 10.0] {
        assert_relative_eq!(so.eval(u), exact(u), max_relative = 1e-10);
    }
}

#[test]
fn synthetic_three_solution_system() {
    let nodes = Arc::new(default_nodes(SYNTHETIC_LO, 40.0, 1024));
    let fs = synthetic();
    let op = GreensOperator::new(&fs, nodes.clone()).unwrap();
    let byd = op.stilde_by_determinants();
    for (a, b) in op.stilde.iter().flatten().zip(byd.iter().flatten()) {
        assert_relative_eq!(*a, *b, max_relative = 1e-12);
    }
    assert!(sylvester_max_residual(&op.table).unwrap() <= 1e-6);
    let g = exp_g(nodes.clone(), 2.0);
    let col = greens_collapsed(&op, &g).unwrap();
    let fac = greens_factored(&fs, nodes.clone(), &g).unwrap();
    let diff = nodes.iter().map(|&u| (col.eval(u) - fac.eval(u)).abs()).fold(0.0, f64::max);
    assert!(diff <= 1e-5, "sup difference {diff}");
    // homogeneous initial condition and decay
    assert!(col.eval(SYNTHETIC_LO).abs() <= 1e-10);
    assert!(col.eval(40.0).abs() < 1e-6);
}

#[test]
fn right_inverse_and_normalization_invariance() {
    let m = RiskModel::exp_exp(
        PremiumFunction::Linear { c: 1.0, eps: 0.5 },
        1.0,
        2.0,
        0.5,
        Penalty::ExpSurplus { nu: 1.0 },
        30.0,
    );
    let ode = build_operator(&m).unwrap();
    let fs = fundamental_system(&ode, &m).unwrap();
    let nodes = Arc::new(default_nodes(0.0, 30.0, 1024));
    let g = build_rhs(&m, nodes.clone()).unwrap();
    let op = GreensOperator::new(&fs, nodes.clone()).unwrap();
    let gg = greens_collapsed(&op, &g).unwrap();
    let interior: Vec<f64> = nodes.iter().copied().filter(|&u| u > 0.0 && u < 29.0).step_by(5).collect();
    let res = gg.operator_residual(&ode, &g, &interior).unwrap();
    assert!(res <= 1e-5, "operator residual {res}");
    assert!(gg.eval(0.0).abs() <= 1e-8 * g.sup_norm());

    let scaled = fs.rescaled(&[2.5, -0.25]);
    let op2 = GreensOperator::new(&scaled, nodes.clone()).unwrap();
    let gg2 = greens_collapsed(&op2, &g).unwrap();
    for &u in interior.iter().step_by(4) {
        assert!((gg.eval(u) - gg2.eval(u)).abs() <= 1e-8 * gg.value.sup_norm().max(1e-300));
    }
    let so = greens_second_order_system(&fs, nodes.clone(), &g).unwrap();
    for &u in interior.iter().step_by(4) {
        assert!((so.eval(u) - gg.eval(u)).abs() <= 1e-6 * gg.value.sup_norm());
    }
}
