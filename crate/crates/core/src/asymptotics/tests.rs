use super::*;
use crate::gerber_shiu::closed_form::TichyRuin;
use crate::operator::fundamental::{fundamental_system_with, SystemPath};

fn model(p: PremiumFunction<f64>, delta: f64, penalty: Penalty<f64>) -> RiskModel<f64> {
    RiskModel::exp_exp(p, 1.0, 2.0, delta, penalty, 40.0)
}

#[test]
fn pi_constants_three_ways() {
    let sets: Vec<Vec<f64>> = vec![
        vec![-0.7],
        vec![-1.0, 2.0],
        vec![-2.0, -1.0, 1.0],
        vec![-1.3, 0.4, 2.2],
        vec![-3.0, -0.5, 0.8, 1.9],
        vec![-2.5, -1.5, 0.3, 4.0],
    ];
    for y in sets {
        let a = pi_constants(&y).unwrap();
        let b = pi_constants_by_determinants(&y).unwrap();
        let c = pi_closed_pattern(&y).unwrap();
        for i in 0..y.len() {
            assert!((a[i] - b[i]).abs() <= 1e-12 * a[i].abs().max(1.0), "{y:?}");
            assert!((a[i] - c[i]).abs() <= 1e-12 * a[i].abs().max(1.0), "{y:?}");
        }
    }
}

#[test]
fn constant_premium_roots_need_no_correction() {
    let m = model(PremiumFunction::Constant { c: 1.0 }, 0.5, Penalty::RuinIndicator);
    let ode = build_operator(&m).unwrap();
    let (sigma, rho) = ode.characteristic_roots(0.0).unwrap();
    let (e1, e2) = corrected_log_derivatives(&ode, 3.0, 0).unwrap();
    assert!((e1.value() - sigma).abs() < 1e-14 && (e2.value() - rho).abs() < 1e-14);
    let f = fedoryuk_solutions(&ode, &m).unwrap();
    assert!((f.eval(2.0, true).unwrap() / (2.0 * sigma).exp() - 1.0).abs() < 1e-9);
    assert!(wkb_residual(&ode, 5.0, false).unwrap().abs() < 1e-13);
}

#[test]
fn wkb_shapes_for_linear_premium() {
    let (c, eps, lambda, mu): (f64, f64, f64, f64) = (1.0, 0.5, 1.0, 2.0);
    let m = model(PremiumFunction::Linear { c, eps }, 0.0, Penalty::RuinIndicator);
    let f = fedoryuk_solutions(&build_operator(&m).unwrap(), &m).unwrap();
    let ratio = |u: f64| f.eval(u, true).unwrap() / ((eps * u + c).powf(lambda / eps - 1.0) * (-mu * u).exp());
    // constant up to the 1 + O(1/u) of the first correction
    let (d1, d2) = ((ratio(30.0) / ratio(20.0) - 1.0).abs(), (ratio(40.0) / ratio(30.0) - 1.0).abs());
    assert!(d1 < 1e-2 && d2 < d1, "{d1} {d2}");

    let delta = 0.5;
    let m = model(PremiumFunction::Linear { c, eps }, delta, Penalty::RuinIndicator);
    let ode = build_operator(&m).unwrap();
    let f = fedoryuk_solutions(&ode, &m).unwrap();
    let ratio = |u: f64| f.eval(u, false).unwrap() / (eps * u + c).powf(delta / eps);
    assert!((ratio(30.0) / ratio(20.0) - 1.0).abs() < 2e-2);
    let res: Vec<f64> = [5.0, 15.0, 35.0]
        .iter()
        .map(|&u| wkb_residual(&ode, u, true).unwrap().abs())
        .collect();
    assert!(res[0] > res[1] && res[1] > res[2], "{res:?}");
}

#[test]
fn class_check_refuses_unclassified_premiums() {
    use crate::model::CustomPremium;
    let p = PremiumFunction::Custom(CustomPremium {
        label: "wavy".into(),
        p: std::sync::Arc::new(|u: f64| 2.0 + u.sin()),
        dp: None,
        limit: None,
    });
    let m = model(p, 0.5, Penalty::RuinIndicator);
    let ode = build_operator(&m).unwrap();
    assert!(matches!(fedoryuk_solutions(&ode, &m), Err(Error::Condition(_))));
}

#[test]
fn expansion_theorem_constant_coefficients() {
    let m = model(PremiumFunction::Constant { c: 1.0 }, 0.5, Penalty::ExpSurplus { nu: 1.0 });
    let ode = build_operator(&m).unwrap();
    let fs = fundamental_system(&ode, &m).unwrap();
    let form = expansion_theorem41(&m, &fs, 3.0).unwrap();
    let (sigma, rho) = ode.characteristic_roots(0.0).unwrap();
    assert!((form.terms[1].coef - 1.0 / ((sigma + 3.0) * (rho + 3.0))).abs() < 1e-12);
    for (_, r) in form.ratio_checkpoints(1, &[0.5, 0.75, 1.0]).unwrap() {
        assert!((r - 1.0).abs() < 1e-6, "{r}");
    }
    // the leading term carries all of Φ's stable part
    for (_, r) in form.ratio_checkpoints(0, &[0.5, 0.9]).unwrap() {
        assert!((r - 1.0).abs() < 1e-6);
    }
    assert!(form.notes[0].contains("printed"));
}

#[test]
fn expansion_theorem_discount_free_is_one_term() {
    let m = model(PremiumFunction::Constant { c: 1.0 }, 0.0, Penalty::RuinIndicator);
    let ode = build_operator(&m).unwrap();
    let fs = fundamental_system(&ode, &m).unwrap();
    let form = expansion_theorem41(&m, &fs, 1.0).unwrap();
    assert_eq!(form.terms.len(), 1);
    assert!((form.terms[0].coef - 0.5).abs() < 1e-10);
}

#[test]
fn expansion_theorem_reports_failed_conditions() {
    let m = model(PremiumFunction::Linear { c: 1.0, eps: 0.5 }, 0.5, Penalty::ExpSurplus { nu: 1.0 });
    let ode = build_operator(&m).unwrap();
    let fs = fundamental_system(&ode, &m).unwrap();
    let e = expansion_theorem41(&m, &fs, 3.0).unwrap_err();
    // r grows like a power of u, so either the fit or the ordering fails
    assert!(e.stage() == Some(Stage::Asymptotics) && e.to_string().contains("condition"), "{e}");
}

#[test]
fn classical_ruin_asymptote_is_exact() {
    let m = model(PremiumFunction::Constant { c: 1.0 }, 0.0, Penalty::RuinIndicator);
    let a = ruin_asymptote(&m).unwrap();
    assert!((a.eval(0.0) - 0.5).abs() < 1e-10);
    for (_, r) in a.ratio_checkpoints(0, &[0.1, 0.5, 0.9]).unwrap() {
        assert!((r - 1.0).abs() < 1e-8);
    }
}

#[test]
fn ruin_asymptote_ratios_approach_one() {
    for p in [
        PremiumFunction::Linear { c: 1.0, eps: 0.5 },
        PremiumFunction::ExpDecay { c: 1.0 },
        PremiumFunction::Quadratic { c: 1.0 },
    ] {
        let m = model(p.clone(), 0.0, Penalty::RuinIndicator);
        let a = ruin_asymptote(&m).unwrap();
        let t = TichyRuin::new(&p, 1.0, 2.0).unwrap();
        let r = |u: f64| t.eval(u).unwrap() / a.eval(u);
        let (r5, r9) = (r(20.0), r(36.0));
        assert!((r9 - 1.0).abs() < (r5 - 1.0).abs() || (r9 - 1.0).abs() < 1e-9, "{}: {r5} {r9}", p.family());
        assert!((r9 - 1.0).abs() < 0.05, "{}: {r9}", p.family());
        assert!(a.validity.is_some(), "{}", p.family());
    }
}

#[test]
fn k1_plug_in() {
    let k = k1_constant(1.0, 1.0, 2.0, 0.5).unwrap();
    let b: f64 = 2.0 - 1.5;
    let want = b / (1.0 * (b * b + 4.0).sqrt());
    assert!((k - want).abs() < 1e-14);
    assert!((k - 0.2425356250).abs() < 1e-9);
}

#[test]
fn asymptotically_constant_premium_remainder() {
    // the remainder Φ - h_1 s follows the particular solution of the limiting
    // constant-coefficient equation
    let m = model(PremiumFunction::ExpDecay { c: 1.0 }, 0.5, Penalty::ExpSurplus { nu: 1.0 });
    let a = gs_asymptote(&m).unwrap();
    let (sigma, rho) = (-1.280776406404415, 0.7807764064044151);
    let exact = 1.0 / ((sigma + 3.0) * (rho + 3.0));
    let t = &a.terms[1];
    let r = |u: f64| t.ratio(u).unwrap() * t.coef / exact;
    assert!((r(36.0) - 1.0).abs() < (r(20.0) - 1.0).abs());
    assert!((r(36.0) - 1.0).abs() < 0.05, "{}", r(36.0));
}

#[test]
fn exp_recip_coefficients_settle() {
    let m = model(PremiumFunction::ExpRecip { c: 1.0, eps: 0.3 }, 0.5, Penalty::RuinIndicator);
    let ode = build_operator(&m).unwrap();
    let lim = limiting_coefficients(&m).unwrap();
    // a(u) = e^{-ε/u} - 1 ~ -ε/u, so the integrals grow like ln u
    assert!(matches!(coefficient_perturbation_integrals(&ode, lim), Err(Error::Divergence(_))));
    let i = |x: f64| coefficient_perturbation_integrals_to(&ode, lim, x).unwrap();
    let (a, b, c) = (i(1e2), i(1e3), i(1e4));
    let slope = (1.5 / 1.0) * 0.3;
    assert!(((c.0 - b.0) / 10f64.ln() - slope).abs() < 1e-2 * slope);
    assert!(((b.0 - a.0) - (c.0 - b.0)).abs() < 1e-2 * (c.0 - b.0));
    let fs = fundamental_system_with(&ode, &m, SystemPath::Numeric).unwrap();
    let ld = log_derivatives(&fs, 40.0);
    let (sigma, rho) = quadratic_roots(lim.1, lim.0).unwrap();
    assert!((ld[0] / sigma - 1.0).abs() < 0.02);
    assert!((ld[1] / rho - 1.0).abs() < 0.02);
}

#[test]
fn report_round_trip() {
    let m = model(PremiumFunction::Quadratic { c: 1.0 }, 0.0, Penalty::RuinIndicator);
    let a = ruin_asymptote(&m).unwrap();
    let r = a.report(0, &[0.5, 0.75, 0.9]);
    assert_eq!(r.ratio_checkpoints.len(), 3);
    assert_eq!(AsymptoteReport::from_json(&r.to_json()).unwrap(), r);
}
