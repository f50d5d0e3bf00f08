use super::*;
use crate::gerber_shiu::{phi, RouteChoice};
use crate::model::{ClaimLaw, Penalty};

fn classical(u_max: f64) -> RiskModel<f64> {
    RiskModel::exp_exp(PremiumFunction::Constant { c: 1.0 }, 1.0, 2.0, 0.0, Penalty::RuinIndicator, u_max)
}

fn quick(paths: usize) -> SimConfig {
    SimConfig::default().with_paths(paths)
}

#[test]
fn flow_examples() {
    let f = |p: PremiumFunction<f64>, u0: f64, t: f64| flow(&p, u0, t, 1e-12).unwrap();
    assert_eq!(f(PremiumFunction::Constant { c: 2.0 }, 1.0, 3.0), 7.0);
    assert!((f(PremiumFunction::Linear { c: 1.0, eps: 1.0 }, 0.0, 2f64.ln()) - 1.0).abs() < 1e-15);
    let sq = PremiumFunction::Quadratic { c: 0.0 };
    assert!((f(sq.clone(), 1.0, 0.5) - 2.0).abs() < 1e-15);
    assert_eq!(f(sq.clone(), 1.0, 1.0), f64::INFINITY);
    assert_eq!(flow_capped(&sq, 1.0, 0.999, 50.0, 1e-12).unwrap(), 50.0);
}

#[test]
fn closed_flows_match_runge_kutta() {
    let mk = |c: f64| {
        PremiumFunction::Custom(crate::model::CustomPremium {
            label: "copy".into(),
            p: std::sync::Arc::new(move |u: f64| c * (1.0 + (-u).exp())),
            dp: None,
            limit: None,
        })
    };
    for &(u0, t) in &[(0.0, 0.3), (2.0, 1.7), (0.5, 6.0)] {
        let exact = flow(&PremiumFunction::ExpDecay { c: 1.3 }, u0, t, 1e-12).unwrap();
        let rk = flow(&mk(1.3), u0, t, 1e-12).unwrap();
        assert!((exact / rk - 1.0).abs() < 1e-9, "{u0} {t}: {exact} {rk}");
        // the flow is a semigroup
        let half = flow(&PremiumFunction::ExpDecay { c: 1.3 }, u0, t / 2.0, 1e-12).unwrap();
        let two = flow(&PremiumFunction::ExpDecay { c: 1.3 }, half, t / 2.0, 1e-12).unwrap();
        assert!((two / exact - 1.0).abs() < 1e-13);
    }
    let q = PremiumFunction::Quadratic { c: 1.0 };
    let tq = flow(&q, 0.5, 0.4, 1e-12).unwrap();
    let rq = flow_rk(&q, 0.5, 0.4, f64::INFINITY, 1e-12).unwrap();
    assert!((tq / rq - 1.0).abs() < 1e-9);
}

#[test]
fn classical_ruin_estimates() {
    let m = classical(5.0);
    let e0 = estimate_ruin(&m, 0.0, &quick(100_000)).unwrap();
    assert!(e0.z_score(0.5).abs() <= 3.0, "{e0:?}");
    let e1 = estimate_ruin(&m, 1.0, &quick(100_000)).unwrap();
    assert!(e1.z_score(0.5 * (-1f64).exp()).abs() <= 3.0, "{e1:?}");
    assert_eq!(e0.n_censored, 0);
    assert!(!e0.biased);
    assert!(e0.barrier_bound.unwrap() < 1e-20);
}

#[test]
fn start_at_barrier_survives() {
    let e = estimate_ruin(&classical(5.0), 50.0, &quick(1000)).unwrap();
    assert_eq!(e.mean, 0.0);
    assert_eq!(e.n_ruined, 0);
}

#[test]
fn penalty_reduces_to_ruin_on_common_numbers() {
    let m = classical(5.0);
    let cfg = quick(20_000);
    let r = estimate_ruin(&m, 0.5, &cfg).unwrap();
    let p = estimate_penalty(&m, 0.5, &cfg).unwrap();
    assert_eq!(r, p);
    let mut last = p.mean;
    for delta in [0.1, 0.5, 2.0] {
        let d = estimate_penalty(&m.clone().with_delta(delta), 0.5, &cfg).unwrap();
        assert!(d.mean <= last);
        last = d.mean;
    }
    let d = estimate_penalty(&m.with_delta(0.5), 0.0, &cfg).unwrap();
    assert!(d.mean < 0.5);
}

#[test]
fn seeds_and_schedules_are_reproducible() {
    let m = classical(5.0);
    let cfg = quick(40_000).with_seed(7);
    let a = estimate_ruin(&m, 0.0, &cfg).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| estimate_ruin(&m, 0.0, &cfg).unwrap());
    assert_eq!(a.mean.to_bits(), b.mean.to_bits());
    assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
    let c = estimate_ruin(&m, 0.0, &cfg.clone().with_seed(8)).unwrap();
    assert_ne!(a.mean, c.mean);
    let one = simulate_path(&m, 0.0, &cfg, 123).unwrap();
    assert_eq!(one, simulate_path(&m, 0.0, &cfg, 123).unwrap());
}

#[test]
fn variance_scales_with_paths() {
    let m = classical(5.0);
    let a = estimate_ruin(&m, 0.0, &quick(50_000).with_seed(1)).unwrap();
    let b = estimate_ruin(&m, 0.0, &quick(100_000).with_seed(2)).unwrap();
    let ratio = (a.std_error * a.std_error) / (b.std_error * b.std_error);
    assert!((ratio / 2.0 - 1.0).abs() < 0.2, "{ratio}");
}

#[test]
fn barrier_choice_is_immaterial_for_the_classical_model() {
    let m = classical(5.0);
    let a = estimate_ruin(&m, 0.0, &quick(50_000).with_barrier(25.0)).unwrap();
    let b = estimate_ruin(&m, 0.0, &quick(50_000).with_barrier(50.0)).unwrap();
    // common random numbers: paths only differ after passing 25
    assert!((a.mean - b.mean).abs() < a.std_error, "{a:?} {b:?}");
}

#[test]
fn drift_failure_is_refused() {
    let m = RiskModel::exp_exp(PremiumFunction::Constant { c: 0.4 }, 1.0, 2.0, 0.0, Penalty::RuinIndicator, 5.0);
    let e = estimate_ruin(&m, 0.0, &quick(10)).unwrap_err();
    assert_eq!(e.stage(), Some(Stage::MonteCarlo));
    assert!(e.to_string().contains("net profit"), "{e}");
    assert!(estimate_ruin(&classical(5.0), 0.0, &quick(0)).is_err());
}

#[test]
fn stage_sampler_moments() {
    // Erlang(2, 2): mean 1, variance 1/2
    let s = StageSampler::new(&ClaimLaw::<f64>::RationalLaplace { beta: vec![4.0, 4.0] }.rational(), "claims").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 200_000;
    let xs: Vec<f64> = (0..n).map(|_| s.sample(&mut rng)).collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    assert!((mean - 1.0).abs() < 4.0 * (0.5f64 / n as f64).sqrt());
    assert!((var - 0.5).abs() < 0.02);
    let complex = ClaimLaw::<f64>::RationalLaplace { beta: vec![2.0, 1.0] }.rational();
    assert!(matches!(StageSampler::new(&complex, "claims"), Err(Error::Unsupported(_))));
}

#[test]
fn quadratic_premium_against_quadrature() {
    let p = PremiumFunction::Quadratic { c: 1.0 };
    let m = RiskModel::exp_exp(p.clone(), 1.0, 2.0, 0.0, Penalty::RuinIndicator, 5.0);
    let want = TichyRuin::new(&p, 1.0, 2.0).unwrap().eval(0.0).unwrap();
    let e = estimate_ruin(&m, 0.0, &quick(100_000)).unwrap();
    assert!(e.z_score(want).abs() <= 3.0, "{want} {e:?}");
}

#[test]
fn discounted_penalty_against_greens_route() {
    let m = RiskModel::exp_exp(
        PremiumFunction::Linear { c: 1.0, eps: 0.5 },
        1.0,
        2.0,
        0.5,
        Penalty::ExpSurplus { nu: 1.0 },
        40.0,
    );
    let sol = phi(&m, RouteChoice::Greens).unwrap();
    let e = estimate_penalty(&m, 1.0, &quick(40_000).with_barrier(60.0)).unwrap();
    assert!(e.z_score(sol.eval(1.0)).abs() <= 3.0, "{} {e:?}", sol.eval(1.0));
}
