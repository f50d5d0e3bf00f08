use proptest::prelude::*;

use ruin_core::asymptotics::pi_constants;
use ruin_core::gerber_shiu::closed_form::ruin_tichy;
use ruin_core::model::PremiumFunction;
use ruin_core::montecarlo::flow;

fn premium() -> impl Strategy<Value = PremiumFunction<f64>> {
    prop_oneof![
        (0.6f64..2.0).prop_map(|c| PremiumFunction::Constant { c }),
        (0.6f64..2.0, 0.05f64..1.0).prop_map(|(c, eps)| PremiumFunction::Linear { c, eps }),
        (0.6f64..2.0).prop_map(|c| PremiumFunction::Quadratic { c }),
        (0.6f64..2.0).prop_map(|c| PremiumFunction::ExpDecay { c }),
        (0.6f64..2.0, 0.1f64..2.0).prop_map(|(c, eps)| PremiumFunction::Rational { c, eps }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    // λ = 1, μ = 2 keeps every premium above the claim outflow rate 1/2
    #[test]
    fn ruin_probability_is_a_decreasing_probability(p in premium(), u in 0.0f64..8.0, du in 0.01f64..3.0) {
        let a = ruin_tichy(&p, 1.0, 2.0, u).unwrap();
        let b = ruin_tichy(&p, 1.0, 2.0, u + du).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!(b < a, "ψ({u}) = {a}, ψ({}) = {b}", u + du);
    }

    #[test]
    fn flow_is_a_monotone_semigroup(p in premium(), u0 in 0.0f64..5.0, s in 0.0f64..1.5, t in 0.0f64..1.5, du in 0.01f64..1.0) {
        let whole = flow(&p, u0, s + t, 1e-10).unwrap();
        // the quadratic flow explodes in finite time
        prop_assume!(whole.is_finite());
        let split = flow(&p, flow(&p, u0, s, 1e-10).unwrap(), t, 1e-10).unwrap();
        prop_assert!((whole - split).abs() <= 1e-7 * whole.abs().max(1.0), "{whole} vs {split}");
        prop_assert!(whole >= u0);
        prop_assert!(!(flow(&p, u0 + du, s + t, 1e-10).unwrap() <= whole));
    }

    #[test]
    fn pi_constants_reproduce_the_moments(y in prop::collection::vec(-3.0f64..3.0, 1..=4)) {
        // well separated, nonzero rates
        let mut s = y.clone();
        s.sort_by(f64::total_cmp);
        prop_assume!(s.iter().all(|v| v.abs() > 0.2) && s.windows(2).all(|w| w[1] - w[0] > 0.2));
        let pi: Vec<f64> = pi_constants(&s).unwrap();
        // Σ π_i y_i^j = 0 for j < N - 1 and 1 for j = N - 1 (j ≥ 1 moments of the Lagrange form)
        let n = s.len();
        for j in 1..=n {
            let m: f64 = pi.iter().zip(&s).map(|(p, y)| p * y.powi(j as i32)).sum();
            let want = if j == n { 1.0 } else { 0.0 };
            let scale = pi.iter().zip(&s).map(|(p, y)| (p * y.powi(j as i32)).abs()).fold(1.0, f64::max);
            prop_assert!((m - want).abs() <= 1e-10 * scale, "j = {j}: {m}");
        }
    }
}
