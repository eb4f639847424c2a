mod common;

use cure_npmle::{fit, profile_loglik, FitOptions, LinkModel, Observation, SurvivalSample, TauPolicy};
use proptest::prelude::*;

fn link_strategy() -> impl Strategy<Value = LinkModel> {
    prop_oneof![
        Just(LinkModel::Cox),
        (1u32..=4).prop_map(LinkModel::Poly),
        Just(LinkModel::Sin),
        (1u32..=4).prop_map(LinkModel::SinPoly),
    ]
}

/// Quarter-unit times so ties are common; at least one event.
fn sample_strategy() -> impl Strategy<Value = SurvivalSample> {
    (1usize..=2).prop_flat_map(|d| {
        prop::collection::vec((1u32..=8, any::<bool>(), prop::collection::vec(-1.0f64..1.0, d)), 2..=30)
            .prop_filter("needs an event", |rows| rows.iter().any(|r| r.1))
            .prop_map(|rows| {
                let obs = rows.into_iter().map(|(t, e, x)| Observation::new(t as f64 / 4.0, e, x)).collect();
                SurvivalSample::new(obs, TauPolicy::Auto).unwrap()
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn fit_structure(sample in sample_strategy(), link in link_strategy()) {
        let v = common::structural_violations(&sample, &link);
        prop_assert!(v.is_empty(), "{v:?}");
    }

    #[test]
    fn csv_round_trip(sample in sample_strategy()) {
        let mut buf = Vec::new();
        sample.write_csv(&mut buf).unwrap();
        let back = SurvivalSample::from_csv_reader(&buf[..], TauPolicy::Auto).unwrap();
        prop_assert_eq!(back.observations(), sample.observations());
        prop_assert_eq!(back.tau(), sample.tau());
    }

    #[test]
    fn row_order_does_not_matter(sample in sample_strategy(), seed in any::<u64>()) {
        let mut rows = sample.observations().to_vec();
        let k = (seed % rows.len() as u64) as usize;
        rows.rotate_left(k);
        rows.reverse();
        let shuffled = SurvivalSample::new(rows, TauPolicy::Auto).unwrap();
        let gamma = vec![0.3; sample.dim()];
        let a = profile_loglik(&sample, &LinkModel::Cox, &gamma).unwrap();
        let b = profile_loglik(&shuffled, &LinkModel::Cox, &gamma).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
    }

    #[test]
    fn fit_never_decreases_pll_from_start(sample in sample_strategy(), start in -1.0f64..1.0) {
        let init = vec![start; sample.dim()];
        let opts = FitOptions { init: Some(init.clone()), ..FitOptions::default() };
        let f = fit(&sample, &LinkModel::Cox, &opts).unwrap();
        let at_start = profile_loglik(&sample, &LinkModel::Cox, &init).unwrap();
        prop_assert!(f.pll >= at_start - 1e-9 * (1.0 + at_start.abs()), "{} < {}", f.pll, at_start);
    }

    #[test]
    fn lambda_root_is_smallest(q in prop::collection::vec(0.05f64..5.0, 1..40), extra in 0usize..40) {
        use cure_npmle::promotion_time::{lambda_residual, solve_lambda};
        let n = q.len() + extra;
        let lambda = solve_lambda(&q, n).unwrap();
        let min_q = q.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!(lambda < min_q);
        prop_assert!(lambda_residual(&q, n, lambda).abs() < 1e-10);
        // The residual is increasing on (-∞, min q), so no smaller root exists.
        prop_assert!(lambda_residual(&q, n, lambda - 1e-3 * (1.0 + lambda.abs())) < 0.0);
    }
}
