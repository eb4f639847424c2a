mod common;

use cure_npmle::{check_gradient, evaluate, Link, LinkModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn gradient_agrees_with_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for link in common::all_links() {
        for _ in 0..1000 {
            let gamma = [rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)];
            let x = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let err = check_gradient(&link, &gamma, &x, 1e-6).unwrap();
            assert!(err < 1e-6, "{link} {gamma:?} {x:?}: {err}");
        }
    }
}

#[test]
fn values_match_closed_forms() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for link in common::all_links() {
        for _ in 0..200 {
            let gamma = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            let x = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let e = evaluate(&link, &gamma, &x).unwrap();
            let g = common::g(&link, &gamma, &x);
            assert!(e.value > 0.0 && (e.value - g).abs() < 1e-13 * g);
            let d = common::dlog_g(&link, &gamma, &x);
            assert!(common::rel_err(&e.dlog, &d) < 1e-13);
        }
    }
}

#[test]
fn log_hessian_matches_differences_of_dlog() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for link in common::all_links() {
        for _ in 0..200 {
            let gamma = [rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)];
            let x = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let mut hess = [0.0; 4];
            assert!(link.log_hessian(&gamma, &x, &mut hess));
            for a in 0..2 {
                let numeric = common::central_diff(|g| common::dlog_g(&link, g, &x)[a], &gamma, 1e-6);
                assert!(common::rel_err(&hess[2 * a..2 * a + 2], &numeric) < 1e-6, "{link}");
            }
        }
    }
}

#[test]
fn link_specs_round_trip_through_json() {
    for link in common::all_links() {
        let json = serde_json::to_string(&link).unwrap();
        assert_eq!(serde_json::from_str::<LinkModel>(&json).unwrap(), link);
    }
}
