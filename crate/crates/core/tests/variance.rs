mod common;

use cure_npmle::{
    confidence_interval, fit, h_hat, infer, information, var_cure_prob, var_theta, FitOptions, LinkModel, Transform,
};

fn fitted(link: LinkModel, seed: u64) -> (cure_npmle::SurvivalSample, cure_npmle::FitResult) {
    let sample = common::simulated(link, -0.5, 1.0, 150, seed);
    let opts = FitOptions { init: Some(vec![-2.0, 1.0]), ..FitOptions::default() };
    let f = fit(&sample, &link, &opts).unwrap();
    assert!(f.converged);
    (sample, f)
}

#[test]
fn h_hat_is_the_gradient_of_log_q() {
    for link in common::all_links() {
        let sample = common::simulated(link, -0.5, 1.0, 80, 30);
        let gamma = [-1.8, 0.9];
        for i in [0, 10, 40] {
            let u = sample.time(i);
            let analytic = h_hat(&sample, &link, &gamma, u).unwrap();
            let numeric = common::central_diff(|g| common::q(&sample, &link, g, u).ln(), &gamma, 1e-6);
            assert!(common::rel_err(&analytic, &numeric) < 1e-6, "{link}: {analytic:?} vs {numeric:?}");
        }
    }
}

#[test]
fn information_matches_direct_summation() {
    for link in common::all_links() {
        let (sample, f) = fitted(link, 31);
        let ours = information(&sample, &link, &f.gamma_hat).unwrap();
        let oracle = common::info(&sample, &link, &f.gamma_hat);
        for a in 0..2 {
            for b in 0..2 {
                assert!((ours[(a, b)] - oracle[a][b]).abs() < 1e-10 * oracle[a][a].abs().max(1e-3));
            }
        }
    }
}

#[test]
fn theta_and_cure_variances_match_plug_in_formulas() {
    for link in common::all_links() {
        let (sample, f) = fitted(link, 32);
        let n = sample.len() as f64;
        let gamma = &f.gamma_hat;
        let info_inv = common::inverse_2x2(&common::info(&sample, &link, gamma));
        let mut first = 0.0;
        let mut b = [0.0; 2];
        for i in (0..sample.len()).filter(|&i| sample.event(i)) {
            let y = sample.time(i);
            let qv = common::q(&sample, &link, gamma, y);
            let gq = common::grad_q(&sample, &link, gamma, y);
            first += 1.0 / (qv * qv) / n;
            for j in 0..2 {
                b[j] += gq[j] / qv / qv / n;
            }
        }
        let v_theta = first + common::quad_form(&info_inv, &b);
        let ours = var_theta(&sample, &link, &f).unwrap();
        assert!((ours - v_theta).abs() < 1e-8 * v_theta, "{link}: {ours} vs {v_theta}");

        let x = [-0.2, -0.4];
        let gx = common::g(&link, gamma, &x);
        let p = (-gx * f.theta_hat).exp();
        let d = common::dlog_g(&link, gamma, &x);
        let u: Vec<f64> = (0..2).map(|j| f.theta_hat * d[j] - b[j]).collect();
        let v_p = p * p * gx * gx * (first + common::quad_form(&info_inv, &u));
        let ours = var_cure_prob(&sample, &link, &f, &x).unwrap();
        assert!((ours - v_p).abs() < 1e-8 * v_p, "{link}: {ours} vs {v_p}");
    }
}

#[test]
fn inference_report_is_consistent() {
    let (sample, f) = fitted(LinkModel::Cox, 33);
    let r = infer(&sample, &LinkModel::Cox, &f, 0.9).unwrap();
    let n = sample.len() as f64;
    for j in 0..2 {
        assert!((r.vcov[j][j] - r.i_hat_inv[j][j] / n).abs() < 1e-15 * r.vcov[j][j].max(1.0));
        let (lo, hi) = r.gamma_ci[j];
        assert!(lo < f.gamma_hat[j] && f.gamma_hat[j] < hi);
    }
    assert!((r.i_hat[0][1] - r.i_hat[1][0]).abs() < 1e-15);
    let (lo, hi) = confidence_interval(f.theta_hat, r.se_theta, 0.9, Transform::Log).unwrap();
    assert_eq!((lo, hi), r.theta_ci);
    assert!(((lo * hi).sqrt() - f.theta_hat).abs() < 1e-12 * f.theta_hat);
}

#[test]
fn unconverged_fit_refuses_variance() {
    let sample = common::simulated(LinkModel::Cox, -0.5, 1.0, 150, 34);
    let f = fit(&sample, &LinkModel::Cox, &FitOptions { max_iter: 0, ..FitOptions::default() }).unwrap();
    assert!(!f.converged);
    assert!(matches!(var_theta(&sample, &LinkModel::Cox, &f), Err(cure_npmle::Error::NotConverged)));
}
