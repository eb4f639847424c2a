//! Independent reference computations used as test oracles. Likelihood
//! pieces are recomputed by direct summation from their definitions; only
//! [`structural_violations`] looks at estimator output.

#![allow(dead_code, clippy::neg_cmp_op_on_partial_ord)]

use cure_npmle::simulate::{generate, replication_rng, Design};
use cure_npmle::{Link, LinkModel, Observation, SurvivalSample, TauPolicy};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn all_links() -> Vec<LinkModel> {
    vec![LinkModel::Cox, LinkModel::Poly(3), LinkModel::Sin, LinkModel::SinPoly(4)]
}

/// `(Γ(s), Γ'(s))` written out per family.
pub fn gamma_fn(link: &LinkModel, s: f64) -> (f64, f64) {
    match *link {
        LinkModel::Cox => (s, 1.0),
        LinkModel::Poly(k) => (s.powi(k as i32), k as f64 * s.powi(k as i32 - 1)),
        LinkModel::Sin => (s.sin(), s.cos()),
        LinkModel::SinPoly(k) => {
            let inner = s.powi(k as i32);
            (inner.sin(), inner.cos() * k as f64 * s.powi(k as i32 - 1))
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn g(link: &LinkModel, gamma: &[f64], x: &[f64]) -> f64 {
    gamma_fn(link, dot(gamma, x)).0.exp()
}

/// `∇_γ log g = Γ'(γᵀx) x`.
pub fn dlog_g(link: &LinkModel, gamma: &[f64], x: &[f64]) -> Vec<f64> {
    let slope = gamma_fn(link, dot(gamma, x)).1;
    x.iter().map(|v| slope * v).collect()
}

pub fn at_risk(sample: &SurvivalSample, i: usize, u: f64) -> bool {
    sample.time(i) > sample.tau() || sample.time(i) >= u
}

pub fn q(sample: &SurvivalSample, link: &LinkModel, gamma: &[f64], u: f64) -> f64 {
    let n = sample.len();
    (0..n).filter(|&i| at_risk(sample, i, u)).map(|i| g(link, gamma, sample.covariates(i))).sum::<f64>() / n as f64
}

pub fn grad_q(sample: &SurvivalSample, link: &LinkModel, gamma: &[f64], u: f64) -> Vec<f64> {
    let n = sample.len();
    let mut out = vec![0.0; gamma.len()];
    for i in (0..n).filter(|&i| at_risk(sample, i, u)) {
        let x = sample.covariates(i);
        let gi = g(link, gamma, x);
        for (o, d) in out.iter_mut().zip(dlog_g(link, gamma, x)) {
            *o += gi * d / n as f64;
        }
    }
    out
}

pub fn pll(sample: &SurvivalSample, link: &LinkModel, gamma: &[f64]) -> f64 {
    (0..sample.len())
        .filter(|&i| sample.event(i))
        .map(|i| g(link, gamma, sample.covariates(i)).ln() - q(sample, link, gamma, sample.time(i)).ln())
        .sum()
}

/// `n⁻¹ Σ δᵢ (dᵢ - ĥ(Yᵢ))(dᵢ - ĥ(Yᵢ))ᵀ`.
pub fn info(sample: &SurvivalSample, link: &LinkModel, gamma: &[f64]) -> Vec<Vec<f64>> {
    let p = gamma.len();
    let n = sample.len() as f64;
    let mut m = vec![vec![0.0; p]; p];
    for i in (0..sample.len()).filter(|&i| sample.event(i)) {
        let y = sample.time(i);
        let qv = q(sample, link, gamma, y);
        let r: Vec<f64> = dlog_g(link, gamma, sample.covariates(i))
            .iter()
            .zip(grad_q(sample, link, gamma, y))
            .map(|(d, gq)| d - gq / qv)
            .collect();
        for a in 0..p {
            for b in 0..p {
                m[a][b] += r[a] * r[b] / n;
            }
        }
    }
    m
}

pub fn inverse_2x2(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    vec![vec![m[1][1] / det, -m[0][1] / det], vec![-m[1][0] / det, m[0][0] / det]]
}

pub fn quad_form(m: &[Vec<f64>], v: &[f64]) -> f64 {
    (0..v.len()).map(|a| (0..v.len()).map(|b| v[a] * m[a][b] * v[b]).sum::<f64>()).sum()
}

/// Central differences of `f` at `x` with step `h`.
pub fn central_diff(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|j| {
            probe[j] = x[j] + h;
            let up = f(&probe);
            probe[j] = x[j] - h;
            let down = f(&probe);
            probe[j] = x[j];
            (up - down) / (2.0 * h)
        })
        .collect()
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().map(|v| v.abs()).fold(1.0, f64::max);
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

pub fn design(link: LinkModel, alpha: f64, lambda: f64) -> Design {
    Design::new(link, &[-2.0, 1.0], 0.1, alpha, lambda, 1.0 / 12.0)
}

/// Sample from the simulation design, with the threshold at the last event.
pub fn simulated(link: LinkModel, alpha: f64, lambda: f64, n: usize, seed: u64) -> SurvivalSample {
    generate(&design(link, alpha, lambda), n, &mut replication_rng(seed, 0))
        .and_then(|s| s.with_tau(TauPolicy::Auto))
        .expect("simulated sample")
}

/// A small sample with coarse times (so ties occur), one or two covariates
/// and at least one event. `kind` 1 forces all times equal, 2 a single event.
pub fn small_instance(rng: &mut ChaCha8Rng, kind: u8) -> SurvivalSample {
    let n = rng.random_range(2..=30);
    let d = rng.random_range(1..=2);
    let mut obs: Vec<Observation> = (0..n)
        .map(|_| {
            let time = match kind {
                1 => 1.0,
                _ => (rng.random_range(1..=8) as f64) / 4.0,
            };
            let x = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            Observation::new(time, rng.random_bool(0.6), x)
        })
        .collect();
    if kind == 2 {
        for o in &mut obs {
            o.event = false;
        }
    }
    if kind == 2 || obs.iter().all(|o| !o.event) {
        let i = rng.random_range(0..n);
        obs[i].event = true;
    }
    SurvivalSample::new(obs, TauPolicy::Auto).expect("valid instance")
}

/// Checks the structural properties every fit must satisfy and returns a
/// description of each one that fails.
pub fn structural_violations(sample: &SurvivalSample, link: &LinkModel) -> Vec<String> {
    let mut out = Vec::new();
    let f = match cure_npmle::fit(sample, link, &cure_npmle::FitOptions::default()) {
        Ok(f) => f,
        Err(e) => return vec![format!("fit failed: {e}")],
    };
    let mass = f.f_hat.total();
    if (mass - 1.0).abs() > 1e-12 {
        out.push(format!("F mass {mass}"));
    }
    if f.f_hat.jump_sizes().iter().any(|&j| !(j >= 0.0)) {
        out.push("negative F jump".into());
    }
    if f.lambda_hat.jump_times() != f.f_hat.jump_times() {
        out.push("Lambda and F jump at different times".into());
    }
    for (l, p) in f.lambda_hat.jump_sizes().iter().zip(f.f_hat.jump_sizes()) {
        if (l - f.theta_hat * p).abs() > 1e-12 * l.abs().max(1.0) {
            out.push(format!("Lambda jump {l} vs theta F {}", f.theta_hat * p));
        }
    }
    match cure_npmle::variance::information(sample, link, &f.gamma_hat) {
        Ok(info) => {
            let scale = info.amax().max(1e-300);
            if (&info - info.transpose()).amax() > 1e-14 * scale {
                out.push("information not symmetric".into());
            }
            let min_eig = info.clone().symmetric_eigen().eigenvalues.min();
            if min_eig < -1e-12 * scale {
                out.push(format!("information eigenvalue {min_eig}"));
            }
        }
        Err(e) => out.push(format!("information failed: {e}")),
    }
    // p̂ = exp(-θ̂ g) lies in (0, 1) exactly when log θ̂ + log g is finite; this
    // form survives p̂ rounding to 0 or 1 for extreme covariates.
    if f.converged {
        for i in 0..sample.len() {
            let x = sample.covariates(i);
            let log_rate = f.theta_hat.ln() + link.log_value(&f.gamma_hat, x, &mut vec![0.0; f.gamma_hat.len()]);
            let lp = cure_npmle::log_cure_probability(&f, link, x);
            let agrees = lp.as_ref().is_ok_and(|lp| *lp == -log_rate.exp());
            if !log_rate.is_finite() || !agrees {
                out.push(format!("cure probability at row {i}: log rate {log_rate}, log p {lp:?}"));
            }
        }
    }
    // Promotion-time multiplier at the fitted risk weights θ̂ g(γ̂ᵀx).
    let events: Vec<usize> = (0..sample.len()).filter(|&i| sample.event(i)).collect();
    let q_values: Vec<f64> =
        events.iter().map(|&e| f.theta_hat * q(sample, link, &f.gamma_hat, sample.time(e))).collect();
    match cure_npmle::promotion_time::solve_lambda(&q_values, sample.len()) {
        Ok(lambda) => {
            let min_q = q_values.iter().copied().fold(f64::INFINITY, f64::min);
            let res = cure_npmle::promotion_time::lambda_residual(&q_values, sample.len(), lambda);
            if !(lambda < min_q) || !(res.abs() < 1e-10) {
                out.push(format!("lambda {lambda} residual {res} min q {min_q}"));
            }
        }
        Err(e) => out.push(format!("lambda failed: {e}")),
    }
    out
}
