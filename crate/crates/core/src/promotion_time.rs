//! Classical promotion-time cure model with `η = exp`, fitted through its
//! Lagrange-multiplier NPMLE.
//!
//! With `η_i = exp(β₀ + β₁ᵀXᵢ)` and `Q̂₂(u) = n⁻¹ Σᵢ ηᵢ Rᵢ(u)`, the NPMLE maximizes
//!
//! ```text
//! Σᵢ δᵢ [log ηᵢ - log(Q̂₂(Yᵢ) - λ̂_β)] - n λ̂_β
//! ```
//!
//! where `λ̂_β` is the smallest root of `Σᵢ δᵢ / (Q̂₂(Yᵢ) - λ) = n`. The
//! estimated distribution is `Ĝ(y) = n⁻¹ Σᵢ δᵢ 1{Yᵢ ≤ y} / (Q̂₂(Yᵢ) - λ̂)`.
//!
//! Nothing here reuses the profile engine of [`crate::estimator`]; the
//! risk-set sums are plain double loops so that agreement between the two
//! fits is an independent check that `β̂ = (log θ̂, γ̂)` and `Ĝ = F̂`.

use serde::{Deserialize, Serialize};

use crate::data::SurvivalSample;
use crate::error::{Error, Result};
use crate::estimator::{fit, FitOptions, StepFunction};
use crate::link::LinkModel;

const LAMBDA_TOL: f64 = 1e-12;

/// Smallest root `λ < min q` of `n⁻¹ Σ 1/(qᵢ - λ) = 1`, where `q_values` holds
/// `Q̂₂(Yᵢ)` for each uncensored `i`.
pub fn solve_lambda(q_values: &[f64], n: usize) -> Result<f64> {
    if q_values.is_empty() || n == 0 {
        return Err(Error::NoEvents);
    }
    if q_values.iter().any(|q| !(q.is_finite() && *q > 0.0)) {
        return Err(Error::InvalidArgument("risk-set values must be positive and finite".into()));
    }
    let n_f = n as f64;
    let min_q = q_values.iter().copied().fold(f64::INFINITY, f64::min);
    let eval = |lambda: f64| -> (f64, f64) {
        let mut f = 0.0;
        let mut df = 0.0;
        for q in q_values {
            let r = 1.0 / (q - lambda);
            f += r;
            df += r * r;
        }
        (f / n_f - 1.0, df / n_f)
    };

    // Every term is at most n/m at min q - m/n, so the residual there is ≤ 0.
    let mut lo = min_q - q_values.len() as f64 / n_f;
    let mut hi = min_q;
    let mut lambda = lo;
    for _ in 0..500 {
        let (res, slope) = eval(lambda);
        if res.abs() <= LAMBDA_TOL {
            return Ok(lambda);
        }
        if res < 0.0 {
            lo = lambda;
        } else {
            hi = lambda;
        }
        let newton = lambda - res / slope;
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if next == lambda || next <= lo && next >= hi {
            break;
        }
        lambda = next;
    }
    Ok(lambda)
}

/// Residual `n⁻¹ Σ 1/(qᵢ - λ) - 1`.
pub fn lambda_residual(q_values: &[f64], n: usize, lambda: f64) -> f64 {
    q_values.iter().map(|q| 1.0 / (q - lambda)).sum::<f64>() / n as f64 - 1.0
}

/// Optimizer settings for [`fit_p2`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct P2Options {
    /// Convergence threshold on the sup norm of the gradient divided by `n`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for P2Options {
    fn default() -> Self {
        P2Options { tol: 1e-11, max_iter: 2000 }
    }
}

/// Result of the Lagrange-multiplier fit.
#[derive(Debug, Clone)]
pub struct P2Fit {
    /// Intercept first.
    pub beta_hat: Vec<f64>,
    pub g_hat: StepFunction,
    pub lambda_hat: f64,
    /// Criterion value (log scale) at `β̂`.
    pub criterion: f64,
    /// Largest `|λ residual|` seen over the optimization.
    pub lambda_path_residual: f64,
    /// `|λ residual|` at each accepted iterate.
    pub lambda_trace: Vec<f64>,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

struct Criterion<'a> {
    sample: &'a SurvivalSample,
    events: Vec<usize>,
}

struct CriterionEval {
    value: f64,
    gradient: Vec<f64>,
    lambda: f64,
    residual: f64,
    q_values: Vec<f64>,
}

impl<'a> Criterion<'a> {
    fn new(sample: &'a SurvivalSample) -> Self {
        let events = (0..sample.len()).filter(|&i| sample.event(i)).collect();
        Criterion { sample, events }
    }

    fn design(&self, i: usize) -> Vec<f64> {
        let mut z = Vec::with_capacity(self.sample.dim() + 1);
        z.push(1.0);
        z.extend_from_slice(self.sample.covariates(i));
        z
    }

    fn evaluate(&self, beta: &[f64]) -> Result<CriterionEval> {
        let s = self.sample;
        let n = s.len();
        let p = beta.len();
        let designs: Vec<Vec<f64>> = (0..n).map(|i| self.design(i)).collect();
        let log_eta: Vec<f64> = designs.iter().map(|z| z.iter().zip(beta).map(|(a, b)| a * b).sum()).collect();
        let eta: Vec<f64> = log_eta.iter().map(|v| v.exp()).collect();
        if eta.iter().any(|e| !e.is_finite()) {
            return Err(Error::NonFiniteLink);
        }

        let mut q_values = Vec::with_capacity(self.events.len());
        let mut q_grads = Vec::with_capacity(self.events.len());
        for &j in &self.events {
            let u = s.time(j);
            let mut value = 0.0;
            let mut grad = vec![0.0; p];
            for i in 0..n {
                if s.risk_indicator(i, u) {
                    value += eta[i];
                    for (g, z) in grad.iter_mut().zip(&designs[i]) {
                        *g += eta[i] * z;
                    }
                }
            }
            q_values.push(value / n as f64);
            q_grads.push(grad.into_iter().map(|g| g / n as f64).collect::<Vec<_>>());
        }

        let lambda = solve_lambda(&q_values, n)?;
        let residual = lambda_residual(&q_values, n, lambda).abs();

        // dλ/dβ from differentiating Σ δ / (Q̂₂ - λ) = n.
        let mut num = vec![0.0; p];
        let mut den = 0.0;
        for (qv, qg) in q_values.iter().zip(&q_grads) {
            let w = 1.0 / ((qv - lambda) * (qv - lambda));
            den += w;
            for (a, g) in num.iter_mut().zip(qg) {
                *a += w * g;
            }
        }
        let dlambda: Vec<f64> = num.iter().map(|a| a / den).collect();

        let mut value = -(n as f64) * lambda;
        let mut gradient: Vec<f64> = dlambda.iter().map(|d| -(n as f64) * d).collect();
        for (k, &j) in self.events.iter().enumerate() {
            let gap = q_values[k] - lambda;
            value += log_eta[j] - gap.ln();
            for a in 0..p {
                gradient[a] += designs[j][a] - (q_grads[k][a] - dlambda[a]) / gap;
            }
        }
        // Far from the optimum Q̂₂ - λ̂ cancels to nothing.
        if !value.is_finite() || gradient.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteLink);
        }
        Ok(CriterionEval { value, gradient, lambda, residual, q_values })
    }
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m: f64, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Maximizes the Lagrange-multiplier criterion by BFGS, re-solving `λ̂_β` at
/// every evaluation. `gamma_init` gives the slope start; the intercept starts at 0.
pub fn fit_p2(sample: &SurvivalSample, gamma_init: Option<&[f64]>, options: &P2Options) -> Result<P2Fit> {
    let crit = Criterion::new(sample);
    if crit.events.is_empty() {
        return Err(Error::NoEvents);
    }
    let d = sample.dim();
    let p = d + 1;
    let mut beta = vec![0.0; p];
    if let Some(g) = gamma_init {
        if g.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: g.len() });
        }
        beta[1..].copy_from_slice(g);
    }
    let n = sample.len() as f64;

    let mut cur = crit.evaluate(&beta)?;
    let mut path_residual = cur.residual;
    let mut trace = vec![cur.residual];
    // Inverse Hessian approximation of the negated criterion. The criterion
    // is a sum over subjects, hence the 1/n scale.
    let mut h_inv: Vec<f64> = identity(p).into_iter().map(|v| v / n).collect();
    let mut iterations = 0;
    let mut converged = sup_norm(&cur.gradient) / n <= options.tol;

    while !converged && iterations < options.max_iter {
        iterations += 1;
        // Ascent direction for the criterion.
        let mut dir = mat_vec(&h_inv, &cur.gradient, p);
        if dot(&dir, &cur.gradient) <= 0.0 {
            h_inv = identity(p).into_iter().map(|v| v / n).collect();
            dir = cur.gradient.iter().map(|g| g / n).collect();
        }
        let slope = dot(&dir, &cur.gradient);
        let slack = 8.0 * f64::EPSILON * (cur.value.abs() + 1.0);
        let mut step = 1.0;
        let mut next = None;
        for _ in 0..60 {
            let trial: Vec<f64> = beta.iter().zip(&dir).map(|(b, d)| b + step * d).collect();
            if let Ok(e) = crit.evaluate(&trial) {
                path_residual = path_residual.max(e.residual);
                let armijo = e.value >= cur.value + 1e-4 * step * slope;
                let polish = e.value >= cur.value - slack && sup_norm(&e.gradient) < sup_norm(&cur.gradient);
                if armijo || polish {
                    next = Some((trial, e));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((trial, e)) = next else { break };

        // BFGS update on the negated criterion.
        let s: Vec<f64> = trial.iter().zip(&beta).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = cur.gradient.iter().zip(&e.gradient).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 {
            bfgs_update(&mut h_inv, &s, &y, sy, p);
        }
        beta = trial;
        cur = e;
        trace.push(cur.residual);
        converged = sup_norm(&cur.gradient) / n <= options.tol;
    }

    let g_hat = distribution(sample, &crit.events, &cur.q_values, cur.lambda)?;
    Ok(P2Fit {
        beta_hat: beta,
        g_hat,
        lambda_hat: cur.lambda,
        criterion: cur.value,
        lambda_path_residual: path_residual,
        lambda_trace: trace,
        gradient_norm: sup_norm(&cur.gradient) / n,
        iterations,
        converged,
    })
}

fn identity(p: usize) -> Vec<f64> {
    let mut m = vec![0.0; p * p];
    for a in 0..p {
        m[a * p + a] = 1.0;
    }
    m
}

fn mat_vec(m: &[f64], v: &[f64], p: usize) -> Vec<f64> {
    (0..p).map(|a| (0..p).map(|b| m[a * p + b] * v[b]).sum()).collect()
}

fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64, p: usize) {
    let rho = 1.0 / sy;
    let hy = mat_vec(h, y, p);
    let yhy = dot(y, &hy);
    for a in 0..p {
        for b in 0..p {
            h[a * p + b] += (1.0 + rho * yhy) * rho * s[a] * s[b] - rho * (hy[a] * s[b] + s[a] * hy[b]);
        }
    }
}

fn distribution(sample: &SurvivalSample, events: &[usize], q_values: &[f64], lambda: f64) -> Result<StepFunction> {
    let n = sample.len() as f64;
    let mut jumps: Vec<(f64, f64)> =
        events.iter().zip(q_values).map(|(&j, q)| (sample.time(j), 1.0 / (n * (q - lambda)))).collect();
    jumps.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut times: Vec<f64> = Vec::new();
    let mut sizes: Vec<f64> = Vec::new();
    for (t, s) in jumps {
        if times.last() == Some(&t) {
            *sizes.last_mut().unwrap() += s;
        } else {
            times.push(t);
            sizes.push(s);
        }
    }
    StepFunction::new(times, sizes)
}

/// Outcome of the equivalence check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// Side-by-side comparison of the two NPMLEs on one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct P2Certificate {
    pub verdict: Verdict,
    pub n: usize,
    pub n_events: usize,
    pub beta_hat: Vec<f64>,
    pub log_theta_hat: f64,
    pub gamma_hat: Vec<f64>,
    /// `|β̂₀ - log θ̂|`
    pub intercept_gap: f64,
    /// `max_k |β̂_k - γ̂_k|`
    pub slope_gap: f64,
    /// `sup_y |Ĝ(y) - F̂(y)|`
    pub cdf_gap: f64,
    pub lambda_hat: f64,
    pub lambda_residual_max: f64,
    pub lambda_residual_trace: Vec<f64>,
    pub p2_criterion: f64,
    pub profile_loglik: f64,
    pub p2_converged: bool,
    pub profile_converged: bool,
    pub tolerances: CertificateTolerances,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateTolerances {
    pub intercept: f64,
    pub slope: f64,
    pub cdf: f64,
}

impl Default for CertificateTolerances {
    fn default() -> Self {
        CertificateTolerances { intercept: 1e-6, slope: 1e-6, cdf: 1e-8 }
    }
}

/// Fits the sample both ways under the Cox link and compares.
pub fn check_p2(sample: &SurvivalSample) -> Result<P2Certificate> {
    let tolerances = CertificateTolerances::default();
    let opts = FitOptions { tol: 1e-12, max_iter: 200, ..FitOptions::default() };
    let profile = fit(sample, &LinkModel::Cox, &opts)?;
    let p2 = fit_p2(sample, None, &P2Options::default())?;

    let log_theta_hat = profile.theta_hat.ln();
    let intercept_gap = (p2.beta_hat[0] - log_theta_hat).abs();
    let slope_gap = p2.beta_hat[1..].iter().zip(&profile.gamma_hat).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let cdf_gap = p2.g_hat.sup_distance(&profile.f_hat);

    let verdict = if !(profile.converged && p2.converged) {
        Verdict::Inconclusive
    } else if intercept_gap < tolerances.intercept && slope_gap < tolerances.slope && cdf_gap < tolerances.cdf {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(P2Certificate {
        verdict,
        n: sample.len(),
        n_events: sample.n_events(),
        beta_hat: p2.beta_hat,
        log_theta_hat,
        gamma_hat: profile.gamma_hat,
        intercept_gap,
        slope_gap,
        cdf_gap,
        lambda_hat: p2.lambda_hat,
        lambda_residual_max: p2.lambda_path_residual,
        lambda_residual_trace: p2.lambda_trace,
        p2_criterion: p2.criterion,
        profile_loglik: profile.pll,
        p2_converged: p2.converged,
        profile_converged: profile.converged,
        tolerances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Observation, TauPolicy};

    #[test]
    fn lambda_two_values() {
        let l = solve_lambda(&[2.0, 1.0], 2).unwrap();
        assert!((l - (1.0 - 2f64.sqrt() / 2.0)).abs() < 1e-12);
    }

    #[test]
    fn lambda_equal_values() {
        let l = solve_lambda(&[3.0; 5], 5).unwrap();
        assert!((l - 2.0).abs() < 1e-12);
        // three events out of five subjects: 3/(c - λ) = 5
        let l = solve_lambda(&[3.0; 3], 5).unwrap();
        assert!((l - (3.0 - 0.6)).abs() < 1e-12);
    }

    #[test]
    fn lambda_rejects_empty() {
        assert!(solve_lambda(&[], 3).is_err());
    }

    #[test]
    fn no_covariate_case_matches_breslow() {
        let s = SurvivalSample::new(
            vec![
                Observation::new(1.0, true, vec![]),
                Observation::new(2.0, true, vec![]),
                Observation::new(4.0, false, vec![]),
            ],
            TauPolicy::Auto,
        )
        .unwrap();
        let cert = check_p2(&s).unwrap();
        assert_eq!(cert.verdict, Verdict::Pass, "{cert:?}");
        let p2 = fit_p2(&s, None, &P2Options::default()).unwrap();
        assert!((p2.g_hat.total() - 1.0).abs() < 1e-10);
        assert!(p2.lambda_path_residual < 1e-10);
        // θ̂ = 1/3 + 1/(3 · 2/3) = 5/6
        assert!((p2.beta_hat[0] - (5.0f64 / 6.0).ln()).abs() < 1e-8);
    }
}
