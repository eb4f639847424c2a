//! Profile-likelihood NPMLE of `(γ, θ, F)`.
//!
//! For fixed `γ` the cumulative hazard is maximized out in closed form,
//!
//! ```text
//! Λ̂_γ(y) = n⁻¹ Σᵢ δᵢ 1{Yᵢ ≤ y} / Q̂_γ(Yᵢ),   Q̂_γ(u) = n⁻¹ Σᵢ g(γ, Xᵢ) Rᵢ(u),
//! ```
//!
//! leaving the profile log-likelihood `Σᵢ δᵢ log{g(γ, Xᵢ) / Q̂_γ(Yᵢ)}` to be
//! maximized over `γ`. Then `θ̂ = Λ̂(∞)` and `F̂ = Λ̂ / θ̂`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::SurvivalSample;
use crate::error::{Error, Result};
use crate::link::Link;

/// Right-continuous nondecreasing step function starting at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFunction {
    jump_times: Vec<f64>,
    jump_sizes: Vec<f64>,
    #[serde(skip)]
    cumulative: Vec<f64>,
}

impl StepFunction {
    pub fn new(jump_times: Vec<f64>, jump_sizes: Vec<f64>) -> Result<Self> {
        if jump_times.len() != jump_sizes.len() {
            return Err(Error::DimensionMismatch { expected: jump_times.len(), found: jump_sizes.len() });
        }
        if jump_times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument("jump times must be strictly increasing".into()));
        }
        if jump_sizes.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidArgument("jump sizes must be positive and finite".into()));
        }
        let cumulative = jump_sizes
            .iter()
            .scan(0.0, |acc, s| {
                *acc += s;
                Some(*acc)
            })
            .collect();
        Ok(StepFunction { jump_times, jump_sizes, cumulative })
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn jump_sizes(&self) -> &[f64] {
        &self.jump_sizes
    }

    /// Sum of jumps at times `≤ y`.
    pub fn value(&self, y: f64) -> f64 {
        let k = self.jump_times.partition_point(|&t| t <= y);
        if k == 0 {
            0.0
        } else {
            self.cumulative[k - 1]
        }
    }

    /// Jump size at exactly `y` (0 if `y` is not a jump time).
    pub fn jump_at(&self, y: f64) -> f64 {
        match self.jump_times.binary_search_by(|t| t.total_cmp(&y)) {
            Ok(k) => self.jump_sizes[k],
            Err(_) => 0.0,
        }
    }

    /// Value at `+∞`.
    pub fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        StepFunction::new(self.jump_times.clone(), self.jump_sizes.iter().map(|s| s * c).collect())
    }

    /// `sup_y |self(y) - other(y)|`, attained at a jump time of either.
    pub fn sup_distance(&self, other: &StepFunction) -> f64 {
        self.jump_times
            .iter()
            .chain(&other.jump_times)
            .map(|&t| (self.value(t) - other.value(t)).abs())
            .fold(0.0, f64::max)
    }
}

/// Risk-set bookkeeping that does not depend on `γ`.
///
/// Subjects with `Δᵢ = 1` and `Yᵢ ≤ max_j Y_j δ_j` leave the risk set at their
/// follow-up time; everybody else is at risk at every event time. The split
/// depends only on the last event time, so moving `τ` beyond it changes
/// nothing, not even the summation order.
pub(crate) struct RiskSets<'a> {
    sample: &'a SurvivalSample,
    q: usize,
    /// Leaving subjects sorted by `(Y, index)`.
    leaving: Vec<usize>,
    staying: Vec<usize>,
    /// Event subjects in input order.
    events: Vec<usize>,
    /// For each event, the first position in `leaving` with the same `Y`.
    event_start: Vec<usize>,
}

impl<'a> RiskSets<'a> {
    pub(crate) fn new<L: Link + ?Sized>(sample: &'a SurvivalSample, link: &L) -> Self {
        let last = sample.last_event_time();
        let (mut leaving, staying): (Vec<usize>, Vec<usize>) =
            (0..sample.len()).partition(|&i| sample.within_threshold(i) && sample.time(i) <= last);
        leaving.sort_by(|&a, &b| sample.time(a).total_cmp(&sample.time(b)).then(a.cmp(&b)));

        let events: Vec<usize> = (0..sample.len()).filter(|&i| sample.event(i)).collect();
        let event_start = events
            .iter()
            .map(|&i| {
                let y = sample.time(i);
                leaving.partition_point(|&j| sample.time(j) < y)
            })
            .collect();
        RiskSets { sample, q: link.param_dim(sample.dim()), leaving, staying, events, event_start }
    }

    pub(crate) fn param_dim(&self) -> usize {
        self.q
    }

    /// Evaluates `Q̂`, `ĥ`, the profile log-likelihood and its derivatives at `γ`.
    pub(crate) fn evaluate<L: Link + ?Sized>(&self, link: &L, gamma: &[f64], hessian: bool) -> Result<ProfileEval> {
        let q = self.q;
        if gamma.len() != q {
            return Err(Error::DimensionMismatch { expected: q, found: gamma.len() });
        }
        let sample = self.sample;
        let n = sample.len();
        let mut log_g = vec![0.0; n];
        let mut dlog = vec![0.0; n * q];
        for i in 0..n {
            log_g[i] = link.log_value(gamma, sample.covariates(i), &mut dlog[i * q..(i + 1) * q]);
            if !log_g[i].is_finite() || dlog[i * q..(i + 1) * q].iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteLink);
            }
        }
        let log_scale = log_g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weight: Vec<f64> = log_g.iter().map(|l| (l - log_scale).exp()).collect();

        let qq = q * q;
        let mut hess_i = vec![0.0; if hessian { qq } else { 0 }];
        let mut second = |i: usize, out: &mut [f64]| -> Result<()> {
            accumulate_second_moment(
                link,
                gamma,
                sample.covariates(i),
                &dlog[i * q..(i + 1) * q],
                weight[i],
                &mut hess_i,
                out,
            )
        };

        // Staying subjects, in input order.
        let mut base_w = 0.0;
        let mut base_g = vec![0.0; q];
        let mut base_h = vec![0.0; if hessian { qq } else { 0 }];
        for &i in &self.staying {
            base_w += weight[i];
            for a in 0..q {
                base_g[a] += weight[i] * dlog[i * q + a];
            }
            if hessian {
                second(i, &mut base_h)?;
            }
        }

        // Suffix sums over leaving subjects.
        let m = self.leaving.len();
        let mut suf_w = vec![0.0; m + 1];
        let mut suf_g = vec![0.0; (m + 1) * q];
        let mut suf_h = vec![0.0; if hessian { (m + 1) * qq } else { 0 }];
        for k in (0..m).rev() {
            let i = self.leaving[k];
            suf_w[k] = suf_w[k + 1] + weight[i];
            for a in 0..q {
                suf_g[k * q + a] = suf_g[(k + 1) * q + a] + weight[i] * dlog[i * q + a];
            }
            if hessian {
                let (head, tail) = suf_h.split_at_mut((k + 1) * qq);
                let row = &mut head[k * qq..];
                row.copy_from_slice(&tail[..qq]);
                second(i, row)?;
            }
        }

        let n_f = n as f64;
        let ne = self.events.len();
        let mut risk_weight = vec![0.0; ne];
        let mut h = vec![0.0; ne * q];
        let mut d_ev = vec![0.0; ne * q];
        let mut pll = 0.0;
        let mut score = vec![0.0; q];
        let mut neg_hess = vec![0.0; if hessian { qq } else { 0 }];
        let mut hess_e = vec![0.0; if hessian { qq } else { 0 }];
        for (e, (&i, &k)) in self.events.iter().zip(&self.event_start).enumerate() {
            let w = suf_w[k] + base_w;
            risk_weight[e] = w;
            // log{g_i / Q̂(Y_i)} with Q̂ = e^M w / n
            pll += log_g[i] - log_scale - w.ln() + n_f.ln();
            for a in 0..q {
                h[e * q + a] = (suf_g[k * q + a] + base_g[a]) / w;
                d_ev[e * q + a] = dlog[i * q + a];
                score[a] += d_ev[e * q + a] - h[e * q + a];
            }
            if hessian {
                link.log_hessian(gamma, sample.covariates(i), &mut hess_e);
                for a in 0..q {
                    for b in 0..q {
                        let second_moment = (suf_h[k * qq + a * q + b] + base_h[a * q + b]) / w;
                        let curvature_log_q = second_moment - h[e * q + a] * h[e * q + b];
                        neg_hess[a * q + b] += curvature_log_q - hess_e[a * q + b];
                    }
                }
            }
        }
        for s in &mut score {
            *s /= n_f;
        }
        for v in &mut neg_hess {
            *v /= n_f;
        }

        Ok(ProfileEval {
            n,
            q,
            log_scale,
            events: self.events.clone(),
            risk_weight,
            h,
            d: d_ev,
            pll,
            score,
            neg_hessian: if hessian { Some(neg_hess) } else { None },
        })
    }
}

/// Adds `w (d dᵀ + ∇² log g)` to `out`.
fn accumulate_second_moment<L: Link + ?Sized>(
    link: &L,
    gamma: &[f64],
    x: &[f64],
    d: &[f64],
    w: f64,
    scratch: &mut [f64],
    out: &mut [f64],
) -> Result<()> {
    if !link.log_hessian(gamma, x, scratch) {
        return Err(Error::InvalidArgument("link has no Hessian".into()));
    }
    let q = d.len();
    for a in 0..q {
        for b in 0..q {
            out[a * q + b] += w * (d[a] * d[b] + scratch[a * q + b]);
        }
    }
    Ok(())
}

/// Everything the estimator and the variance formulas need at one `γ`.
#[derive(Debug, Clone)]
pub(crate) struct ProfileEval {
    pub n: usize,
    pub q: usize,
    /// `Q̂(Y_e) = exp(log_scale) · risk_weight[e] / n`.
    pub log_scale: f64,
    pub events: Vec<usize>,
    pub risk_weight: Vec<f64>,
    /// `ĥ_γ(Y_e)`, events × q.
    pub h: Vec<f64>,
    /// `d_γ(X_e)`, events × q.
    pub d: Vec<f64>,
    pub pll: f64,
    /// Gradient of the profile log-likelihood divided by `n`.
    pub score: Vec<f64>,
    /// Minus the Hessian of the profile log-likelihood divided by `n`.
    pub neg_hessian: Option<Vec<f64>>,
}

impl ProfileEval {
    /// `Q̂_γ(Y_e)` for the e-th event.
    pub fn q_at_event(&self, e: usize) -> f64 {
        self.log_scale.exp() * self.risk_weight[e] / self.n as f64
    }

    /// `1 / (n Q̂(Y_e))` computed without forming `exp(log_scale)` twice.
    pub fn inverse_n_q(&self, e: usize) -> f64 {
        (-self.log_scale).exp() / self.risk_weight[e]
    }

    /// Whether every Breslow jump `1 / (n Q̂)` and their total are positive
    /// normal numbers.
    pub fn representable(&self) -> bool {
        let total: f64 = (0..self.events.len()).map(|e| self.inverse_n_q(e)).sum();
        total.is_finite() && (0..self.events.len()).all(|e| self.inverse_n_q(e) >= f64::MIN_POSITIVE)
    }

    pub fn score_norm(&self) -> f64 {
        self.score.iter().fold(0.0, |m, s| m.max(s.abs()))
    }

    /// `n⁻¹ Σ δᵢ (dᵢ - ĥᵢ)(dᵢ - ĥᵢ)ᵀ`.
    pub fn information(&self) -> DMatrix<f64> {
        let q = self.q;
        let mut info = DMatrix::zeros(q, q);
        for e in 0..self.events.len() {
            let r: Vec<f64> = (0..q).map(|a| self.d[e * q + a] - self.h[e * q + a]).collect();
            for a in 0..q {
                for b in 0..q {
                    info[(a, b)] += r[a] * r[b];
                }
            }
        }
        info / self.n as f64
    }

    /// `tr(n⁻¹ Σ δᵢ dᵢ dᵢᵀ) / q`, the scale against which `Î` is judged degenerate.
    pub fn information_scale(&self) -> f64 {
        if self.q == 0 {
            return 0.0;
        }
        self.d.iter().map(|v| v * v).sum::<f64>() / (self.n * self.q) as f64
    }
}

/// `Q̂_γ(u) = n⁻¹ Σᵢ g(γ, Xᵢ) Rᵢ(u)` by direct summation.
pub fn q_hat<L: Link + ?Sized>(sample: &SurvivalSample, link: &L, gamma: &[f64], u: f64) -> Result<f64> {
    let q = link.param_dim(sample.dim());
    if gamma.len() != q {
        return Err(Error::DimensionMismatch { expected: q, found: gamma.len() });
    }
    let mut dlog = vec![0.0; q];
    let mut total = 0.0;
    for i in 0..sample.len() {
        if sample.risk_indicator(i, u) {
            total += link.log_value(gamma, sample.covariates(i), &mut dlog).exp();
        }
    }
    if !total.is_finite() {
        return Err(Error::NonFiniteLink);
    }
    Ok(total / sample.len() as f64)
}

/// `Σᵢ δᵢ [log g(γ, Xᵢ) - log Q̂_γ(Yᵢ)]`.
pub fn profile_loglik<L: Link + ?Sized>(sample: &SurvivalSample, link: &L, gamma: &[f64]) -> Result<f64> {
    Ok(RiskSets::new(sample, link).evaluate(link, gamma, false)?.pll)
}

/// Gradient of the profile log-likelihood divided by `n`:
/// `n⁻¹ Σᵢ δᵢ {d_γ(Xᵢ) - ĥ_γ(Yᵢ)}`.
pub fn score<L: Link + ?Sized>(sample: &SurvivalSample, link: &L, gamma: &[f64]) -> Result<Vec<f64>> {
    Ok(RiskSets::new(sample, link).evaluate(link, gamma, false)?.score)
}

/// Value of the full log-likelihood, with the time of the first uncensored
/// observation that `Λ` puts no mass on (the value is then `-∞`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullLoglik {
    pub value: f64,
    pub missing_jump: Option<f64>,
}

/// `Σᵢ [δᵢ log(g Λ{Yᵢ}) - g {Δᵢ Λ(Yᵢ) + (1 - Δᵢ) Λ(∞)}]` with `g = g(γ, Xᵢ)`.
pub fn full_loglik<L: Link + ?Sized>(
    sample: &SurvivalSample,
    link: &L,
    gamma: &[f64],
    lambda: &StepFunction,
) -> Result<FullLoglik> {
    let q = link.param_dim(sample.dim());
    if gamma.len() != q {
        return Err(Error::DimensionMismatch { expected: q, found: gamma.len() });
    }
    let mut dlog = vec![0.0; q];
    let total = lambda.total();
    let mut value = 0.0;
    let mut missing_jump = None;
    for i in 0..sample.len() {
        let log_g = link.log_value(gamma, sample.covariates(i), &mut dlog);
        if !log_g.is_finite() {
            return Err(Error::NonFiniteLink);
        }
        let y = sample.time(i);
        if sample.event(i) {
            let jump = lambda.jump_at(y);
            if jump <= 0.0 {
                missing_jump.get_or_insert(y);
                value = f64::NEG_INFINITY;
            } else {
                value += log_g + jump.ln();
            }
        }
        let exposure = if sample.within_threshold(i) { lambda.value(y) } else { total };
        value -= log_g.exp() * exposure;
    }
    Ok(FullLoglik { value, missing_jump })
}

/// Optimizer settings for [`fit`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    /// Starting point; `None` means the zero vector.
    pub init: Option<Vec<f64>>,
    /// Convergence threshold on `‖score‖∞`.
    pub tol: f64,
    pub max_iter: usize,
    /// Total number of starts; extra starts are drawn uniformly in
    /// `[-start_radius, start_radius]^q`.
    pub multistart: usize,
    pub start_radius: f64,
    pub seed: u64,
    /// Iterates with `‖γ‖∞` above this are declared divergent.
    pub divergence_bound: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            init: None,
            tol: 1e-8,
            max_iter: 100,
            multistart: 1,
            start_radius: 3.0,
            seed: 0,
            divergence_bound: 1e3,
        }
    }
}

/// The NPMLE and its convergence diagnostics.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub gamma_hat: Vec<f64>,
    pub theta_hat: f64,
    pub lambda_hat: StepFunction,
    pub f_hat: StepFunction,
    /// Profile log-likelihood at `γ̂`.
    pub pll: f64,
    /// Full log-likelihood at `(γ̂, Λ̂)`.
    pub fll: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `‖γ‖∞` crossed the divergence bound (monotone likelihood).
    pub diverged: bool,
    pub score_norm: f64,
    pub information_singular: bool,
    pub n: usize,
    pub n_events: usize,
    pub tau: f64,
}

struct Ascent {
    gamma: Vec<f64>,
    pll: f64,
    iterations: usize,
    converged: bool,
    diverged: bool,
}

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;

fn solve_spd(matrix: &[f64], rhs: &[f64], q: usize) -> Option<Vec<f64>> {
    let m = DMatrix::from_row_slice(q, q, matrix);
    let chol = m.cholesky()?;
    let x = chol.solve(&DVector::from_column_slice(rhs));
    x.iter().all(|v| v.is_finite()).then(|| x.iter().copied().collect())
}

fn ascent_direction(eval: &ProfileEval) -> Vec<f64> {
    let q = eval.q;
    if let Some(step) = eval.neg_hessian.as_deref().and_then(|h| solve_spd(h, &eval.score, q)) {
        return step;
    }
    // Fisher scoring, ridged until positive definite.
    let info = eval.information();
    let scale = (info.trace() / q as f64).max(1e-12);
    let mut ridge = 0.0;
    for _ in 0..20 {
        let mut m = info.clone();
        for a in 0..q {
            m[(a, a)] += ridge;
        }
        if let Some(step) = solve_spd(m.as_slice(), &eval.score, q) {
            return step;
        }
        ridge = if ridge == 0.0 { 1e-10 * scale } else { ridge * 100.0 };
    }
    eval.score.clone()
}

fn ascend<L: Link + ?Sized>(risk: &RiskSets, link: &L, start: Vec<f64>, opts: &FitOptions) -> Result<Ascent> {
    let n = risk.sample.len() as f64;
    let mut gamma = start;
    let q = gamma.len();
    let with_hessian = link.log_hessian(&gamma, risk.sample.covariates(0), &mut vec![0.0; q * q]);
    let mut eval = risk.evaluate(link, &gamma, with_hessian)?;
    let mut iterations = 0;
    let mut last_step: Option<Vec<f64>> = None;
    loop {
        let norm = eval.score_norm();
        let done =
            |converged, diverged, gamma, iterations| Ascent { gamma, pll: eval.pll, iterations, converged, diverged };
        if norm <= opts.tol {
            if last_step.as_deref().is_some_and(|s| recedes(risk, link, &gamma, s, eval.pll)) {
                return Ok(done(false, true, gamma, iterations));
            }
            return Ok(done(true, false, gamma, iterations));
        }
        if iterations >= opts.max_iter {
            return Ok(done(false, false, gamma, iterations));
        }
        iterations += 1;

        let direction = ascent_direction(&eval);
        let slope = n * direction.iter().zip(&eval.score).map(|(a, b)| a * b).sum::<f64>();
        let slack = 8.0 * f64::EPSILON * (eval.pll.abs() + 1.0);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial: Vec<f64> = gamma.iter().zip(&direction).map(|(g, d)| g + step * d).collect();
            if let Ok(cand) = risk.evaluate(link, &trial, false) {
                if cand.pll.is_finite() {
                    let armijo = cand.pll >= eval.pll + ARMIJO * step * slope;
                    let polish = cand.pll >= eval.pll - slack && cand.score_norm() < norm;
                    if armijo || polish {
                        accepted = Some(trial);
                        break;
                    }
                }
            }
            step *= 0.5;
        }
        let Some(next) = accepted else {
            return Ok(done(false, false, gamma, iterations));
        };
        let next_eval = risk.evaluate(link, &next, with_hessian)?;
        if !next_eval.representable() {
            // Q̂ is running off to 0 or ∞: stop at the last point where Λ̂ exists.
            return Ok(done(false, true, gamma, iterations));
        }
        if next.iter().any(|g| g.abs() > opts.divergence_bound) {
            let ascent = Ascent { gamma: next, pll: next_eval.pll, iterations, converged: false, diverged: true };
            return Ok(ascent);
        }
        last_step = Some(next.iter().zip(&gamma).map(|(a, b)| a - b).collect());
        gamma = next;
        eval = next_eval;
    }
}

/// Whether the profile likelihood keeps rising, or stays level, far out along
/// the last step from a stationary `γ`. This is how a monotone likelihood
/// looks once its score has decayed below the tolerance.
fn recedes<L: Link + ?Sized>(risk: &RiskSets, link: &L, gamma: &[f64], step: &[f64], pll: f64) -> bool {
    let len = step.iter().map(|s| s * s).sum::<f64>().sqrt();
    if len == 0.0 {
        return false;
    }
    let reach = 1.0 + gamma.iter().map(|g| g * g).sum::<f64>().sqrt();
    let slack = 1e-12 * (pll.abs() + 1.0);
    [1.0, 10.0, 100.0].iter().all(|t| {
        let trial: Vec<f64> = gamma.iter().zip(step).map(|(g, s)| g + t * reach * s / len).collect();
        risk.evaluate(link, &trial, false).is_ok_and(|e| e.pll >= pll - slack)
    })
}

const PROBE_SEED: u64 = 0x9e37_79b9_7f4a_7c15;
const PROBE_ROUNDS: usize = 4;
const PROBES: usize = 4;

/// `false` when the link's Hessian shows `γ` is not a strict local maximum.
fn second_order_ok<L: Link + ?Sized>(risk: &RiskSets, link: &L, gamma: &[f64]) -> Result<bool> {
    let eval = risk.evaluate(link, gamma, true)?;
    Ok(eval
        .neg_hessian
        .as_deref()
        .is_none_or(|h| DMatrix::from_row_slice(gamma.len(), gamma.len(), h).cholesky().is_some()))
}

/// [`ascend`], then escape stationary points that are not maxima by
/// restarting from small perturbations. A flat direction that no probe can
/// climb (unidentified `γ`) is accepted as is.
fn ascend_to_maximum<L: Link + ?Sized>(
    risk: &RiskSets,
    link: &L,
    start: Vec<f64>,
    opts: &FitOptions,
    rng: &mut ChaCha8Rng,
) -> Result<Ascent> {
    let has_hessian = {
        let q = start.len();
        q > 0 && link.log_hessian(&start, risk.sample.covariates(0), &mut vec![0.0; q * q])
    };
    let mut current = ascend(risk, link, start, opts)?;
    if !has_hessian {
        return Ok(current);
    }
    let radius = 0.1 * opts.start_radius;
    for _ in 0..PROBE_ROUNDS {
        if !current.converged || second_order_ok(risk, link, &current.gamma)? {
            break;
        }
        let mut climbed: Option<Ascent> = None;
        let mut spent = 0;
        for _ in 0..PROBES {
            let probe: Vec<f64> = current.gamma.iter().map(|g| g + rng.random_range(-radius..=radius)).collect();
            let Ok(a) = ascend(risk, link, probe, opts) else { continue };
            spent += a.iterations;
            let gain = 1e-9 * (current.pll.abs() + 1.0);
            if a.converged && a.pll > current.pll + gain && climbed.as_ref().is_none_or(|c| a.pll > c.pll) {
                climbed = Some(a);
            }
        }
        match climbed {
            Some(mut a) => {
                a.iterations += current.iterations + spent;
                current = a;
            }
            None => {
                current.iterations += spent;
                break;
            }
        }
    }
    Ok(current)
}

/// Maximizes the profile likelihood and returns the NPMLE.
pub fn fit<L: Link + ?Sized>(sample: &SurvivalSample, link: &L, options: &FitOptions) -> Result<FitResult> {
    if !(options.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol must be positive, got {}", options.tol)));
    }
    let risk = RiskSets::new(sample, link);
    let q = risk.param_dim();

    let first = match &options.init {
        Some(init) if init.len() != q => return Err(Error::DimensionMismatch { expected: q, found: init.len() }),
        Some(init) => init.clone(),
        None => vec![0.0; q],
    };
    let mut starts = vec![first];
    if q > 0 && options.multistart > 1 {
        let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
        let r = options.start_radius;
        for _ in 1..options.multistart {
            starts.push((0..q).map(|_| rng.random_range(-r..=r)).collect());
        }
    }

    let mut probe_rng = ChaCha8Rng::seed_from_u64(options.seed ^ PROBE_SEED);
    let mut best: Option<Ascent> = None;
    let mut iterations = 0;
    for start in starts {
        let ascent = match ascend_to_maximum(&risk, link, start, options, &mut probe_rng) {
            Ok(a) => a,
            Err(Error::NonFiniteLink) => continue,
            Err(e) => return Err(e),
        };
        iterations += ascent.iterations;
        let better = match &best {
            None => true,
            Some(b) => (ascent.converged && !b.converged) || (ascent.converged == b.converged && ascent.pll > b.pll),
        };
        if better {
            best = Some(ascent);
        }
    }
    let best = best.ok_or(Error::NonFiniteLink)?;

    let eval = risk.evaluate(link, &best.gamma, false)?;
    let (lambda_hat, theta_hat) = breslow(sample, &eval)?;
    let f_hat = lambda_hat.scaled(1.0 / theta_hat)?;
    let fll = full_loglik(sample, link, &best.gamma, &lambda_hat)?.value;
    Ok(FitResult {
        information_singular: crate::variance::invert_scaled(&eval.information(), eval.information_scale()).is_err(),
        score_norm: eval.score_norm(),
        pll: eval.pll,
        gamma_hat: best.gamma,
        theta_hat,
        lambda_hat,
        f_hat,
        fll,
        iterations,
        converged: best.converged,
        diverged: best.diverged,
        n: sample.len(),
        n_events: eval.events.len(),
        tau: sample.tau(),
    })
}

/// `Λ̂` with jumps `m_t / (n Q̂(t))` at distinct event times, and `θ̂ = Λ̂(∞)`.
fn breslow(sample: &SurvivalSample, eval: &ProfileEval) -> Result<(StepFunction, f64)> {
    let mut jumps: Vec<(f64, f64)> =
        eval.events.iter().enumerate().map(|(e, &i)| (sample.time(i), eval.inverse_n_q(e))).collect();
    jumps.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut times: Vec<f64> = Vec::with_capacity(jumps.len());
    let mut sizes: Vec<f64> = Vec::with_capacity(jumps.len());
    for (t, s) in jumps {
        match times.last() {
            Some(&last) if last == t => *sizes.last_mut().unwrap() += s,
            _ => {
                times.push(t);
                sizes.push(s);
            }
        }
    }
    let lambda = StepFunction::new(times, sizes)?;
    let theta = lambda.total();
    Ok((lambda, theta))
}

/// `p̂(x) = exp(-g(γ̂, x) θ̂)`.
pub fn cure_probability<L: Link + ?Sized>(fit: &FitResult, link: &L, x: &[f64]) -> Result<f64> {
    Ok(log_cure_probability(fit, link, x)?.exp())
}

/// `log p̂(x) = -g(γ̂, x) θ̂`, finite where `p̂` itself underflows.
pub fn log_cure_probability<L: Link + ?Sized>(fit: &FitResult, link: &L, x: &[f64]) -> Result<f64> {
    if !fit.converged {
        return Err(Error::NotConverged);
    }
    crate::link::check_dims(link, &fit.gamma_hat, x)?;
    let mut dlog = vec![0.0; fit.gamma_hat.len()];
    let log_g = link.log_value(&fit.gamma_hat, x, &mut dlog);
    if !log_g.is_finite() {
        return Err(Error::NonFiniteLink);
    }
    Ok(-(log_g + fit.theta_hat.ln()).exp())
}
