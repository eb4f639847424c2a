//! Monte Carlo studies under the two-covariate design
//! `S(t | x) = exp(-exp(Γ(γ₀ᵀx)) θ₀ F₀(t))` with `F₀ = U[0, 1]`,
//! `X₁ ~ U[α, α + 1]`, `X₂ ~ N(α, σ²)` and `C ~ Exp(λ)`.
//!
//! Replication `r` draws from its own ChaCha8 stream `(seed, r)`, so a run is
//! bit-identical for any worker count.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize};

use crate::data::{Observation, SurvivalSample, TauPolicy};
use crate::error::{Error, Result};
use crate::estimator::{fit, FitOptions};
use crate::link::LinkModel;
use crate::variance::{confidence_interval, Inference, Transform};

/// Quantile levels `0.01, …, 0.99` of `X₁` at which cure probabilities are checked.
pub const GRID_LEVELS: usize = 99;
/// Share of failed replications tolerated before a run is rejected.
pub const EXCLUSION_CAP: f64 = 0.05;

fn default_gamma0() -> Vec<f64> {
    vec![-2.0, 1.0]
}
fn default_log_theta0() -> f64 {
    0.1
}
fn default_reps() -> usize {
    500
}
fn default_x2_sd() -> f64 {
    1.0 / 12.0
}
fn default_ci_level() -> f64 {
    0.95
}

/// Accepts `identity`, `cubic` and `sine` besides the usual link grammar.
fn link_kind<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<LinkModel, D::Error> {
    let s = String::deserialize(de)?;
    parse_link_kind(&s).map_err(serde::de::Error::custom)
}

/// Parses a link kind, with `identity`, `cubic` and `sine` as aliases.
pub fn parse_link_kind(s: &str) -> Result<LinkModel> {
    match s.trim() {
        "identity" => Ok(LinkModel::Cox),
        "cubic" => Ok(LinkModel::Poly(3)),
        "sine" => Ok(LinkModel::Sin),
        other => other.parse(),
    }
}

/// Scenario file contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationScenario {
    pub n: usize,
    #[serde(deserialize_with = "link_kind", alias = "link")]
    pub link_kind: LinkModel,
    #[serde(default = "default_gamma0")]
    pub gamma0: Vec<f64>,
    #[serde(default = "default_log_theta0")]
    pub log_theta0: f64,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub target_cure: Option<f64>,
    #[serde(default)]
    pub lambda_cens: Option<f64>,
    #[serde(default)]
    pub target_cens: Option<f64>,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default)]
    pub seed: u64,
    /// Standard deviation of `X₂`.
    #[serde(default = "default_x2_sd")]
    pub x2_sd: f64,
    #[serde(default = "default_ci_level")]
    pub ci_level: f64,
    #[serde(default)]
    pub fit: FitOptions,
}

impl SimulationScenario {
    /// Identity-link scenario with both rates given as targets.
    pub fn targeted(n: usize, target_cure: f64, target_cens: f64) -> Self {
        SimulationScenario {
            n,
            link_kind: LinkModel::Cox,
            gamma0: default_gamma0(),
            log_theta0: default_log_theta0(),
            alpha: None,
            target_cure: Some(target_cure),
            lambda_cens: None,
            target_cens: Some(target_cens),
            reps: default_reps(),
            seed: 0,
            x2_sd: default_x2_sd(),
            ci_level: default_ci_level(),
            fit: FitOptions::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let scenario: SimulationScenario = serde_json::from_str(text)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        if self.gamma0.len() != 2 || self.gamma0.iter().any(|g| !g.is_finite()) {
            return bad(format!("gamma0 must hold two finite numbers, got {:?}", self.gamma0));
        }
        if !self.log_theta0.is_finite() {
            return bad("log_theta0 must be finite".into());
        }
        match (self.alpha, self.target_cure) {
            (Some(a), None) if a.is_finite() => {}
            (None, Some(t)) if t > 0.0 && t < 1.0 => {}
            (Some(_), Some(_)) | (None, None) => return bad("give exactly one of alpha and target_cure".into()),
            _ => return bad("alpha must be finite and target_cure must lie in (0, 1)".into()),
        }
        match (self.lambda_cens, self.target_cens) {
            (Some(l), None) if l > 0.0 && l.is_finite() => {}
            (None, Some(t)) if t > 0.0 && t < 1.0 => {}
            (Some(_), Some(_)) | (None, None) => return bad("give exactly one of lambda_cens and target_cens".into()),
            _ => return bad("lambda_cens must be positive and target_cens must lie in (0, 1)".into()),
        }
        if self.reps == 0 {
            return bad("reps must be positive".into());
        }
        if !(self.x2_sd >= 0.0 && self.x2_sd.is_finite()) {
            return bad(format!("x2_sd must be nonnegative, got {}", self.x2_sd));
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return bad(format!("ci_level must lie in (0, 1), got {}", self.ci_level));
        }
        Ok(())
    }
}

/// Composite Simpson weights on `[a, b]` with `m` (even) intervals.
fn simpson(a: f64, b: f64, m: usize) -> Vec<(f64, f64)> {
    let h = (b - a) / m as f64;
    (0..=m)
        .map(|k| {
            let w = if k == 0 || k == m {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            (a + k as f64 * h, w * h / 3.0)
        })
        .collect()
}

const U_INTERVALS: usize = 1024;
const Z_INTERVALS: usize = 192;
const Z_RANGE: f64 = 8.0;

struct Quadrature {
    u: Vec<(f64, f64)>,
    z: Vec<(f64, f64)>,
}

impl Quadrature {
    fn new() -> Self {
        let norm = (2.0 * std::f64::consts::PI).sqrt();
        let z = simpson(-Z_RANGE, Z_RANGE, Z_INTERVALS)
            .into_iter()
            .map(|(z, w)| (z, w * (-0.5 * z * z).exp() / norm))
            .collect();
        Quadrature { u: simpson(0.0, 1.0, U_INTERVALS), z }
    }
}

/// A fully specified data-generating model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Design {
    pub link: LinkModel,
    pub gamma0: Vec<f64>,
    pub theta0: f64,
    pub alpha: f64,
    pub lambda_cens: f64,
    pub x2_sd: f64,
    /// Population cure rate `E[p(X)]`.
    pub expected_cure: f64,
    /// Population censoring rate `P(δ = 0)`.
    pub expected_cens: f64,
}

impl Design {
    pub fn new(link: LinkModel, gamma0: &[f64], log_theta0: f64, alpha: f64, lambda_cens: f64, x2_sd: f64) -> Self {
        let mut d = Design {
            link,
            gamma0: gamma0.to_vec(),
            theta0: log_theta0.exp(),
            alpha,
            lambda_cens,
            x2_sd,
            expected_cure: f64::NAN,
            expected_cens: f64::NAN,
        };
        let quad = Quadrature::new();
        d.expected_cure = d.expect(&quad, |a| (-a).exp());
        d.expected_cens = d.expect(&quad, |a| censoring_given(a, lambda_cens));
        d
    }

    /// `a(x) = g(γ₀, x) θ₀`.
    pub fn hazard_scale(&self, x: &[f64]) -> f64 {
        let s = self.gamma0[0] * x[0] + self.gamma0[1] * x[1];
        self.link.transform(s).0.exp() * self.theta0
    }

    /// `p(x) = exp(-g(γ₀, x) θ₀)`.
    pub fn cure_probability(&self, x: &[f64]) -> f64 {
        (-self.hazard_scale(x)).exp()
    }

    /// `P(δ = 0 | x)`.
    pub fn censoring_probability(&self, x: &[f64]) -> f64 {
        censoring_given(self.hazard_scale(x), self.lambda_cens)
    }

    fn expect(&self, quad: &Quadrature, f: impl Fn(f64) -> f64) -> f64 {
        expect_at(self.link, &self.gamma0, self.theta0, self.alpha, self.x2_sd, quad, f)
    }

    /// `X₁` at quantile level `k / 100` paired with `x₂ = 0`.
    pub fn grid_point(&self, k: usize) -> [f64; 2] {
        [self.alpha + k as f64 / 100.0, 0.0]
    }

    /// One subject's covariates, latent event time (`None` if cured) and
    /// censoring time. Draws, in order: `X₁`, `X₂`, the event uniform, `C`.
    pub fn subject<R: Rng + ?Sized>(&self, rng: &mut R) -> Subject {
        let x1 = self.alpha + rng.random::<f64>();
        let x2 = if self.x2_sd > 0.0 {
            Normal::new(self.alpha, self.x2_sd).expect("finite normal").sample(rng)
        } else {
            self.alpha
        };
        let a = self.hazard_scale(&[x1, x2]);
        // S(t) = exp(-a t) on [0, 1]; mass exp(-a) beyond 1 is the cure fraction.
        let w: f64 = rng.random();
        let t = -(1.0 - w).ln() / a;
        let censoring = Exp::new(self.lambda_cens).expect("positive rate").sample(rng);
        Subject { covariates: vec![x1, x2], event_time: (t <= 1.0).then_some(t), censoring_time: censoring }
    }
}

fn censoring_given(a: f64, lambda: f64) -> f64 {
    let r = lambda + a;
    1.0 - a * (-(-r).exp_m1()) / r
}

fn expect_at(
    link: LinkModel,
    gamma0: &[f64],
    theta0: f64,
    alpha: f64,
    x2_sd: f64,
    quad: &Quadrature,
    f: impl Fn(f64) -> f64,
) -> f64 {
    let mut total = 0.0;
    for &(z, wz) in &quad.z {
        let x2 = alpha + x2_sd * z;
        let mut inner = 0.0;
        for &(u, wu) in &quad.u {
            let s = gamma0[0] * (alpha + u) + gamma0[1] * x2;
            inner += wu * f(link.transform(s).0.exp() * theta0);
        }
        total += wz * inner;
    }
    total
}

/// A generated subject before censoring is applied.
#[derive(Debug, Clone, PartialEq)]
pub struct Subject {
    pub covariates: Vec<f64>,
    pub event_time: Option<f64>,
    pub censoring_time: f64,
}

impl Subject {
    pub fn observe(self) -> Observation {
        match self.event_time {
            Some(t) if t <= self.censoring_time => Observation::new(t, true, self.covariates),
            _ => Observation::new(self.censoring_time, false, self.covariates),
        }
    }
}

/// `n` subjects from `design`, with threshold `τ = 1`.
pub fn generate<R: Rng + ?Sized>(design: &Design, n: usize, rng: &mut R) -> Result<SurvivalSample> {
    let obs = (0..n).map(|_| design.subject(rng).observe()).collect();
    SurvivalSample::new(obs, TauPolicy::Fixed(1.0))
}

/// RNG stream of replication `index`.
pub fn replication_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

const ALPHA_STEP: f64 = 0.25;
const ALPHA_MAX: f64 = 10.0;
const LAMBDA_MIN: f64 = 1e-8;
const LAMBDA_MAX: f64 = 1e4;
const RATE_TOL: f64 = 0.005;

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let f_lo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Resolves `alpha` and `lambda_cens`, solving for them when targets are given.
///
/// The cure rate is matched by searching outward from `α = 0` for the nearest
/// bracket and bisecting; the censoring rate by bisection on `log λ`. Both
/// expectations are computed by deterministic quadrature.
pub fn calibrate(scenario: &SimulationScenario) -> Result<Design> {
    scenario.validate()?;
    let link = scenario.link_kind;
    let theta0 = scenario.log_theta0.exp();
    let quad = Quadrature::new();
    let cure_at = |alpha: f64| expect_at(link, &scenario.gamma0, theta0, alpha, scenario.x2_sd, &quad, |a| (-a).exp());

    let alpha = match (scenario.alpha, scenario.target_cure) {
        (Some(a), _) => a,
        (None, Some(target)) => {
            let f = |a: f64| cure_at(a) - target;
            let steps = (ALPHA_MAX / ALPHA_STEP).round() as usize;
            let mut found = None;
            let (mut lo_min, mut hi_max) = (f64::INFINITY, f64::NEG_INFINITY);
            let f0 = f(0.0);
            let (mut right, mut left) = (f0, f0);
            for k in 1..=steps {
                let (a_r, a_l) = (k as f64 * ALPHA_STEP, -(k as f64) * ALPHA_STEP);
                let (next_r, next_l) = (f(a_r), f(a_l));
                for v in [next_r, next_l] {
                    lo_min = lo_min.min(v + target);
                    hi_max = hi_max.max(v + target);
                }
                if right == 0.0 {
                    found = Some(a_r - ALPHA_STEP);
                } else if (right > 0.0) != (next_r > 0.0) {
                    found = Some(bisect(a_r - ALPHA_STEP, a_r, f));
                } else if (left > 0.0) != (next_l > 0.0) {
                    found = Some(bisect(a_l, a_l + ALPHA_STEP, f));
                }
                if found.is_some() {
                    break;
                }
                right = next_r;
                left = next_l;
            }
            found.ok_or_else(|| {
                Error::Calibration(format!(
                    "target cure rate {target} unreachable: E[p] spans [{lo_min:.4}, {hi_max:.4}] for alpha in [-{ALPHA_MAX}, {ALPHA_MAX}]"
                ))
            })?
        }
        (None, None) => unreachable!("validated"),
    };

    let lambda = match (scenario.lambda_cens, scenario.target_cens) {
        (Some(l), _) => l,
        (None, Some(target)) => {
            let cens_at = |log_l: f64| {
                let l = log_l.exp();
                expect_at(link, &scenario.gamma0, theta0, alpha, scenario.x2_sd, &quad, |a| censoring_given(a, l))
            };
            let (lo, hi) = (LAMBDA_MIN.ln(), LAMBDA_MAX.ln());
            let (floor, ceiling) = (cens_at(lo), cens_at(hi));
            if target <= floor {
                if target < floor - RATE_TOL {
                    return Err(Error::Calibration(format!(
                        "target censoring rate {target} is below the cure-induced floor {floor:.4}"
                    )));
                }
                LAMBDA_MIN
            } else if target > ceiling {
                return Err(Error::Calibration(format!(
                    "target censoring rate {target} unreachable: at most {ceiling:.4} for lambda <= {LAMBDA_MAX}"
                )));
            } else {
                bisect(lo, hi, |l| cens_at(l) - target).exp()
            }
        }
        (None, None) => unreachable!("validated"),
    };

    Ok(Design::new(link, &scenario.gamma0, scenario.log_theta0, alpha, lambda, scenario.x2_sd))
}

/// Estimates from one successful replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationEstimate {
    pub gamma_hat: Vec<f64>,
    pub log_theta_hat: f64,
    pub theta_hat: f64,
    pub se_gamma: Vec<f64>,
    pub se_log_theta: f64,
    /// Diagonal of `Î⁻¹ / n`.
    pub var_gamma_hat: Vec<f64>,
    /// `v̂_θ / n`.
    pub var_theta_hat: f64,
    pub covered_gamma: Vec<bool>,
    pub covered_log_theta: bool,
    /// Coverage of `p(x)` over the quantile grid, untransformed.
    pub covered_p: Vec<bool>,
    pub covered_p_logit: Vec<bool>,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    pub index: usize,
    pub censored_fraction: Option<f64>,
    pub estimate: Option<ReplicationEstimate>,
    /// Why the replication was excluded.
    pub failure: Option<String>,
}

/// Empirical summary of one parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSummary {
    pub name: String,
    pub truth: f64,
    pub mean: f64,
    pub bias: f64,
    pub var: f64,
    pub mse: f64,
    pub cov: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CureCoverage {
    pub levels: Vec<f64>,
    pub x1: Vec<f64>,
    pub truth: Vec<f64>,
    pub cov: Vec<f64>,
    pub cov_logit: Vec<f64>,
    pub mean_cov: f64,
    pub mean_cov_logit: f64,
    /// Averages over levels 0.01–0.05 and 0.95–0.99.
    pub outer_cov: f64,
    pub outer_cov_logit: f64,
}

/// Mean estimated variances against the empirical ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceCalibration {
    pub empirical_var_gamma: Vec<f64>,
    pub mean_estimated_var_gamma: Vec<f64>,
    pub empirical_var_theta: f64,
    pub mean_estimated_var_theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub scenario: SimulationScenario,
    pub design: Design,
    pub reps: usize,
    pub used: usize,
    pub excluded: usize,
    pub mean_censored_fraction: f64,
    /// `γ₁`, `γ₂`, then `γ₀ = log θ`.
    pub parameters: Vec<ParameterSummary>,
    pub cure_probability: CureCoverage,
    pub variance_calibration: VarianceCalibration,
}

/// A report together with its per-replication records.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationRun {
    pub report: SimulationReport,
    pub replications: Vec<Replication>,
}

fn covers(ci: (f64, f64), truth: f64) -> bool {
    ci.0 <= truth && truth <= ci.1
}

fn replicate(scenario: &SimulationScenario, design: &Design, truth_p: &[f64], index: usize) -> Replication {
    let mut rng = replication_rng(scenario.seed, index);
    let mut rep = Replication { index, censored_fraction: None, estimate: None, failure: None };
    match estimate_once(scenario, design, truth_p, index, &mut rng, &mut rep) {
        Ok(est) => rep.estimate = Some(est),
        Err(e) => rep.failure = Some(e.to_string()),
    }
    rep
}

fn estimate_once(
    scenario: &SimulationScenario,
    design: &Design,
    truth_p: &[f64],
    index: usize,
    rng: &mut ChaCha8Rng,
    rep: &mut Replication,
) -> Result<ReplicationEstimate> {
    let sample = generate(design, scenario.n, rng)?.with_tau(TauPolicy::Auto)?;
    rep.censored_fraction = Some(1.0 - sample.n_events() as f64 / sample.len() as f64);
    let mut options = scenario.fit.clone();
    options.seed = options.seed.wrapping_add(index as u64);
    let f = fit(&sample, &design.link, &options)?;
    if !f.converged {
        return Err(Error::NotConverged);
    }
    let inference = Inference::new(&sample, &design.link, &f)?;
    let level = scenario.ci_level;
    let report = inference.report(level)?;
    let log_theta_hat = f.theta_hat.ln();
    let covered_gamma = report.gamma_ci.iter().zip(&design.gamma0).map(|(ci, g)| covers(*ci, *g)).collect();
    let covered_log_theta = covers(report.log_theta_ci, design.theta0.ln());

    let mut covered_p = Vec::with_capacity(GRID_LEVELS);
    let mut covered_p_logit = Vec::with_capacity(GRID_LEVELS);
    let n = sample.len() as f64;
    for (k, &truth) in (1..=GRID_LEVELS).zip(truth_p) {
        let (p_hat, v_p) = inference.cure_probability_variance(&design.grid_point(k))?;
        let se = (v_p / n).sqrt();
        let hit = |t| confidence_interval(p_hat, se, level, t).map(|ci| covers(ci, truth)).unwrap_or(false);
        covered_p.push(hit(Transform::None));
        covered_p_logit.push(hit(Transform::Logit));
    }

    Ok(ReplicationEstimate {
        gamma_hat: f.gamma_hat.clone(),
        log_theta_hat,
        theta_hat: f.theta_hat,
        se_gamma: report.se_gamma.clone(),
        se_log_theta: report.se_log_theta,
        var_gamma_hat: report.vcov.iter().enumerate().map(|(j, row)| row[j]).collect(),
        var_theta_hat: report.v_theta / n,
        covered_gamma,
        covered_log_theta,
        covered_p,
        covered_p_logit,
        iterations: f.iterations,
    })
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    sum / count as f64
}

fn rate(hits: impl Iterator<Item = bool>) -> f64 {
    mean(hits.map(|h| if h { 1.0 } else { 0.0 }))
}

fn summarize(name: &str, truth: f64, values: &[f64], covered: &[bool]) -> ParameterSummary {
    let m = mean(values.iter().copied());
    let len = values.len() as f64;
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / len;
    let mse = values.iter().map(|v| (v - truth) * (v - truth)).sum::<f64>() / len;
    ParameterSummary {
        name: name.to_owned(),
        truth,
        mean: m,
        bias: m - truth,
        var,
        mse,
        cov: rate(covered.iter().copied()),
    }
}

fn outer(levels: &[f64]) -> f64 {
    mean(levels[..5].iter().chain(&levels[GRID_LEVELS - 5..]).copied())
}

/// Runs all replications on `workers` threads (all cores when `None`).
///
/// Failed replications are excluded and counted; the run fails when they
/// exceed [`EXCLUSION_CAP`] or fewer than two remain.
pub fn run(scenario: &SimulationScenario, workers: Option<usize>) -> Result<SimulationRun> {
    scenario.validate()?;
    if scenario.reps < 2 {
        return Err(Error::InvalidArgument("at least 2 replications are needed for an empirical variance".into()));
    }
    let design = calibrate(scenario)?;
    let truth_p: Vec<f64> = (1..=GRID_LEVELS).map(|k| design.cure_probability(&design.grid_point(k))).collect();

    let work = || -> Vec<Replication> {
        (0..scenario.reps).into_par_iter().map(|r| replicate(scenario, &design, &truth_p, r)).collect()
    };
    let replications = match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?
            .install(work),
        None => work(),
    };

    let report = aggregate(scenario, &design, &truth_p, &replications)?;
    Ok(SimulationRun { report, replications })
}

fn aggregate(
    scenario: &SimulationScenario,
    design: &Design,
    truth_p: &[f64],
    replications: &[Replication],
) -> Result<SimulationReport> {
    let ok: Vec<&ReplicationEstimate> = replications.iter().filter_map(|r| r.estimate.as_ref()).collect();
    let excluded = replications.len() - ok.len();
    if excluded as f64 > EXCLUSION_CAP * replications.len() as f64 {
        return Err(Error::ExclusionCap { excluded, total: replications.len() });
    }
    if ok.len() < 2 {
        return Err(Error::InvalidArgument(format!("only {} usable replications", ok.len())));
    }

    let mut parameters = Vec::new();
    for j in 0..2 {
        let values: Vec<f64> = ok.iter().map(|e| e.gamma_hat[j]).collect();
        let covered: Vec<bool> = ok.iter().map(|e| e.covered_gamma[j]).collect();
        parameters.push(summarize(&format!("gamma{}", j + 1), design.gamma0[j], &values, &covered));
    }
    let values: Vec<f64> = ok.iter().map(|e| e.log_theta_hat).collect();
    let covered: Vec<bool> = ok.iter().map(|e| e.covered_log_theta).collect();
    parameters.push(summarize("gamma0", design.theta0.ln(), &values, &covered));

    let cov: Vec<f64> = (0..GRID_LEVELS).map(|k| rate(ok.iter().map(|e| e.covered_p[k]))).collect();
    let cov_logit: Vec<f64> = (0..GRID_LEVELS).map(|k| rate(ok.iter().map(|e| e.covered_p_logit[k]))).collect();
    let cure_probability = CureCoverage {
        levels: (1..=GRID_LEVELS).map(|k| k as f64 / 100.0).collect(),
        x1: (1..=GRID_LEVELS).map(|k| design.grid_point(k)[0]).collect(),
        truth: truth_p.to_vec(),
        mean_cov: mean(cov.iter().copied()),
        mean_cov_logit: mean(cov_logit.iter().copied()),
        outer_cov: outer(&cov),
        outer_cov_logit: outer(&cov_logit),
        cov,
        cov_logit,
    };

    let empirical_var = |values: Vec<f64>| {
        let m = mean(values.iter().copied());
        values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64
    };
    let variance_calibration = VarianceCalibration {
        empirical_var_gamma: parameters[..2].iter().map(|p| p.var).collect(),
        mean_estimated_var_gamma: (0..2).map(|j| mean(ok.iter().map(|e| e.var_gamma_hat[j]))).collect(),
        empirical_var_theta: empirical_var(ok.iter().map(|e| e.theta_hat).collect()),
        mean_estimated_var_theta: mean(ok.iter().map(|e| e.var_theta_hat)),
    };

    Ok(SimulationReport {
        scenario: scenario.clone(),
        design: design.clone(),
        reps: replications.len(),
        used: ok.len(),
        excluded,
        mean_censored_fraction: mean(replications.iter().filter_map(|r| r.censored_fraction)),
        parameters,
        cure_probability,
        variance_calibration,
    })
}

impl SimulationReport {
    /// One row shaped like the published table: rates in percent, then MSE,
    /// VAR and COV for `γ₁`, `γ₂`, `γ₀`.
    pub fn write_table_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header = vec!["n".to_owned(), "pct_cure".to_owned(), "pct_cens".to_owned()];
        for stat in ["mse", "var", "cov"] {
            header.extend(self.parameters.iter().map(|p| format!("{stat}_{}", p.name)));
        }
        wtr.write_record(&header)?;
        let mut row = vec![
            self.scenario.n.to_string(),
            (100.0 * self.design.expected_cure).to_string(),
            (100.0 * self.design.expected_cens).to_string(),
        ];
        row.extend(self.parameters.iter().map(|p| p.mse.to_string()));
        row.extend(self.parameters.iter().map(|p| p.var.to_string()));
        row.extend(self.parameters.iter().map(|p| p.cov.to_string()));
        wtr.write_record(&row)?;
        wtr.flush()?;
        Ok(())
    }
}

/// Per-replication estimates, one row per replication.
pub fn write_replications_csv<W: Write>(replications: &[Replication], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record([
        "rep",
        "status",
        "censored_fraction",
        "gamma1",
        "gamma2",
        "log_theta",
        "se_gamma1",
        "se_gamma2",
        "se_log_theta",
        "covered_gamma1",
        "covered_gamma2",
        "covered_gamma0",
    ])?;
    for r in replications {
        let cens = r.censored_fraction.map(|c| c.to_string()).unwrap_or_default();
        let mut row = vec![r.index.to_string(), if r.estimate.is_some() { "ok" } else { "excluded" }.to_owned(), cens];
        match &r.estimate {
            Some(e) => {
                row.extend(e.gamma_hat.iter().map(f64::to_string));
                row.push(e.log_theta_hat.to_string());
                row.extend(e.se_gamma.iter().map(f64::to_string));
                row.push(e.se_log_theta.to_string());
                row.extend(e.covered_gamma.iter().map(|c| u8::from(*c).to_string()));
                row.push(u8::from(e.covered_log_theta).to_string());
            }
            None => row.extend(std::iter::repeat_n(String::new(), 9)),
        }
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}
