//! Plug-in asymptotic variances and delta-method confidence intervals.
//!
//! All estimators are evaluated at `γ̂` from the same risk-set pass that the
//! fit uses:
//!
//! ```text
//! Î    = n⁻¹ Σ δᵢ (dᵢ - ĥᵢ)(dᵢ - ĥᵢ)ᵀ
//! v̂_θ  = n⁻¹ Σ δᵢ / Q̂ᵢ² + bᵀ Î⁻¹ b,           b = n⁻¹ Σ δᵢ ĥᵢ / Q̂ᵢ
//! v̂_p  = p̂² g² (n⁻¹ Σ δᵢ / Q̂ᵢ² + ûᵀ Î⁻¹ û),   û = θ̂ d_γ̂(x) - b
//! ```
//!
//! with `dᵢ = d_γ̂(Xᵢ)`, `ĥᵢ = ĥ_γ̂(Yᵢ)` and `Q̂ᵢ = Q̂_γ̂(Yᵢ)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::SurvivalSample;
use crate::error::{Error, Result};
use crate::estimator::{FitResult, ProfileEval, RiskSets};
use crate::link::{self, Link};

/// Largest condition number accepted before `Î` is declared singular.
pub const CONDITION_LIMIT: f64 = 1e12;

/// `ĥ_γ(u) = ∇_γ Q̂_γ(u) / Q̂_γ(u)` by direct summation.
pub fn h_hat<L: Link + ?Sized>(sample: &SurvivalSample, link: &L, gamma: &[f64], u: f64) -> Result<Vec<f64>> {
    let q = link.param_dim(sample.dim());
    if gamma.len() != q {
        return Err(Error::DimensionMismatch { expected: q, found: gamma.len() });
    }
    let mut dlog = vec![0.0; q];
    let mut value = 0.0;
    let mut grad = vec![0.0; q];
    for i in 0..sample.len() {
        if sample.risk_indicator(i, u) {
            let g = link.log_value(gamma, sample.covariates(i), &mut dlog).exp();
            value += g;
            for (acc, d) in grad.iter_mut().zip(&dlog) {
                *acc += g * d;
            }
        }
    }
    if !(value.is_finite() && value > 0.0) {
        return Err(Error::NonFiniteLink);
    }
    Ok(grad.into_iter().map(|v| v / value).collect())
}

/// Plug-in information `Î` at `γ`.
pub fn information<L: Link + ?Sized>(sample: &SurvivalSample, link: &L, gamma: &[f64]) -> Result<DMatrix<f64>> {
    Ok(RiskSets::new(sample, link).evaluate(link, gamma, false)?.information())
}

/// `Î⁻¹` through the symmetric eigendecomposition, refusing matrices whose
/// condition number exceeds [`CONDITION_LIMIT`].
pub fn invert_information(info: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    invert_scaled(info, 0.0)
}

/// As [`invert_information`], additionally refusing eigenvalues below
/// `scale / CONDITION_LIMIT`, where `scale` is the size of the uncentred
/// second moment of `d_γ`. This catches degenerate one-parameter fits that a
/// condition number cannot see.
pub(crate) fn invert_scaled(info: &DMatrix<f64>, scale: f64) -> Result<DMatrix<f64>> {
    let q = info.nrows();
    if q == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let eig = info.clone().symmetric_eigen();
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if !(min > 0.0 && max / min < CONDITION_LIMIT && min * CONDITION_LIMIT > scale) {
        return Err(Error::SingularInformation);
    }
    let inv_diag = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l));
    let inv = &eig.eigenvectors * inv_diag * eig.eigenvectors.transpose();
    Ok((&inv + inv.transpose()) * 0.5)
}

/// Sums shared by `v̂_θ` and `v̂_p`.
struct ThetaTerms {
    /// `n⁻¹ Σ δᵢ / Q̂ᵢ²`
    first: f64,
    /// `n⁻¹ Σ δᵢ ĥᵢ / Q̂ᵢ`
    b: DVector<f64>,
    info_inv: DMatrix<f64>,
}

impl ThetaTerms {
    fn new(eval: &ProfileEval) -> Result<Self> {
        let q = eval.q;
        let n = eval.n as f64;
        let mut first = 0.0;
        let mut b = DVector::zeros(q);
        for e in 0..eval.events.len() {
            let qe = eval.q_at_event(e);
            first += 1.0 / (qe * qe);
            for a in 0..q {
                b[a] += eval.h[e * q + a] / qe;
            }
        }
        let info_inv = invert_scaled(&eval.information(), eval.information_scale())?;
        Ok(ThetaTerms { first: first / n, b: b / n, info_inv })
    }

    fn quadratic(&self, v: &DVector<f64>) -> f64 {
        if v.is_empty() {
            0.0
        } else {
            (v.transpose() * &self.info_inv * v)[(0, 0)]
        }
    }
}

fn converged_eval<L: Link + ?Sized>(sample: &SurvivalSample, link: &L, fit: &FitResult) -> Result<ProfileEval> {
    if !fit.converged {
        return Err(Error::NotConverged);
    }
    RiskSets::new(sample, link).evaluate(link, &fit.gamma_hat, false)
}

/// `v̂_θ`; the variance of `θ̂` is `v̂_θ / n`.
pub fn var_theta<L: Link + ?Sized>(sample: &SurvivalSample, link: &L, fit: &FitResult) -> Result<f64> {
    let terms = ThetaTerms::new(&converged_eval(sample, link, fit)?)?;
    Ok(terms.first + terms.quadratic(&terms.b))
}

/// `v̂_p(x)`; the variance of `p̂(x)` is `v̂_p / n`.
pub fn var_cure_prob<L: Link + ?Sized>(sample: &SurvivalSample, link: &L, fit: &FitResult, x: &[f64]) -> Result<f64> {
    let terms = ThetaTerms::new(&converged_eval(sample, link, fit)?)?;
    cure_prob_variance(&terms, link, fit, x)
}

fn cure_prob_variance<L: Link + ?Sized>(terms: &ThetaTerms, link: &L, fit: &FitResult, x: &[f64]) -> Result<f64> {
    let at_x = link::evaluate(link, &fit.gamma_hat, x)?;
    let p = (-at_x.value * fit.theta_hat).exp();
    let u = DVector::from_iterator(at_x.dlog.len(), at_x.dlog.iter().map(|d| fit.theta_hat * d)) - &terms.b;
    Ok(p * p * at_x.value * at_x.value * (terms.first + terms.quadratic(&u)))
}

/// Scale on which a normal interval is built before mapping back.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transform {
    None,
    Log,
    Logit,
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    match p {
        0.0 => f64::NEG_INFINITY,
        1.0 => f64::INFINITY,
        p if p > 0.0 && p < 1.0 => Normal::standard().inverse_cdf(p),
        _ => f64::NAN,
    }
}

fn logistic(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// Two-sided interval at `level` built on the scale given by `transform`.
pub fn confidence_interval(estimate: f64, se: f64, level: f64, transform: Transform) -> Result<(f64, f64)> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!("confidence level must lie in (0, 1), got {level}")));
    }
    if !(se >= 0.0) {
        return Err(Error::InvalidArgument(format!("standard error must be nonnegative, got {se}")));
    }
    let z = normal_quantile(0.5 * (1.0 + level));
    match transform {
        Transform::None => Ok((estimate - z * se, estimate + z * se)),
        Transform::Log => {
            if !(estimate > 0.0) {
                return Err(Error::TransformDomain { quantity: "estimate", value: estimate, transform: "log" });
            }
            let half = z * se / estimate;
            Ok(((estimate.ln() - half).exp(), (estimate.ln() + half).exp()))
        }
        Transform::Logit => {
            if !(estimate > 0.0 && estimate < 1.0) {
                return Err(Error::TransformDomain { quantity: "estimate", value: estimate, transform: "logit" });
            }
            let centre = (estimate / (1.0 - estimate)).ln();
            let half = z * se / (estimate * (1.0 - estimate));
            Ok((logistic(centre - half), logistic(centre + half)))
        }
    }
}

/// Variance estimates and intervals for one fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceReport {
    pub i_hat: Vec<Vec<f64>>,
    pub i_hat_inv: Vec<Vec<f64>>,
    /// `Î⁻¹ / n`.
    pub vcov: Vec<Vec<f64>>,
    pub v_theta: f64,
    pub se_gamma: Vec<f64>,
    pub se_theta: f64,
    /// Standard error of `log θ̂`, `se_theta / θ̂`.
    pub se_log_theta: f64,
    pub ci_level: f64,
    pub gamma_ci: Vec<(f64, f64)>,
    /// Interval for `θ` built on the log scale.
    pub theta_ci: (f64, f64),
    pub log_theta_ci: (f64, f64),
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect()
}

/// Standard errors and intervals for a cure probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CureProbabilityReport {
    pub x: Vec<f64>,
    pub p_hat: f64,
    pub v_p: f64,
    pub se: f64,
    pub ci: (f64, f64),
    pub ci_logit: (f64, f64),
}

/// Precomputed pieces for repeated inference on one fit.
pub struct Inference<'a, L: Link + ?Sized> {
    link: &'a L,
    fit: &'a FitResult,
    terms: ThetaTerms,
    info: DMatrix<f64>,
    n: f64,
}

impl<'a, L: Link + ?Sized> Inference<'a, L> {
    pub fn new(sample: &SurvivalSample, link: &'a L, fit: &'a FitResult) -> Result<Self> {
        let eval = converged_eval(sample, link, fit)?;
        let info = eval.information();
        let terms = ThetaTerms::new(&eval)?;
        Ok(Inference { link, fit, terms, info, n: sample.len() as f64 })
    }

    pub fn v_theta(&self) -> f64 {
        self.terms.first + self.terms.quadratic(&self.terms.b)
    }

    pub fn information(&self) -> &DMatrix<f64> {
        &self.info
    }

    pub fn information_inverse(&self) -> &DMatrix<f64> {
        &self.terms.info_inv
    }

    pub fn report(&self, level: f64) -> Result<InferenceReport> {
        let n = self.n;
        let vcov = &self.terms.info_inv / n;
        let se_gamma: Vec<f64> = vcov.diagonal().iter().map(|v| v.sqrt()).collect();
        let gamma_ci = self
            .fit
            .gamma_hat
            .iter()
            .zip(&se_gamma)
            .map(|(g, se)| confidence_interval(*g, *se, level, Transform::None))
            .collect::<Result<Vec<_>>>()?;
        let v_theta = self.v_theta();
        let se_theta = (v_theta / n).sqrt();
        let theta_ci = confidence_interval(self.fit.theta_hat, se_theta, level, Transform::Log)?;
        Ok(InferenceReport {
            i_hat: rows(&self.info),
            i_hat_inv: rows(&self.terms.info_inv),
            vcov: rows(&vcov),
            v_theta,
            se_gamma,
            se_theta,
            se_log_theta: se_theta / self.fit.theta_hat,
            ci_level: level,
            gamma_ci,
            theta_ci,
            log_theta_ci: (theta_ci.0.ln(), theta_ci.1.ln()),
        })
    }

    /// `(p̂(x), v̂_p(x))`.
    pub fn cure_probability_variance(&self, x: &[f64]) -> Result<(f64, f64)> {
        let p_hat = crate::estimator::cure_probability(self.fit, self.link, x)?;
        Ok((p_hat, cure_prob_variance(&self.terms, self.link, self.fit, x)?))
    }

    pub fn cure_probability(&self, x: &[f64], level: f64) -> Result<CureProbabilityReport> {
        let (p_hat, v_p) = self.cure_probability_variance(x)?;
        let se = (v_p / self.n).sqrt();
        let ci = confidence_interval(p_hat, se, level, Transform::None)?;
        let ci_logit = confidence_interval(p_hat, se, level, Transform::Logit)?;
        Ok(CureProbabilityReport { x: x.to_vec(), p_hat, v_p, se, ci, ci_logit })
    }
}

/// Full inference block for a converged fit.
pub fn infer<L: Link + ?Sized>(
    sample: &SurvivalSample,
    link: &L,
    fit: &FitResult,
    level: f64,
) -> Result<InferenceReport> {
    Inference::new(sample, link, fit)?.report(level)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Observation, TauPolicy};
    use crate::estimator::{fit, FitOptions};
    use crate::link::LinkModel;

    fn sample(rows: &[(f64, bool, &[f64])]) -> SurvivalSample {
        SurvivalSample::new(
            rows.iter().map(|(t, e, x)| Observation::new(*t, *e, x.to_vec())).collect(),
            TauPolicy::Auto,
        )
        .unwrap()
    }

    #[test]
    fn quantiles() {
        assert!((normal_quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-14);
        assert!((normal_quantile(0.5)).abs() < 1e-16);
        assert!((normal_quantile(0.05) + 1.644_853_626_951_472_2).abs() < 1e-14);
        assert!((normal_quantile(1e-10) + 6.361_340_902_404_056).abs() < 1e-12);
        assert!((normal_quantile(0.995) - 2.575_829_303_548_900_4).abs() < 1e-14);
    }

    #[test]
    fn h_hat_cases() {
        let s = sample(&[(1.0, true, &[2.5]), (2.0, true, &[2.5]), (3.0, false, &[2.5])]);
        for u in [0.0, 1.5, 2.0, 10.0] {
            let h = h_hat(&s, &LinkModel::Cox, &[0.7], u).unwrap();
            assert!((h[0] - 2.5).abs() < 1e-14);
        }
        let s = sample(&[(1.0, true, &[0.0]), (2.0, true, &[1.0])]);
        assert_eq!(h_hat(&s, &LinkModel::Cox, &[0.0], 1.0).unwrap(), vec![0.5]);
    }

    #[test]
    fn information_two_point() {
        let s = sample(&[(1.0, true, &[0.0]), (2.0, true, &[1.0])]);
        let i = information(&s, &LinkModel::Cox, &[0.0]).unwrap();
        assert!((i[(0, 0)] - 0.125).abs() < 1e-16);
    }

    #[test]
    fn equal_covariates_singular() {
        let s = sample(&[(1.0, true, &[1.0]), (2.0, true, &[1.0]), (3.0, false, &[1.0])]);
        let info = information(&s, &LinkModel::Cox, &[0.3]).unwrap();
        assert!(info[(0, 0)].abs() < 1e-15);
        let f = fit(&s, &LinkModel::Cox, &FitOptions::default()).unwrap();
        assert!(f.information_singular);
        assert!(matches!(var_theta(&s, &LinkModel::Cox, &f), Err(Error::SingularInformation)));
    }

    #[test]
    fn no_covariate_variances() {
        let s = sample(&[(1.0, true, &[]), (2.0, true, &[])]);
        let f = fit(&s, &LinkModel::Cox, &FitOptions::default()).unwrap();
        assert_eq!(var_theta(&s, &LinkModel::Cox, &f).unwrap(), 2.5);
        let vp = var_cure_prob(&s, &LinkModel::Cox, &f, &[]).unwrap();
        assert!((vp - (-3.0f64).exp() * 2.5).abs() < 1e-15);
        assert!((vp - 0.124_467_9).abs() < 1e-6);
    }

    #[test]
    fn intervals() {
        for t in [Transform::None, Transform::Log, Transform::Logit] {
            let (lo, hi) = confidence_interval(0.3, 0.0, 0.95, t).unwrap();
            assert!((lo - 0.3).abs() < 1e-15 && (hi - 0.3).abs() < 1e-15);
        }
        let (lo, hi) = confidence_interval(1.5, (2.5f64 / 2.0).sqrt(), 0.95, Transform::Log).unwrap();
        // exp(log 1.5 ± 1.959964 · 1.118034 / 1.5)
        assert!((lo - 0.348_051).abs() < 1e-6 && (hi - 6.464_567).abs() < 1e-6, "{lo} {hi}");
        let (lo, hi) = confidence_interval(0.99, 0.05, 0.95, Transform::Logit).unwrap();
        assert!(
            (lo - 0.004_948_607_549_793_809).abs() < 1e-12 && (hi - 0.999_999_492_580_805).abs() < 1e-12,
            "{lo} {hi}"
        );
        assert!(confidence_interval(0.0, 1.0, 0.95, Transform::Log).is_err());
        assert!(confidence_interval(1.0, 1.0, 0.95, Transform::Logit).is_err());
        assert!(confidence_interval(1.0, -1.0, 0.95, Transform::None).is_err());
        assert!(confidence_interval(1.0, 1.0, 1.0, Transform::None).is_err());
    }

    #[test]
    fn singular_guard() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1e-13]);
        assert!(invert_information(&m).is_err());
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let inv = invert_information(&m).unwrap();
        let id = &m * &inv;
        assert!((id[(0, 0)] - 1.0).abs() < 1e-14 && id[(0, 1)].abs() < 1e-14);
    }
}
