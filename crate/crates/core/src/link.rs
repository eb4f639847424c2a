//! Positive link functions `g(γ, x)` with analytic derivatives.
//!
//! The shipped family is exp-composed: `g(γ, x) = exp(Γ(γᵀx))` with
//! `Γ ∈ {identity, (·)ᵏ, sin, sin((·)ᵏ)}`. Implementations work on the log
//! scale, which keeps `g > 0` exact and lets the estimator rescale sums
//! without overflow.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A parametric family `g(γ, x) > 0`.
///
/// Custom links implement this trait and are responsible for positivity;
/// returning a finite log value guarantees it.
pub trait Link: Send + Sync {
    fn name(&self) -> String;

    /// Length `q` of `γ` for covariates of length `d`.
    fn param_dim(&self, covariate_dim: usize) -> usize;

    /// Returns `log g(γ, x)` and writes `d_γ(x) = ∇_γ log g(γ, x)` into `dlog`.
    fn log_value(&self, gamma: &[f64], x: &[f64], dlog: &mut [f64]) -> f64;

    /// Writes the `q × q` Hessian of `log g` (row-major) into `out`.
    /// Returns `false` if the link does not provide it.
    fn log_hessian(&self, _gamma: &[f64], _x: &[f64], _out: &mut [f64]) -> bool {
        false
    }
}

/// `g`, `∇_γ g` and `d_γ = ∇_γ g / g` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkEval {
    pub value: f64,
    pub grad: Vec<f64>,
    pub dlog: Vec<f64>,
}

/// Index transformation `Γ` applied to `s = γᵀx`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum LinkModel {
    /// `Γ(s) = s`.
    Cox,
    /// `Γ(s) = sᵏ`.
    Poly(u32),
    /// `Γ(s) = sin(s)`.
    Sin,
    /// `Γ(s) = sin(sᵏ)`.
    SinPoly(u32),
}

fn int_pow(s: f64, e: i64) -> f64 {
    if e < 0 {
        0.0
    } else {
        s.powi(e as i32)
    }
}

impl LinkModel {
    /// `(Γ(s), Γ'(s), Γ''(s))`.
    pub fn transform(&self, s: f64) -> (f64, f64, f64) {
        match *self {
            LinkModel::Cox => (s, 1.0, 0.0),
            LinkModel::Poly(k) => {
                let k = k as i64;
                let kf = k as f64;
                (int_pow(s, k), kf * int_pow(s, k - 1), if k >= 2 { kf * (kf - 1.0) * int_pow(s, k - 2) } else { 0.0 })
            }
            LinkModel::Sin => {
                let (sn, cs) = s.sin_cos();
                (sn, cs, -sn)
            }
            LinkModel::SinPoly(k) => {
                let k = k as i64;
                let kf = k as f64;
                let inner = int_pow(s, k);
                let d_inner = kf * int_pow(s, k - 1);
                let d2_inner = if k >= 2 { kf * (kf - 1.0) * int_pow(s, k - 2) } else { 0.0 };
                let (sn, cs) = inner.sin_cos();
                (sn, cs * d_inner, -sn * d_inner * d_inner + cs * d2_inner)
            }
        }
    }

    fn index(gamma: &[f64], x: &[f64]) -> f64 {
        gamma.iter().zip(x).map(|(a, b)| a * b).sum()
    }
}

impl Link for LinkModel {
    fn name(&self) -> String {
        self.to_string()
    }

    fn param_dim(&self, covariate_dim: usize) -> usize {
        covariate_dim
    }

    fn log_value(&self, gamma: &[f64], x: &[f64], dlog: &mut [f64]) -> f64 {
        let (value, slope, _) = self.transform(LinkModel::index(gamma, x));
        for (d, xj) in dlog.iter_mut().zip(x) {
            *d = slope * xj;
        }
        value
    }

    fn log_hessian(&self, gamma: &[f64], x: &[f64], out: &mut [f64]) -> bool {
        let (_, _, curv) = self.transform(LinkModel::index(gamma, x));
        let q = x.len();
        for a in 0..q {
            for b in 0..q {
                out[a * q + b] = curv * x[a] * x[b];
            }
        }
        true
    }
}

impl fmt::Display for LinkModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinkModel::Cox => f.write_str("cox"),
            LinkModel::Poly(k) => write!(f, "poly:{k}"),
            LinkModel::Sin => f.write_str("sin"),
            LinkModel::SinPoly(k) => write!(f, "sinpoly:{k}"),
        }
    }
}

impl FromStr for LinkModel {
    type Err = Error;

    fn from_str(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let bad = || Error::BadLinkSpec(spec.to_owned());
        let power = |k: &str| -> Result<u32> {
            match k.parse::<u32>() {
                Ok(k) if k >= 1 => Ok(k),
                _ => Err(bad()),
            }
        };
        match spec.split_once(':') {
            None => match spec {
                "cox" => Ok(LinkModel::Cox),
                "sin" => Ok(LinkModel::Sin),
                _ => Err(bad()),
            },
            Some(("poly", k)) => power(k).map(LinkModel::Poly),
            Some(("sinpoly", k)) => power(k).map(LinkModel::SinPoly),
            Some(_) => Err(bad()),
        }
    }
}

impl TryFrom<String> for LinkModel {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<LinkModel> for String {
    fn from(link: LinkModel) -> String {
        link.to_string()
    }
}

pub(crate) fn check_dims<L: Link + ?Sized>(link: &L, gamma: &[f64], x: &[f64]) -> Result<()> {
    let q = link.param_dim(x.len());
    if gamma.len() != q {
        return Err(Error::DimensionMismatch { expected: q, found: gamma.len() });
    }
    Ok(())
}

/// `g(γ, x)` with its gradient.
pub fn evaluate<L: Link + ?Sized>(link: &L, gamma: &[f64], x: &[f64]) -> Result<LinkEval> {
    check_dims(link, gamma, x)?;
    let mut dlog = vec![0.0; gamma.len()];
    let log_g = link.log_value(gamma, x, &mut dlog);
    let value = log_g.exp();
    if !value.is_finite() {
        return Err(Error::NonFiniteLink);
    }
    let grad = dlog.iter().map(|d| d * value).collect();
    Ok(LinkEval { value, grad, dlog })
}

/// Largest `|analytic - central difference| / (1 + |analytic|)` over the
/// coordinates of `∇_γ g`.
pub fn check_gradient<L: Link + ?Sized>(link: &L, gamma: &[f64], x: &[f64], h: f64) -> Result<f64> {
    if h <= 0.0 {
        return Err(Error::InvalidArgument(format!("step must be positive, got {h}")));
    }
    let analytic = evaluate(link, gamma, x)?.grad;
    let mut worst: f64 = 0.0;
    let mut probe = gamma.to_vec();
    for j in 0..gamma.len() {
        probe[j] = gamma[j] + h;
        let up = evaluate(link, &probe, x)?.value;
        probe[j] = gamma[j] - h;
        let down = evaluate(link, &probe, x)?.value;
        probe[j] = gamma[j];
        let numeric = (up - down) / (2.0 * h);
        worst = worst.max((analytic[j] - numeric).abs() / (1.0 + analytic[j].abs()));
    }
    Ok(worst)
}
