//! JSON documents emitted by the command-line tool.
//!
//! Every document carries a `schema` tag naming the JSON Schema it conforms
//! to under `docs/schemas/`. Payloads hold no timestamps or host details, so
//! identical inputs give identical bytes.

use serde::Serialize;

use crate::data::SurvivalSample;
use crate::error::Error;
use crate::estimator::{FitResult, StepFunction};
use crate::link::Link;
use crate::promotion_time::P2Certificate;
use crate::selection::LinkComparison;
use crate::simulate::SimulationReport;
use crate::variance::{CureProbabilityReport, Inference, InferenceReport};

pub const FIT_SCHEMA: &str = "cure-npmle/fit/v1";
pub const CURE_PROB_SCHEMA: &str = "cure-npmle/cure-prob/v1";
pub const SELECT_LINK_SCHEMA: &str = "cure-npmle/select-link/v1";
pub const CHECK_P2_SCHEMA: &str = "cure-npmle/check-p2/v1";
pub const SIMULATION_SCHEMA: &str = "cure-npmle/simulate/v1";
pub const ERROR_SCHEMA: &str = "cure-npmle/error/v1";

/// A failure as reported in JSON.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorInfo {
    pub kind: String,
    pub message: String,
    pub row: Option<usize>,
}

impl From<&Error> for ErrorInfo {
    fn from(e: &Error) -> Self {
        ErrorInfo { kind: e.kind().to_owned(), message: e.to_string(), row: e.row() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorDocument {
    pub schema: &'static str,
    pub error: ErrorInfo,
}

impl ErrorDocument {
    pub fn new(e: &Error) -> Self {
        ErrorDocument { schema: ERROR_SCHEMA, error: e.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepFunctionDoc {
    pub jump_times: Vec<f64>,
    pub jump_sizes: Vec<f64>,
}

impl From<&StepFunction> for StepFunctionDoc {
    fn from(s: &StepFunction) -> Self {
        StepFunctionDoc { jump_times: s.jump_times().to_vec(), jump_sizes: s.jump_sizes().to_vec() }
    }
}

/// Estimates and diagnostics of one fit, without inference.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitSummary {
    pub link: String,
    pub n: usize,
    pub n_events: usize,
    pub tau: f64,
    pub converged: bool,
    pub diverged: bool,
    pub iterations: usize,
    pub score_norm: f64,
    pub information_singular: bool,
    pub gamma_hat: Vec<f64>,
    pub theta_hat: f64,
    pub log_theta_hat: f64,
    pub pll: f64,
    /// `null` when the full log-likelihood is `-∞`.
    pub fll: Option<f64>,
    /// Jumps of `F̂`; those of `Λ̂` are `θ̂` times these.
    pub f_hat: StepFunctionDoc,
}

impl FitSummary {
    pub fn new<L: Link + ?Sized>(link: &L, fit: &FitResult) -> Self {
        FitSummary {
            link: link.name(),
            n: fit.n,
            n_events: fit.n_events,
            tau: fit.tau,
            converged: fit.converged,
            diverged: fit.diverged,
            iterations: fit.iterations,
            score_norm: fit.score_norm,
            information_singular: fit.information_singular,
            gamma_hat: fit.gamma_hat.clone(),
            theta_hat: fit.theta_hat,
            log_theta_hat: fit.theta_hat.ln(),
            pll: fit.pll,
            fll: fit.fll.is_finite().then_some(fit.fll),
            f_hat: (&fit.f_hat).into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitDocument {
    pub schema: &'static str,
    #[serde(flatten)]
    pub fit: FitSummary,
    pub inference: Option<InferenceReport>,
    /// Why `inference` is missing.
    pub inference_error: Option<ErrorInfo>,
}

impl FitDocument {
    /// Attaches inference at `level` when the fit allows it.
    pub fn new<L: Link + ?Sized>(sample: &SurvivalSample, link: &L, fit: &FitResult, level: f64) -> Self {
        let (inference, inference_error) = match crate::variance::infer(sample, link, fit, level) {
            Ok(r) => (Some(r), None),
            Err(e) => (None, Some((&e).into())),
        };
        FitDocument { schema: FIT_SCHEMA, fit: FitSummary::new(link, fit), inference, inference_error }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CureProbDocument {
    pub schema: &'static str,
    pub fit: FitSummary,
    pub ci_level: f64,
    pub cure_probability: CureProbabilityReport,
}

impl CureProbDocument {
    pub fn new<L: Link + ?Sized>(
        sample: &SurvivalSample,
        link: &L,
        fit: &FitResult,
        x: &[f64],
        level: f64,
    ) -> crate::Result<Self> {
        let cure_probability = Inference::new(sample, link, fit)?.cure_probability(x, level)?;
        Ok(CureProbDocument {
            schema: CURE_PROB_SCHEMA,
            fit: FitSummary::new(link, fit),
            ci_level: level,
            cure_probability,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectLinkDocument {
    pub schema: &'static str,
    pub n: usize,
    pub n_events: usize,
    /// Sorted by FLL, best first.
    pub rows: Vec<LinkComparison>,
}

impl SelectLinkDocument {
    pub fn new(sample: &SurvivalSample, rows: Vec<LinkComparison>) -> Self {
        SelectLinkDocument { schema: SELECT_LINK_SCHEMA, n: sample.len(), n_events: sample.n_events(), rows }
    }

    /// `link,pll,fll,converged,rank_pll,rank_fll`, one row per link.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> crate::Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["link", "pll", "fll", "converged", "rank_pll", "rank_fll"])?;
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        let rank = |v: Option<usize>| v.map(|v| v.to_string()).unwrap_or_default();
        for r in &self.rows {
            wtr.write_record([
                r.link.to_string(),
                opt(r.pll),
                opt(r.fll),
                r.converged.to_string(),
                rank(r.rank_pll),
                rank(r.rank_fll),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckP2Document {
    pub schema: &'static str,
    #[serde(flatten)]
    pub certificate: P2Certificate,
}

impl From<P2Certificate> for CheckP2Document {
    fn from(certificate: P2Certificate) -> Self {
        CheckP2Document { schema: CHECK_P2_SCHEMA, certificate }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationDocument {
    pub schema: &'static str,
    #[serde(flatten)]
    pub report: SimulationReport,
}

impl From<SimulationReport> for SimulationDocument {
    fn from(report: SimulationReport) -> Self {
        SimulationDocument { schema: SIMULATION_SCHEMA, report }
    }
}

/// Pretty-printed JSON with a trailing newline.
pub fn to_json<T: Serialize>(doc: &T) -> crate::Result<String> {
    let mut s = serde_json::to_string_pretty(doc)?;
    s.push('\n');
    Ok(s)
}
