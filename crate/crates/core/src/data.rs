//! Right-censored observations with a cure threshold.
//!
//! A [`SurvivalSample`] holds the observed triples `(Y, δ, X)` together with
//! the resolved threshold `τ`. Every subject with `Y > τ` is known to be cured
//! and stays in the risk set forever; see [`SurvivalSample::risk_indicator`].

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One subject: follow-up time, event indicator and covariates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub time: f64,
    pub event: bool,
    pub covariates: Vec<f64>,
}

impl Observation {
    pub fn new(time: f64, event: bool, covariates: Vec<f64>) -> Self {
        Observation { time, event, covariates }
    }
}

/// How the cure threshold is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TauPolicy {
    /// The largest observed event time.
    Auto,
    Fixed(f64),
}

impl FromStr for TauPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("auto") {
            return Ok(TauPolicy::Auto);
        }
        s.parse::<f64>()
            .map(TauPolicy::Fixed)
            .map_err(|_| Error::InvalidArgument(format!("tau must be `auto` or a number, got `{s}`")))
    }
}

impl fmt::Display for TauPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TauPolicy::Auto => f.write_str("auto"),
            TauPolicy::Fixed(t) => write!(f, "{t}"),
        }
    }
}

/// Validated right-censored sample. Immutable once built.
#[derive(Debug, Clone)]
pub struct SurvivalSample {
    observations: Vec<Observation>,
    dim: usize,
    tau: f64,
    within_threshold: Vec<bool>,
    last_event_time: f64,
}

impl SurvivalSample {
    pub fn new(observations: Vec<Observation>, tau: TauPolicy) -> Result<Self> {
        let first = observations.first().ok_or(Error::EmptySample)?;
        let dim = first.covariates.len();
        for (i, obs) in observations.iter().enumerate() {
            let row = i + 1;
            if !obs.time.is_finite() || obs.time < 0.0 {
                return Err(Error::BadTime { row, value: obs.time });
            }
            if obs.covariates.len() != dim {
                return Err(Error::ColumnCount { row, expected: dim + 2, found: obs.covariates.len() + 2 });
            }
            if let Some(j) = obs.covariates.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteCovariate { row, column: format!("x{}", j + 1) });
            }
        }

        let last_event_time = observations
            .iter()
            .filter(|o| o.event)
            .map(|o| o.time)
            .fold(None, |acc: Option<f64>, t| Some(acc.map_or(t, |a| a.max(t))))
            .ok_or(Error::NoEvents)?;

        let tau = match tau {
            TauPolicy::Auto => last_event_time,
            TauPolicy::Fixed(t) => {
                if t.is_nan() || t < 0.0 {
                    return Err(Error::InvalidThreshold(t));
                }
                if let Some(i) = observations.iter().position(|o| o.event && o.time > t) {
                    return Err(Error::EventBeyondThreshold { row: i + 1, time: observations[i].time, tau: t });
                }
                t
            }
        };

        let within_threshold = observations.iter().map(|o| o.time <= tau).collect();
        Ok(SurvivalSample { observations, dim, tau, within_threshold, last_event_time })
    }

    /// Same observations under a different threshold policy.
    pub fn with_tau(&self, tau: TauPolicy) -> Result<Self> {
        SurvivalSample::new(self.observations.clone(), tau)
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// Covariate dimension `d`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `max_i Y_i δ_i`, the smallest admissible threshold.
    pub fn last_event_time(&self) -> f64 {
        self.last_event_time
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn observation(&self, i: usize) -> &Observation {
        &self.observations[i]
    }

    pub fn time(&self, i: usize) -> f64 {
        self.observations[i].time
    }

    pub fn event(&self, i: usize) -> bool {
        self.observations[i].event
    }

    pub fn covariates(&self, i: usize) -> &[f64] {
        &self.observations[i].covariates
    }

    /// `Δ_i = 1{Y_i ≤ τ}`.
    pub fn within_threshold(&self, i: usize) -> bool {
        self.within_threshold[i]
    }

    pub fn threshold_indicators(&self) -> &[bool] {
        &self.within_threshold
    }

    pub fn n_events(&self) -> usize {
        self.observations.iter().filter(|o| o.event).count()
    }

    /// `R_i(u) = Δ_i 1{Y_i ≥ u} + (1 - Δ_i)`: subjects beyond the threshold
    /// never leave the risk set.
    pub fn risk_indicator(&self, i: usize, u: f64) -> bool {
        !self.within_threshold[i] || self.observations[i].time >= u
    }

    /// Parses `time,status,x1,...,xd` CSV text.
    pub fn from_csv_reader<R: Read>(reader: R, tau: TauPolicy) -> Result<Self> {
        let mut rdr =
            csv::ReaderBuilder::new().has_headers(true).flexible(true).trim(csv::Trim::All).from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
        if header.len() < 2 || header[0] != "time" || header[1] != "status" {
            return Err(Error::BadHeader { found: header.join(",") });
        }
        let width = header.len();

        let mut observations = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let record = record?;
            let row = i + 1;
            if record.len() != width {
                return Err(Error::ColumnCount { row, expected: width, found: record.len() });
            }
            let number = |j: usize| -> Result<f64> {
                record[j].parse::<f64>().map_err(|_| Error::NonNumeric {
                    row,
                    column: header[j].clone(),
                    value: record[j].to_owned(),
                })
            };
            let time = number(0)?;
            let event = match record[1].parse::<f64>() {
                Ok(0.0) => false,
                Ok(1.0) => true,
                _ => return Err(Error::BadStatus { row, value: record[1].to_owned() }),
            };
            let covariates = (2..width).map(number).collect::<Result<Vec<_>>>()?;
            if let Some(j) = covariates.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteCovariate { row, column: header[j + 2].clone() });
            }
            observations.push(Observation { time, event, covariates });
        }
        SurvivalSample::new(observations, tau)
    }

    pub fn load_csv<P: AsRef<Path>>(path: P, tau: TauPolicy) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        SurvivalSample::from_csv_reader(std::io::BufReader::new(file), tau)
    }

    /// Writes the sample in the format accepted by [`SurvivalSample::load_csv`].
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header = vec!["time".to_owned(), "status".to_owned()];
        header.extend((1..=self.dim).map(|j| format!("x{j}")));
        wtr.write_record(&header)?;
        for obs in &self.observations {
            let mut rec = vec![format!("{:?}", obs.time), if obs.event { "1" } else { "0" }.to_owned()];
            rec.extend(obs.covariates.iter().map(|v| format!("{v:?}")));
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, tau: TauPolicy) -> Result<SurvivalSample> {
        SurvivalSample::from_csv_reader(text.as_bytes(), tau)
    }

    #[test]
    fn auto_threshold_is_last_event() {
        let s = parse("time,status,x1\n1,1,0\n2,1,1\n", TauPolicy::Auto).unwrap();
        assert_eq!(s.tau(), 2.0);
        assert_eq!(s.threshold_indicators(), &[true, true]);
        assert_eq!(s.dim(), 1);
    }

    #[test]
    fn fixed_threshold_marks_cured() {
        let s = parse("time,status\n1,1\n5,0\n", TauPolicy::Fixed(2.0)).unwrap();
        assert_eq!(s.threshold_indicators(), &[true, false]);
        assert_eq!(s.dim(), 0);
    }

    #[test]
    fn bad_status_names_row() {
        let err = parse("time,status,x1\n1,1,0\n2,2,1\n", TauPolicy::Auto).unwrap_err();
        assert!(matches!(err, Error::BadStatus { row: 2, .. }), "{err}");
        assert!(err.to_string().contains("row 2"));
    }

    #[test]
    fn column_and_cell_errors() {
        let err = parse("time,status,x1\n1,1\n", TauPolicy::Auto).unwrap_err();
        assert!(matches!(err, Error::ColumnCount { row: 1, expected: 3, found: 2 }));
        let err = parse("time,status,x1\n1,1,0,9\n", TauPolicy::Auto).unwrap_err();
        assert!(matches!(err, Error::ColumnCount { row: 1, found: 4, .. }));
        let err = parse("time,status,x1\n1,1,0\n3,0,abc\n", TauPolicy::Auto).unwrap_err();
        assert!(matches!(err, Error::NonNumeric { row: 2, .. }));
        let err = parse("status,time\n1,1\n", TauPolicy::Auto).unwrap_err();
        assert!(matches!(err, Error::BadHeader { .. }));
        let err = parse("time,status\n-1,1\n", TauPolicy::Auto).unwrap_err();
        assert!(matches!(err, Error::BadTime { row: 1, .. }));
    }

    #[test]
    fn all_censored_rejected() {
        let err = parse("time,status\n1,0\n2,0\n", TauPolicy::Auto).unwrap_err();
        assert!(matches!(err, Error::NoEvents));
    }

    #[test]
    fn event_beyond_fixed_tau_rejected() {
        let err = parse("time,status\n1,1\n3,1\n", TauPolicy::Fixed(2.0)).unwrap_err();
        assert!(matches!(err, Error::EventBeyondThreshold { row: 2, .. }));
    }

    #[test]
    fn risk_indicator_cases() {
        let s = SurvivalSample::new(
            vec![Observation::new(1.0, true, vec![]), Observation::new(5.0, false, vec![])],
            TauPolicy::Fixed(2.0),
        )
        .unwrap();
        assert!(s.risk_indicator(0, 0.5));
        assert!(!s.risk_indicator(0, 1.5));
        assert!(s.risk_indicator(0, 1.0));
        assert!(s.risk_indicator(1, 100.0));
    }

    #[test]
    fn tau_policy_parsing() {
        assert_eq!("AUTO".parse::<TauPolicy>().unwrap(), TauPolicy::Auto);
        assert_eq!("2.5".parse::<TauPolicy>().unwrap(), TauPolicy::Fixed(2.5));
        assert!("soon".parse::<TauPolicy>().is_err());
    }

    #[test]
    fn csv_round_trip() {
        let s = parse("time,status,x1,x2\n0.5,1,0.25,-1\n2,0,1e-3,3\n", TauPolicy::Auto).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let back = parse(std::str::from_utf8(&buf).unwrap(), TauPolicy::Auto).unwrap();
        assert_eq!(back.observations(), s.observations());
    }
}
