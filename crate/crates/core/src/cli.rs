//! Command-line surface. The binary only parses arguments and prints what
//! [`execute`] returns.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::data::{SurvivalSample, TauPolicy};
use crate::error::{Error, Result};
use crate::estimator::{fit, FitOptions};
use crate::link::LinkModel;
use crate::promotion_time::check_p2;
use crate::report::{to_json, CheckP2Document, CureProbDocument, FitDocument, SelectLinkDocument, SimulationDocument};
use crate::selection::compare_links;
use crate::simulate::{run, write_replications_csv, SimulationScenario};

#[derive(Debug, Parser)]
#[command(name = "cure-npmle", version, about = "NPMLE for the extended promotion-time cure model")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one link and report estimates, likelihoods and inference.
    Fit(FitArgs),
    /// Estimated cure probability at a covariate vector, with intervals.
    CureProb(CureProbArgs),
    /// Compare links by profile and full log-likelihood.
    SelectLink(SelectLinkArgs),
    /// Check the fit against the Lagrange-multiplier promotion-time NPMLE.
    CheckP2(CheckP2Args),
    /// Run a Monte Carlo study from a scenario file.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV with header `time,status,x1,...,xd`.
    #[arg(long)]
    pub data: PathBuf,
    /// Cure threshold: `auto` or a number.
    #[arg(long, default_value = "auto")]
    pub tau: TauPolicy,
}

#[derive(Debug, Args)]
pub struct OptimizerArgs {
    /// Number of optimizer starts.
    #[arg(long, default_value_t = 1)]
    pub multistart: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl OptimizerArgs {
    fn options(&self) -> Result<FitOptions> {
        if self.multistart == 0 {
            return Err(Error::InvalidArgument("multistart must be at least 1".into()));
        }
        Ok(FitOptions { multistart: self.multistart, seed: self.seed, ..FitOptions::default() })
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// `cox`, `poly:<k>`, `sin` or `sinpoly:<k>`.
    #[arg(long, default_value = "cox")]
    pub link: LinkModel,
    /// Confidence level.
    #[arg(long, default_value_t = 0.95)]
    pub ci: f64,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
}

#[derive(Debug, Args)]
pub struct CureProbArgs {
    #[command(flatten)]
    pub fit: FitArgs,
    /// Covariate vector, comma separated.
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    pub x: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct SelectLinkArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Comma-separated link specs.
    #[arg(long, value_delimiter = ',', required = true)]
    pub links: Vec<LinkModel>,
    /// Also write the table as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
}

#[derive(Debug, Args)]
pub struct CheckP2Args {
    #[arg(long)]
    pub data: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario JSON.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the scenario's replication count.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub reps: Option<u64>,
    /// Overrides the scenario's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; all cores by default.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: Option<u64>,
    /// Writes `report.json`, `table.csv` and `replications.csv` here.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

/// Runs a command and returns what goes to stdout.
pub fn execute(command: &Command) -> Result<String> {
    match command {
        Command::Fit(a) => {
            let sample = SurvivalSample::load_csv(&a.data.data, a.data.tau)?;
            let f = fit(&sample, &a.link, &a.optimizer.options()?)?;
            to_json(&FitDocument::new(&sample, &a.link, &f, a.ci))
        }
        Command::CureProb(a) => {
            let sample = SurvivalSample::load_csv(&a.fit.data.data, a.fit.data.tau)?;
            let f = fit(&sample, &a.fit.link, &a.fit.optimizer.options()?)?;
            to_json(&CureProbDocument::new(&sample, &a.fit.link, &f, &a.x, a.fit.ci)?)
        }
        Command::SelectLink(a) => {
            let sample = SurvivalSample::load_csv(&a.data.data, a.data.tau)?;
            let rows = compare_links(&sample, &a.links, &a.optimizer.options()?);
            let doc = SelectLinkDocument::new(&sample, rows);
            if let Some(path) = &a.csv {
                doc.write_csv(std::fs::File::create(path)?)?;
            }
            to_json(&doc)
        }
        Command::CheckP2(a) => {
            let sample = SurvivalSample::load_csv(&a.data, TauPolicy::Auto)?;
            to_json(&CheckP2Document::from(check_p2(&sample)?))
        }
        Command::Simulate(a) => {
            let mut scenario = SimulationScenario::from_json(&std::fs::read_to_string(&a.config)?)?;
            if let Some(reps) = a.reps {
                scenario.reps = reps as usize;
            }
            if let Some(seed) = a.seed {
                scenario.seed = seed;
            }
            let out = run(&scenario, a.workers.map(|w| w as usize))?;
            let json = to_json(&SimulationDocument::from(out.report.clone()))?;
            if let Some(dir) = &a.out_dir {
                std::fs::create_dir_all(dir)?;
                std::fs::write(dir.join("report.json"), &json)?;
                out.report.write_table_csv(std::fs::File::create(dir.join("table.csv"))?)?;
                write_replications_csv(&out.replications, std::fs::File::create(dir.join("replications.csv"))?)?;
            }
            Ok(json)
        }
    }
}
