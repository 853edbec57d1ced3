//! `qgnn`: runs simulated layers, training, resource estimates and the
//! invariant suites, and writes a report.
//!
//! Exit status is 0 when every assertion holds, 1 when one fails (the report
//! is still written) and 2 for bad configuration or runtime errors.

mod config;
mod report;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qgnn::verify::Suite;

use config::{OutputFormat, Settings};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Runtime(#[from] anyhow::Error),
}

impl From<qgnn::Error> for CliError {
    fn from(e: qgnn::Error) -> Self {
        match e {
            qgnn::Error::Config(m) => CliError::Config(m),
            other => CliError::Runtime(other.into()),
        }
    }
}

#[derive(Parser)]
#[command(name = "qgnn", version, about = "Simulated quantum graph neural network layers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML file with the same keys as the flags; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    settings: Settings,
}

impl Common {
    fn resolve(self) -> Result<Settings, CliError> {
        match &self.config {
            Some(path) => Ok(self.settings.over(Settings::from_file(path)?)),
            None => Ok(self.settings),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Two-layer graph convolution.
    RunGcn(Common),
    /// Simplified convolution with S^K.
    RunSgc(Common),
    /// Polynomial Laplacian filter from eigenvalue-transform phases.
    RunLgc(Common),
    /// One attention layer.
    RunGat(Common),
    /// One message-passing layer.
    RunMpnn(Common),
    /// Finite-difference training on the inner-product cost.
    Train(Common),
    /// Resource tradeoff table for a scenario.
    Estimate(Common),
    /// Invariant suite over the bundled fixtures.
    Verify {
        /// blockenc, gcn, sgc, lgc, gat, mpnn or all.
        selector: Suite,
        #[command(flatten)]
        common: Common,
    },
}

fn execute(command: Command) -> Result<bool, CliError> {
    let (settings, report, rendered) = match command {
        Command::Estimate(c) => {
            let s = c.resolve()?;
            let (r, text) = run::estimate(&s)?;
            (s, r, text)
        }
        Command::Verify { selector, common } => {
            let s = common.resolve()?;
            let r = run::verify(selector, &s)?;
            (s, r, None)
        }
        other => {
            let (c, pipeline): (Common, fn(&Settings) -> Result<report::Report, CliError>) = match other {
                Command::RunGcn(c) => (c, run::run_gcn),
                Command::RunSgc(c) => (c, run::run_sgc),
                Command::RunLgc(c) => (c, run::run_lgc),
                Command::RunGat(c) => (c, run::run_gat),
                Command::RunMpnn(c) => (c, run::run_mpnn),
                Command::Train(c) => (c, run::train),
                Command::Estimate(_) | Command::Verify { .. } => unreachable!("handled above"),
            };
            let s = c.resolve()?;
            let r = pipeline(&s)?;
            (s, r, None)
        }
    };
    let text = rendered.unwrap_or_else(|| report.render(settings.format.unwrap_or(OutputFormat::Json)));
    report::emit(&text, settings.out.as_deref())?;
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("qgnn: {e:#}");
            ExitCode::from(2)
        }
    }
}
