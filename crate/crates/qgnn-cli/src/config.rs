//! Experiment configuration: command-line flags layered over an optional
//! TOML file. Every key in the file uses the flag's long name.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Deserialize;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputFormat {
    Json,
    Tsv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    Exact,
    Sampled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Json,
    Csv,
    Text,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActivationArg {
    Relu,
    Tanh,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelArg {
    Gcn,
    Sgc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConventionArg {
    MagnitudeSquared,
    SignedReal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QpeArg {
    Idealized,
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendArg {
    Compiled,
    Oracle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyArg {
    GeneralizedPermutations,
    Identity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariantArg {
    Sgc,
    Lgc,
}

/// Every configurable value. Flags and file keys share this shape; a flag
/// that is present wins over the file.
#[derive(Clone, Debug, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Settings {
    /// Graph file (JSON, or a TSV edge list with --features).
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub input_format: Option<InputFormat>,
    /// Features CSV for the TSV edge-list format.
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Report path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Cost evaluation: statevector inner product or sampled Hadamard test.
    #[arg(long, value_enum)]
    pub mode: Option<RunMode>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Overrides the Hoeffding shot count.
    #[arg(long)]
    pub shots: Option<u64>,
    /// Allowed `1 - fidelity` for the run's assertion.
    #[arg(long)]
    pub tolerance: Option<f64>,

    /// Power of S for the simplified convolution.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, value_enum)]
    pub activation: Option<ActivationArg>,
    /// Ansatz layers per weight operator.
    #[arg(long)]
    pub layers: Option<usize>,
    /// Eigenvalue-transform phases, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub phases: Option<Vec<f64>>,
    /// Degree of the random phase list when --phases is absent.
    #[arg(long)]
    pub degree: Option<usize>,

    /// Score register width.
    #[arg(long)]
    pub t: Option<usize>,
    /// Weight of the identity branch.
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long, value_enum)]
    pub convention: Option<ConventionArg>,
    #[arg(long, value_enum)]
    pub qpe: Option<QpeArg>,
    #[arg(long, value_enum)]
    pub backend: Option<BackendArg>,
    #[arg(long, value_enum)]
    pub family: Option<FamilyArg>,
    /// Skip entries that only complete a part to a permutation.
    #[arg(long)]
    pub mask: Option<bool>,
    #[arg(long)]
    pub include_self: Option<bool>,

    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,

    /// Named scenario: paper-large or tiny.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long, value_enum)]
    pub variant: Option<VariantArg>,
    #[arg(long)]
    pub n: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long)]
    pub d: Option<f64>,
    #[arg(long)]
    pub edges: Option<f64>,
    #[arg(long)]
    pub eps1: Option<f64>,
    #[arg(long)]
    pub eps2: Option<f64>,
}

macro_rules! overlay {
    ($cli:ident, $file:ident, $($f:ident),* $(,)?) => {
        Settings { $($f: $cli.$f.or($file.$f)),* }
    };
}

impl Settings {
    /// Flags over file values.
    pub fn over(self, file: Settings) -> Settings {
        let cli = self;
        overlay!(
            cli, file, graph, input_format, features, seed, out, format, mode, epsilon, delta, shots, tolerance, k,
            activation, layers, phases, degree, t, r, convention, qpe, backend, family, mask, include_self, model,
            epochs, learning_rate, preset, variant, n, c, s, d, edges, eps1, eps2,
        )
    }

    pub fn from_file(path: &Path) -> Result<Settings, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))
    }

    pub fn graph_path(&self) -> Result<&Path, CliError> {
        self.graph.as_deref().ok_or_else(|| CliError::Config("--graph is required".into()))
    }

    /// The seed, which sampled mode requires explicitly.
    pub fn seed(&self) -> Result<u64, CliError> {
        match (self.seed, self.mode) {
            (Some(s), _) => Ok(s),
            (None, Some(RunMode::Sampled)) => Err(CliError::Config("sampled mode needs --seed".into())),
            (None, _) => Ok(DEFAULT_SEED),
        }
    }
}

pub const DEFAULT_SEED: u64 = 7;
