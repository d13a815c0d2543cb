//! `hyperex` — reproducible experiment harness over the hyperex library.
//!
//! Subcommands: `validate`, `mix`, `simulate`, `chameleon`, `experiments`.
//! Canonical output is JSON (with the resolved configuration and seed
//! embedded); `--format csv` emits a lossy table for plotting. Exit codes:
//! 0 success, 1 assertion or validation failure, 2 usage or parse error.

mod output;
mod runs;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use hyperex::error::Error;

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "hyperex",
    version,
    about = "Exclusion, interchange and chameleon processes on hypergraphs: \
             validation, exact mixing analysis, simulation, experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, serde::Serialize)]
pub struct CommonOpts {
    /// Model file (JSON).
    #[arg(long)]
    pub model: Option<String>,

    /// Master seed; all randomness derives from (seed, stream-id).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Worker threads for replica-level parallelism.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,

    /// Suppress the timestamp so identical configs give identical bytes.
    #[arg(long, default_value_t = false)]
    pub deterministic: bool,

    /// Output path; stdout when omitted.
    #[arg(long)]
    #[serde(skip)]
    pub output: Option<String>,

    /// Output format; CSV is a lossy projection of the JSON.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check the model requirements: class-function measures, fixed-point
    /// probability at most 1/5, regularity, irreducibility.
    Validate(ValidateArgs),
    /// Exact mixing times with the reported (not asserted) ratio column.
    Mix(MixArgs),
    /// Trajectories and meeting-time samples from seeded event streams.
    Simulate(SimulateArgs),
    /// Chameleon runs: fill frequency, depinking times, ink-martingale check.
    Chameleon(ChameleonArgs),
    /// Named verification experiments.
    Experiments(ExperimentsArgs),
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub common: CommonOpts,

    /// Particle counts to test for irreducibility (repeatable).
    #[arg(long = "k", value_delimiter = ',')]
    pub ks: Vec<usize>,
}

#[derive(Args, Debug)]
pub struct MixArgs {
    #[command(flatten)]
    pub common: CommonOpts,

    /// Chain kinds to tabulate.
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Kind::Rw, Kind::Ex, Kind::Ip])]
    pub kind: Vec<Kind>,

    /// Particle counts (ignored for rw).
    #[arg(long = "k", value_delimiter = ',', default_values_t = [2usize])]
    pub ks: Vec<usize>,

    /// Epsilon thresholds.
    #[arg(long = "eps", value_delimiter = ',', default_values_t = [0.25f64])]
    pub epss: Vec<f64>,

    /// State-space cap.
    #[arg(long, default_value_t = hyperex::hypermodel::DEFAULT_STATE_CAP)]
    pub cap: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Rw,
    Rwk,
    Ex,
    Ip,
}

impl From<Kind> for hyperex::exact::ChainKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Rw => hyperex::exact::ChainKind::Rw,
            Kind::Rwk => hyperex::exact::ChainKind::Rwk,
            Kind::Ex => hyperex::exact::ChainKind::Ex,
            Kind::Ip => hyperex::exact::ChainKind::Ip,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Process {
    Rw,
    Rwk,
    Ex,
    Ip,
    Meeting,
    BarMeeting,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonOpts,

    #[arg(long, value_enum)]
    pub process: Process,

    /// Initial state, comma-separated vertex labels (two labels for
    /// meeting, four for bar-meeting).
    #[arg(long, value_delimiter = ',')]
    pub init: Vec<u32>,

    #[arg(long, default_value_t = 10.0)]
    pub horizon: f64,

    #[arg(long = "n-replicas", default_value_t = 1)]
    pub n_replicas: usize,

    /// Use the lazy doubled-rate stream.
    #[arg(long, default_value_t = false)]
    pub lazy: bool,
}

#[derive(Args, Debug)]
pub struct ChameleonArgs {
    #[command(flatten)]
    pub common: CommonOpts,

    /// Number of labelled particles; the start tuple is the first k
    /// vertices unless --init is given.
    #[arg(long, default_value_t = 2)]
    pub k: usize,

    /// Explicit start tuple (k distinct vertices).
    #[arg(long, value_delimiter = ',')]
    pub init: Vec<u32>,

    #[arg(long = "n-replicas", default_value_t = 1000)]
    pub n_replicas: usize,

    /// Phase length; defaults to twenty times the four-particle exclusion
    /// quarter mixing time.
    #[arg(long = "phase-length")]
    pub phase_length: Option<f64>,

    /// Horizon in multiples of the phase length.
    #[arg(long = "horizon-phases", default_value_t = 2000.0)]
    pub horizon_phases: f64,

    /// Use the modified (uncapped, ungated) pinkening rule.
    #[arg(long, default_value_t = false)]
    pub modified: bool,

    /// Probe times for the ink-martingale check, in multiples of the phase
    /// length.
    #[arg(long = "probe-phases", value_delimiter = ',', default_values_t = [1.0f64, 2.0])]
    pub probe_phases: Vec<f64>,

    /// Largest acceptable unabsorbed fraction.
    #[arg(long = "unabsorbed-limit", default_value_t = 1e-3)]
    pub unabsorbed_limit: f64,
}

#[derive(Args, Debug)]
pub struct ExperimentsArgs {
    #[command(flatten)]
    pub common: CommonOpts,

    /// Experiment name.
    #[arg(value_enum)]
    pub name: ExperimentName,

    /// Time grid for neg-corr.
    #[arg(long = "t-grid", value_delimiter = ',', default_values_t = [0.01f64, 0.05, 0.10, 0.20, 0.30])]
    pub t_grid: Vec<f64>,

    /// Delta list for delta-ratio.
    #[arg(long, value_delimiter = ',', default_values_t = [0.5f64, 0.1, 0.02])]
    pub deltas: Vec<f64>,

    /// Meeting-horizon multiplier for easy-classify.
    #[arg(long = "c-time", default_value_t = 1e10)]
    pub c_time: f64,

    /// Exceedance-probability threshold for easy-classify.
    #[arg(long = "c-prob", default_value_t = 1e-3)]
    pub c_prob: f64,

    /// Desk-scale preset for easy-classify (c-time 100, c-prob 0.01).
    #[arg(long = "desk-preset", default_value_t = false)]
    pub desk_preset: bool,

    #[arg(long = "n-replicas", default_value_t = 1000)]
    pub n_replicas: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentName {
    NegCorr,
    DeltaRatio,
    EasyClassify,
}

fn error_exit_code(err: &Error) -> u8 {
    match err {
        Error::Parse(_) | Error::InvalidModel(_) | Error::InvalidArgument(_) => EXIT_USAGE,
        _ => EXIT_FAIL,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints help/version on stdout with success
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match runs::dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(error_exit_code(&err))
        }
    }
}
