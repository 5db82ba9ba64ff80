//! Command-line front end: argument parsing, command dispatch and report
//! output.

mod commands;
mod examples;
mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use retlaw_core::exact::LawKind;
use serde::Serialize;

pub use output::Output;

#[derive(Debug, Parser)]
#[command(
    name = "retlaw",
    version,
    about = "Return, hitting and sojourn time laws of words in stationary sources"
)]
pub struct Cli {
    /// Source spec: a JSON file path or inline JSON.
    #[arg(long, global = true)]
    pub source: Option<String>,
    /// Word to analyze; repeat for commands that take several.
    #[arg(long = "pattern", global = true)]
    pub patterns: Vec<String>,
    /// Directory to write report files into (created if missing).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Period structure of the word.
    Analyze,
    /// Exact survival curve or sojourn law.
    Exact(ExactArgs),
    /// Parameters of the approximating laws.
    Theory(TheoryArgs),
    /// Check every error envelope against exact laws.
    Verify(VerifyArgs),
    /// Monte Carlo estimates with confidence bands.
    Simulate(SimulateArgs),
    /// Rescaled return-time moments next to their approximations.
    Moments(MomentsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Law {
    Hitting,
    Return,
    Sojourn,
}

impl Law {
    fn kind(self) -> Option<LawKind> {
        match self {
            Law::Hitting => Some(LawKind::Hitting),
            Law::Return => Some(LawKind::Return),
            Law::Sojourn => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Law::Hitting => "hitting",
            Law::Return => "return",
            Law::Sojourn => "sojourn",
        }
    }
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    #[arg(long, value_enum, default_value_t = Law::Return)]
    pub law: Law,
    /// Last time (or run length for the sojourn law) to tabulate.
    #[arg(long = "t", default_value_t = 100)]
    pub t_max: usize,
}

#[derive(Debug, Args)]
pub struct TheoryArgs {
    /// Number of repetition probabilities to compute.
    #[arg(long, default_value_t = retlaw_core::theory::DEFAULT_RHO_TERMS)]
    pub rho_terms: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Battery {
    #[value(name = "paper-examples")]
    Reference,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Run a built-in set of sources and words instead of --source/--pattern.
    #[arg(long, value_enum)]
    pub battery: Option<Battery>,
    /// Constant of the moment and equivalence envelopes.
    #[arg(long = "c", default_value_t = 1.0)]
    pub c: f64,
    /// The time grid reaches this many multiples of 1/P(A).
    #[arg(long, default_value_t = 20.0)]
    pub horizon: f64,
    #[arg(long = "beta", default_values_t = [1.0, 2.0])]
    pub betas: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 10_000_000)]
    pub trajectory_length: usize,
    /// Hitting-time horizon; defaults to 20/P(A).
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long, default_value_t = 8)]
    pub workers: usize,
    /// Confidence level of the bands.
    #[arg(long, default_value_t = 0.997)]
    pub level: f64,
}

#[derive(Debug, Args)]
pub struct MomentsArgs {
    #[arg(long = "beta", default_values_t = [1.0])]
    pub betas: Vec<f64>,
    /// Constant of the moment envelope.
    #[arg(long = "c", default_value_t = 1.0)]
    pub c: f64,
}

/// Failure modes mapped to exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or inputs: exit 2.
    Usage(String),
    /// Model or guard errors from the engine: exit 3.
    Model { kind: &'static str, message: String },
    /// Verification ran but some asserted, informative check failed: exit 1.
    ChecksFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ChecksFailed(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Model { .. } => 3,
        }
    }

    /// JSON error object written to stderr.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct ErrorObject<'a> {
            error: &'a str,
            message: String,
        }
        let (error, message) = match self {
            CliError::Usage(m) => ("usage", m.clone()),
            CliError::Model { kind, message } => (*kind, message.clone()),
            CliError::ChecksFailed(n) => ("checks-failed", format!("{n} checks failed")),
        };
        serde_json::to_string(&ErrorObject { error, message }).expect("plain strings serialize")
    }
}

impl From<retlaw_core::Error> for CliError {
    fn from(e: retlaw_core::Error) -> Self {
        use retlaw_core::Error;
        match e {
            Error::Argument(m) => CliError::Usage(m),
            Error::Json(e) => CliError::Usage(format!("invalid JSON: {e}")),
            Error::Io(e) => CliError::Usage(e.to_string()),
            Error::Model(m) => CliError::Model {
                kind: "model",
                message: m,
            },
            Error::Guard(m) => CliError::Model {
                kind: "guard",
                message: m,
            },
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Runs one command; report text goes to `out`.
pub fn run(cli: &Cli, out: &mut Output) -> CliResult<()> {
    match &cli.command {
        Command::Analyze => commands::analyze(cli, out),
        Command::Exact(args) => commands::exact(cli, args, out),
        Command::Theory(args) => commands::theory(cli, args, out),
        Command::Verify(args) => commands::verify(cli, args, out),
        Command::Simulate(args) => commands::simulate(cli, args, out),
        Command::Moments(args) => commands::moments(cli, args, out),
    }
}
