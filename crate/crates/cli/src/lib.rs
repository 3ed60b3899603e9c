//! Command-line driver: loads a model and experiment config, runs one
//! analysis and renders the report.
//!
//! Exit codes: 0 success, 2 usage or config error, 3 numerical failure,
//! 4 a property check ran and failed (the report is still written).

pub mod commands;
pub mod config;
pub mod report;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::Experiment;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error in {}: field `{field}`: {message}", path.display())]
    Config {
        path: PathBuf,
        field: String,
        message: String,
    },
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] rnn_linz::Error),
}

impl CliError {
    pub fn config(path: &Path, field: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Config {
            path: path.to_path_buf(),
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Core(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "rnn-linz", version, about = "Linearization analyses for rate RNNs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the nonlinear network; CSV rows `k, x_1..x_n, r_1..r_n`.
    Simulate(CommonArgs),
    /// Solve the fixed point and print gains, both system matrices and inputs.
    Linearize(CommonArgs),
    /// Spectra of W D and D W, eigenvector maps and dot-product table.
    Eigen(CommonArgs),
    /// Trajectory equivalence of the two linear systems plus Taylor order.
    Equiv(CommonArgs),
    /// Instantiate every context and compare all pairs.
    Context(CommonArgs),
    /// Write the model in canonical form.
    Export(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Experiment config (JSON). The model path inside it is relative to it.
    #[arg(long)]
    pub config: PathBuf,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format; `simulate` defaults to csv, everything else to json.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Label of the context to analyse (single-context commands); defaults
    /// to the first.
    #[arg(long)]
    pub context: Option<String>,
}

/// Rendered report plus the exit code it implies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub output: String,
    pub exit_code: i32,
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let (args, default_format) = match &cli.command {
        Command::Simulate(a) => (a, Format::Csv),
        Command::Linearize(a)
        | Command::Eigen(a)
        | Command::Equiv(a)
        | Command::Context(a)
        | Command::Export(a) => (a, Format::Json),
    };
    let format = args.format.unwrap_or(default_format);
    let exp = Experiment::load(&args.config)?;
    let ctx = exp.context(args.context.as_deref())?;
    match &cli.command {
        Command::Simulate(_) => commands::simulate_cmd(&exp, ctx, format),
        Command::Linearize(_) => commands::linearize_cmd(&exp, ctx, format),
        Command::Eigen(_) => commands::eigen_cmd(&exp, ctx, format),
        Command::Equiv(_) => commands::equiv_cmd(&exp, ctx, format),
        Command::Context(_) => commands::context_cmd(&exp, format),
        Command::Export(_) => {
            if format == Format::Csv {
                return Err(CliError::Usage("export only writes json".into()));
            }
            commands::export_cmd(&exp)
        }
    }
}
