//! `bdlab`: command-line front end.

mod commands;
mod table;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use bdlab::{ErrorKind, Tolerances};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "bdlab", version, about = "Finite-level invariants of graph algebras twisted by a divisor chain")]
pub struct Cli {
    /// Graph JSON file.
    #[arg(short = 'g', long = "graph", global = true)]
    pub graph: Option<PathBuf>,
    /// Divisor chain JSON file, `{"omega":[2,4,8]}`.
    #[arg(short = 'w', long = "omega", global = true)]
    pub omega: Option<PathBuf>,
    /// Render a plain-text table instead of JSON.
    #[arg(long, global = true)]
    pub table: bool,
    #[command(flatten)]
    pub tol: TolArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct TolArgs {
    /// Override the tower consistency tolerance.
    #[arg(long, global = true)]
    pub tol_consistency: Option<f64>,
    /// Override the eigen-residual tolerance.
    #[arg(long, global = true)]
    pub tol_eigen: Option<f64>,
}

impl TolArgs {
    pub fn resolve(&self) -> Tolerances {
        let mut t = Tolerances::default();
        if let Some(c) = self.tol_consistency {
            t.consistency = c;
        }
        if let Some(e) = self.tol_eigen {
            t.eigen = e;
        }
        t
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Graph checks.
    Graph {
        #[command(subcommand)]
        command: GraphCommand,
    },
    /// Covering graph E(n).
    Cover {
        #[arg(long)]
        n: usize,
        /// Also write a DOT rendering to this file.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Class partition of E(n).
    Components {
        #[arg(long)]
        n: usize,
    },
    /// Period of the graph.
    Period,
    /// Perron-Frobenius data of the adjacency matrix.
    Perron,
    /// Perron-Frobenius measure tower.
    PfMeasure,
    /// KMS states.
    Kms {
        #[command(subcommand)]
        command: KmsCommand,
    },
    /// Simplicity of the algebra.
    Simple {
        /// Assert that the divisor chain diverges.
        #[arg(long)]
        divergent: bool,
    },
    /// Run the verification suites.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: SuiteArg,
        #[arg(long, env = "BDLAB_SEED", default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Subcommand)]
pub enum GraphCommand {
    /// Parse and validate a graph file.
    Validate,
}

#[derive(Debug, Subcommand)]
pub enum KmsCommand {
    /// Summary of the KMS_β simplex.
    Simplex {
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
    },
    /// Extremal states at the critical temperature.
    Critical,
    /// State attached to a boundary probability measure.
    FromBoundary {
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
        #[arg(long)]
        measure: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SuiteArg {
    Algebra,
    Spectral,
    Kms,
    All,
}

/// Failure with its exit status.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable or invalid input: exit 1.
    Input(String),
    /// Valid input outside an operation's domain: exit 2.
    Precondition(String),
    /// An identity that should hold does not: exit 3.
    Internal(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Precondition(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Precondition(m) | CliError::Internal(m) => m,
        }
    }
}

impl From<bdlab::Error> for CliError {
    fn from(e: bdlab::Error) -> Self {
        match e.kind() {
            ErrorKind::Input => CliError::Input(e.to_string()),
            ErrorKind::Precondition => CliError::Precondition(e.to_string()),
            ErrorKind::Internal => CliError::Internal(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let (output, status) = match commands::run(&cli) {
        Ok(out) => out,
        Err(e) => {
            eprintln!("error: {}", e.message());
            return ExitCode::from(e.code());
        }
    };
    let text = if cli.table {
        table::render(&output)
    } else {
        format!("{}\n", serde_json::to_string_pretty(&output).expect("JSON value serialises"))
    };
    // A closed pipe is not an error of the computation.
    let _ = std::io::stdout().write_all(text.as_bytes());
    ExitCode::from(status)
}
