//! `wcoj`: bounds, certificates, proof sequences and join execution from
//! query, constraint and CSV files. Reports go to stdout as JSON,
//! diagnostics to stderr.

mod commands;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use wcoj::Error;

#[derive(Parser, Debug)]
#[command(name = "wcoj", version, about = "Worst-case optimal joins under degree constraints")]
pub struct Cli {
    /// Omit wall-clock fields so reports are byte-identical across runs.
    #[arg(long, global = true)]
    pub deterministic: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(clap::Args, Debug)]
pub struct Inputs {
    /// Query file, e.g. `Q(A,B,C) :- R(A,B), S(B,C), T(A,C).`
    #[arg(short, long)]
    pub query: PathBuf,
    /// Constraint file (`card R 1000`, `deg W A,C -> A,C,D 50`).
    #[arg(short, long)]
    pub constraints: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compute an output-size bound.
    Bound {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, value_enum, default_value_t = BoundMethod::Polymatroid)]
        method: BoundMethod,
    },
    /// Evaluate the query over CSV files in a directory.
    Run {
        #[command(flatten)]
        inputs: Inputs,
        /// Directory holding `<relation>.csv` for every atom.
        #[arg(short, long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value_t = Algo::Backtrack)]
        algo: Algo,
        /// Variable order for backtracking, e.g. `A,B,C`.
        #[arg(long, value_delimiter = ',')]
        order: Option<Vec<String>>,
        /// Skip checking the data against the constraints.
        #[arg(long)]
        no_validate: bool,
        /// Proof sequence for `panda`; derived from the dual when absent.
        #[arg(long)]
        seq: Option<PathBuf>,
        /// `dual` or a weight put on every constraint, e.g. `1/2`.
        #[arg(long, default_value = "dual")]
        delta: String,
        /// Degree thresholds for the decomposition steps, in order.
        #[arg(long, value_delimiter = ',')]
        theta: Option<Vec<String>>,
        /// Write the output tuples here as CSV.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Replace a cyclic constraint set by an acyclic one.
    Acyclicize {
        #[command(flatten)]
        inputs: Inputs,
        /// Where to write the new constraint file.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Derive or validate a proof sequence.
    Proof {
        #[arg(value_enum)]
        action: ProofAction,
        #[command(flatten)]
        inputs: Inputs,
        /// Sequence file to validate.
        #[arg(long)]
        seq: Option<PathBuf>,
        /// `dual` or a weight put on every constraint, e.g. `1/2`.
        #[arg(long, default_value = "dual")]
        delta: String,
        /// Where to write a derived sequence.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Generate an instance as CSV files plus a manifest.
    Gen {
        #[arg(long, value_enum)]
        kind: GenKindArg,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Grid side for `grid`.
        #[arg(long)]
        m: Option<u64>,
        /// Query file for `agm-tight` and `random`.
        #[arg(long)]
        query: Option<PathBuf>,
        /// Per-relation size for `agm-tight` (a power of two).
        #[arg(long)]
        n: Option<u64>,
        /// Per-atom sizes for `random`.
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<u64>>,
        /// Domain size for `random`; defaults to max(16, 2·size^(1/arity)).
        #[arg(long)]
        domain: Option<u64>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundMethod {
    Agm,
    Modular,
    Polymatroid,
    Dual,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algo {
    Backtrack,
    HeavyLight,
    Panda,
    Bruteforce,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProofAction {
    Derive,
    Validate,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum GenKindArg {
    Grid,
    AgmTight,
    Random,
}

/// Why a command failed, with the process exit code it maps to.
#[derive(Debug)]
pub enum Failure {
    Core(Error),
    /// The command ran but its verdict is negative; the report still goes
    /// to stdout.
    Rejected { report: String, msg: String },
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Core(e) => match e {
                Error::Parse { .. } | Error::Csv { .. } | Error::HeaderMismatch { .. } => 2,
                Error::Cyclic { .. } | Error::OrderIncompatible(_) => 3,
                Error::Unbounded { .. } => 4,
                Error::DeriveIncomplete => 5,
                _ => 1,
            },
            Failure::Rejected { .. } => 1,
            Failure::Usage(_) => 2,
        }
    }
}

/// Writes a report to stdout; a closed pipe is not an error.
fn emit(report: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{report}");
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::dispatch(&cli) {
        Ok(json) => {
            emit(&json);
            ExitCode::SUCCESS
        }
        Err(f) => {
            match &f {
                Failure::Core(e @ (Error::Cyclic { .. } | Error::OrderIncompatible(_))) => {
                    eprintln!("error: {e}\nhint: run `wcoj acyclicize` to obtain an acyclic constraint set");
                }
                Failure::Core(e) => eprintln!("error: {e}"),
                Failure::Rejected { report, msg } => {
                    emit(report);
                    eprintln!("{msg}");
                }
                Failure::Usage(msg) => eprintln!("usage error: {msg}"),
            }
            ExitCode::from(f.exit_code())
        }
    }
}
