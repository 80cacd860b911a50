//! `blkit`: Brascamp-Lieb constants, hypercontractivity and Gaussian rate regions
//! from problem files.

mod dispatch;
mod problem;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl From<blkit_core::Error> for CliError {
    fn from(e: blkit_core::Error) -> Self {
        CliError::Invalid(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Best constants and optimizations.
    Solve,
    /// Duality and slack checks.
    Verify,
    /// Region membership.
    Member,
    /// Region boundary samples written as CSV.
    Trace,
    /// Structural property suites.
    Check,
    /// Brute-force paths only.
    Oracle,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Verify => "verify",
            Command::Member => "member",
            Command::Trace => "trace",
            Command::Check => "check",
            Command::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "blkit", version, about = "Brascamp-Lieb constants and their entropic duals")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Problem file (JSON).
    input: PathBuf,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Flags {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Grid spacing for brute-force and certified paths.
    #[arg(long)]
    pub grid: Option<f64>,
    /// Exit with status 3 when a solver does not converge.
    #[arg(long)]
    pub strict: bool,
    /// Display information quantities in bits.
    #[arg(long)]
    pub bits: bool,
    /// CSV destination for `trace`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;

fn execute(cli: &Cli) -> Result<u8, CliError> {
    let bytes = std::fs::read(&cli.input)?;
    let digest = format!("{:x}", Sha256::digest(&bytes));
    let text = String::from_utf8(bytes).map_err(|e| CliError::Invalid(e.to_string()))?;
    let file = problem::ProblemFile::parse(&text)?;
    let flags = &cli.flags;
    if flags.tol.is_some_and(|t| !(t > 0.0 && t.is_finite())) {
        return Err(CliError::Invalid("--tol must be positive".into()));
    }
    if flags.grid.is_some_and(|g| !(g > 0.0 && g <= 1.0)) {
        return Err(CliError::Invalid("--grid must lie in (0, 1]".into()));
    }
    if cli.command == Command::Trace && flags.out.is_none() {
        return Err(CliError::Invalid("`trace` needs --out".into()));
    }
    let outcome = dispatch::run(cli.command, &file, flags)?;
    if let (Some((header, rows)), Some(path)) = (&outcome.table, &flags.out) {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
    }
    let report = outcome
        .report
        .finish(file.kind.name(), cli.command.name(), flags.bits, flags.seed, digest);
    let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Invalid(e.to_string()))?;
    println!("{text}");
    Ok(if report.passed == Some(false) {
        EXIT_CHECK_FAILED
    } else if flags.strict && !report.converged {
        EXIT_NOT_CONVERGED
    } else {
        0
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("blkit: {e}");
            ExitCode::from(EXIT_INVALID)
        }
    }
}
