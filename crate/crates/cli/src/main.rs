use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;

/// Exit codes: 0 success or positive verdict, 1 negative verdict,
/// 2 usage/config error, 3 numerical-invariant violation.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical invariant violated: {m}"),
        }
    }
}

impl From<mleqc::Error> for CliError {
    fn from(e: mleqc::Error) -> Self {
        match e {
            mleqc::Error::UnitarityDefect { .. } => CliError::Numerical(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

/// Positive or negative answer from a predicate command.
pub enum Verdict {
    Yes,
    No,
}

#[derive(Parser)]
#[command(name = "mleqc", version, about = "Multilevel-encoded qubit gates: optimize, evaluate, compare, study decoherence")]
struct Cli {
    /// Worker threads (default: MLEQC_THREADS, else all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the GA for a target gate and write record.json, field.json and manifest.json.
    Optimize(commands::OptimizeArgs),
    /// Fidelity of a unitary (matrix file or optimization record).
    Evaluate(commands::EvaluateArgs),
    /// Equivalence of two unitaries or two density matrices. Exit 0 if equivalent, 1 if not.
    Equiv(commands::EquivArgs),
    /// Sample class members or test membership.
    Gate {
        #[command(subcommand)]
        action: commands::GateAction,
    },
    /// Errors of an MLE and an SLE gate on thermal initial states across temperatures.
    Sweep(commands::SweepArgs),
    /// Average error of an MLE gate on random pure versus dephased states.
    Dephase(commands::DephaseArgs),
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    if let Some(n) = flag {
        return Ok(Some(n));
    }
    match std::env::var("MLEQC_THREADS") {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("MLEQC_THREADS must be a positive integer, got '{v}'"))),
        _ => Ok(None),
    }
}

fn run(cli: Cli) -> Result<Verdict, CliError> {
    if let Some(n) = thread_count(cli.threads)? {
        if n == 0 {
            return Err(CliError::Usage("thread count must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot configure thread pool: {e}")))?;
    }
    match cli.command {
        Command::Optimize(a) => commands::optimize(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Equiv(a) => commands::equiv(a),
        Command::Gate { action } => commands::gate(action),
        Command::Sweep(a) => commands::sweep(a),
        Command::Dephase(a) => commands::dephase(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(2),
            };
        }
    };
    match run(cli) {
        Ok(Verdict::Yes) => ExitCode::SUCCESS,
        Ok(Verdict::No) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}
