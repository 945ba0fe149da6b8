//! `fixpoint`: run traces, verify properties, compile programs, solve
//! parameters, compute slope intervals and build reductions.

mod commands;
mod error;
mod run;

use clap::{Args, Parser, Subcommand};
use error::CliError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "fixpoint", version, about = "Reversible partition automata toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Runs a manifest and writes its trace.
    Run { manifest: PathBuf },
    /// Runs a verification suite and prints one NDJSON record per check.
    Verify(commands::VerifyArgs),
    /// Solves parameter inequalities.
    #[command(subcommand)]
    Solve(commands::SolveCmd),
    /// Compiles a program to a pair of Turing machines.
    Compile(commands::CompileArgs),
    /// Slope intervals of directive words.
    #[command(subcommand)]
    Directions(commands::DirectionsCmd),
    /// Builds permutation sequences from machines.
    #[command(subcommand)]
    Reduce(commands::ReduceCmd),
}

/// Output file; standard output when absent.
#[derive(Debug, Clone, Args)]
pub struct OutArg {
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return CliError::usage(e.to_string().trim_end()).report(),
    };
    let result = match &cli.command {
        Command::Run { manifest } => run::cmd_run(manifest),
        Command::Verify(a) => commands::verify(a),
        Command::Solve(c) => commands::solve(c),
        Command::Compile(a) => commands::compile(a),
        Command::Directions(c) => commands::directions(c),
        Command::Reduce(c) => commands::reduce(c),
    };
    match result {
        Ok(o) => o.exit_code(),
        Err(e) => e.report(),
    }
}
