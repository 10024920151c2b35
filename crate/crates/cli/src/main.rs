//! `qpgate`: design quadrupole phase shifters, compile two-state gates and
//! check them with analytic and wave-optical simulations.

mod analyze;
mod decompose;
mod design;
mod documents;
mod error;
mod simulate;
mod units;

use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::{CliError, CliResult, EXIT_INPUT};

#[derive(Debug, Parser)]
#[command(name = "qpgate", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Design a two-quadrupole relative phase shifter.
    Design(design::DesignArgs),
    /// Decompose a 2×2 unitary and compile it into rotator/shifter stages.
    Decompose(decompose::DecomposeArgs),
    /// Run a schedule or design through the analytic and/or wave engine.
    Simulate(simulate::SimulateArgs),
    /// Project a field dump on first-order modes.
    Analyze(analyze::AnalyzeArgs),
}

fn configure_threads() -> CliResult<()> {
    let threads = match std::env::var("QPGATE_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Input(format!("QPGATE_THREADS must be a positive integer, got '{v}'")))?,
        // 0 lets rayon use every available core
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Input(format!("cannot start worker pool: {e}")))
}

fn run(cli: Cli) -> CliResult<(String, i32)> {
    configure_threads()?;
    match cli.command {
        Command::Design(args) => design::run(&args),
        Command::Decompose(args) => decompose::run(&args).map(|s| (s, 0)),
        Command::Simulate(args) => simulate::run(&args).map(|s| (s, 0)),
        Command::Analyze(args) => analyze::run(&args).map(|s| (s, 0)),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok((out, code)) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(out.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::from(EXIT_INPUT as u8);
            }
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
