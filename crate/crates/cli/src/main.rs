//! `pcq`: solve, validate, sweep and simulate the speed-controlled queues.

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use poisson_control_cli::{commands, CliError, Flags, Report, RunSpec};

#[derive(Parser)]
#[command(
    name = "pcq",
    version,
    about = "Markovian queues with a Poisson-timed speed controller"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stationary law, means and pgf samples
    Solve(Flags),
    /// Closed forms against the truncated-generator oracle
    Validate(Flags),
    /// E[Q] and E[S] of the capped controller over a range of nu
    Sweep(Flags),
    /// Event simulation with batch-means intervals, or one of the probes
    Simulate(Flags),
}

fn run(cli: Cli) -> Result<Report, CliError> {
    let (name, flags, f): (_, _, fn(&RunSpec) -> Result<Report, CliError>) = match &cli.command {
        Command::Solve(fl) => ("solve", fl, commands::solve),
        Command::Validate(fl) => ("validate", fl, commands::validate),
        Command::Sweep(fl) => ("sweep", fl, commands::sweep),
        Command::Simulate(fl) => ("simulate", fl, commands::simulate),
    };
    let spec = RunSpec::load(name, flags)?;
    f(&spec)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli).and_then(|rep| rep.emit()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pcq: {e}");
            e.exit_code()
        }
    }
}
