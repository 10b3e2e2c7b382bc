//! `abconv` — analyze convolution layers for hardware data reuse, pick group
//! factors, check the folded rewrites numerically, rewrite model
//! descriptions, and emit roofline / staircase plot data as CSV.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or parse error,
//! 3 domain error (e.g. a non-divisible group count), 4 I/O failure.

mod cmd;
mod io;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "abconv",
    version,
    about = "Hardware-aware convolution analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cost and intensity figures for one layer under one variant
    Analyze(cmd::analyze::Args),
    /// Group-factor search for one layer against a hardware profile
    Select(cmd::select::Args),
    /// Numeric equivalence check of the folded rewrites on random tensors
    Verify(cmd::verify::Args),
    /// Rewrite a model's pointwise layers under a cyclic policy
    Transform(cmd::transform::Args),
    /// Roofline points for a model or a shape sweep
    Roofline(cmd::roofline::Args),
    /// Modeled latency staircase along one channel axis
    Staircase(cmd::staircase::Args),
    /// Recover the channel step size from a latency sweep CSV
    DetectSteps(cmd::detect::Args),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(args) => cmd::analyze::run(args),
        Command::Select(args) => cmd::select::run(args),
        Command::Verify(args) => cmd::verify::run(args),
        Command::Transform(args) => cmd::transform::run(args),
        Command::Roofline(args) => cmd::roofline::run(args),
        Command::Staircase(args) => cmd::staircase::run(args),
        Command::DetectSteps(args) => cmd::detect::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.code())
        }
    }
}
