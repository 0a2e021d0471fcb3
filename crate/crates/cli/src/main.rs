//! `sepfista`: ellipsoid separation and soft-margin SVM training with
//! early-stopped FISTA.
//!
//! Exit codes: 0 on success, 1 on user error (bad flags, unreadable or
//! malformed input), 2 on solver or output failure.

mod bench_cmd;
mod error;
mod esp_cmd;
mod output;
mod svm_cmd;

use std::ffi::OsString;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "sepfista", version, about = "Early-stopped FISTA for ellipsoid separation and soft-margin SVMs")]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Ellipsoid separation: solve, sweep, diagnose, generate instances
    #[command(subcommand, arg_required_else_help = true)]
    Esp(esp_cmd::EspCommand),
    /// Soft-margin SVM: train, predict, generate data, loss curve
    #[command(subcommand, arg_required_else_help = true)]
    Svm(svm_cmd::SvmCommand),
    /// Solver comparisons
    #[command(subcommand, arg_required_else_help = true)]
    Bench(bench_cmd::BenchCommand),
}

fn run(argv: impl IntoIterator<Item = OsString>) -> Result<(), CliError> {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    Ok(())
                }
                ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => Err(CliError::Usage(e.to_string())),
                _ => Err(CliError::Usage(e.render().to_string())),
            };
        }
    };
    match cli.command {
        Command::Esp(cmd) => esp_cmd::run(cmd),
        Command::Svm(cmd) => svm_cmd::run(cmd),
        Command::Bench(cmd) => bench_cmd::run(cmd),
    }
}

fn main() -> ExitCode {
    match run(std::env::args_os()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprint!("{e}");
            if !e.to_string().ends_with('\n') {
                eprintln!();
            }
            ExitCode::from(e.exit_code())
        }
    }
}
