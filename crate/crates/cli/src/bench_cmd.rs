use std::path::PathBuf;

use clap::{Args, Subcommand};
use serde::Serialize;

use crate::error::CliError;
use crate::esp_cmd::{load_instance, run_mode, Mode};
use crate::output::{num, CsvReport, ManifestBuilder};

#[derive(Debug, Subcommand)]
pub enum BenchCommand {
    /// Early stop against a tolerance-based stop on one instance
    Compare(CompareArgs),
}

#[derive(Debug, Args, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct CompareArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Projected-step tolerance of the baseline run
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 100_000)]
    max_iter: usize,
    /// Output (CSV: mode, iterations, separator_found, elapsed_seconds)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report 0 elapsed seconds
    #[arg(long)]
    no_timing: bool,
}

pub fn run(cmd: BenchCommand) -> Result<(), CliError> {
    match cmd {
        BenchCommand::Compare(a) => compare(a),
    }
}

fn compare(a: CompareArgs) -> Result<(), CliError> {
    let manifest = ManifestBuilder::start("bench compare", &a, None);
    let inst = load_instance(&a.instance)?;
    let mut rows = Vec::new();
    for (name, mode) in [("early", Mode::Early), ("tol", Mode::Tol)] {
        let run = run_mode(&inst, mode, a.tol, a.max_iter)?;
        let elapsed = match (a.no_timing, run.trace.last()) {
            (false, Some(r)) => r.elapsed_seconds,
            _ => 0.0,
        };
        rows.push(vec![
            name.to_string(),
            run.report.iterations.to_string(),
            u8::from(run.outcome.separator().is_some()).to_string(),
            num(elapsed),
        ]);
    }
    println!("{:<6} {:>10} {:>16} {:>24}", "mode", "iterations", "separator_found", "elapsed_seconds");
    for r in &rows {
        println!("{:<6} {:>10} {:>16} {:>24}", r[0], r[1], r[2], r[3]);
    }
    if let Some(out) = &a.out {
        let mut csv = CsvReport::new(out, &["mode", "iterations", "separator_found", "elapsed_seconds"]);
        for r in rows {
            csv.row(r);
        }
        csv.finish()?;
        manifest.write_for(&[out])?;
    }
    Ok(())
}
