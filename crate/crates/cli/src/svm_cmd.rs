use std::path::PathBuf;

use clap::{Args, Subcommand};
use nalgebra::DMatrix;
use serde::Serialize;

use sepfista::datagen::{gen_two_ball, TwoBallModel};
use sepfista::svm::{
    accuracy, predict, psi, psi_prime, read_libsvm, read_model, theory_constants, train, write_libsvm, write_model,
    LabeledData,
};
use sepfista::{SvmDataset, SvmHyperparams};

use crate::error::{at_least_one, positive, CliError};
use crate::output::{num, write_json, CsvReport, ManifestBuilder};

#[derive(Debug, Subcommand)]
pub enum SvmCommand {
    /// Train with early stopping on the classification tracker
    Train(TrainArgs),
    /// Label a LIBSVM file with a trained model
    Predict(PredictArgs),
    /// Sample the two-ball data model
    Synth(SynthArgs),
    /// Tabulate the smoothed hinge loss and its derivative
    PsiCurve(PsiCurveArgs),
}

#[derive(Debug, Args, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct TrainArgs {
    /// Training data (LIBSVM format)
    #[arg(long)]
    data: PathBuf,
    /// Proximity bound below which a stalled certified set ends training
    #[arg(long, default_value_t = 1e-4)]
    delta_min: f64,
    #[arg(long, default_value_t = 100_000)]
    max_iter: usize,
    /// Model output (JSON)
    #[arg(long)]
    model: PathBuf,
    /// Per-iteration trace (CSV)
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Train on the raw features instead of rescaling them to unit radius
    #[arg(long)]
    no_scale: bool,
}

#[derive(Debug, Args, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct PredictArgs {
    /// Model written by `svm train`
    #[arg(long)]
    model: PathBuf,
    /// Data to label (LIBSVM format; missing trailing features count as zero)
    #[arg(long)]
    data: PathBuf,
    /// Predicted labels, one per line (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct SynthArgs {
    /// Radius of the class C ball
    #[arg(long, default_value_t = 0.75)]
    sigma1: f64,
    /// Radius of the class D ball
    #[arg(long, default_value_t = 0.75)]
    sigma2: f64,
    /// Distance of the planted points from their ball
    #[arg(long, default_value_t = 0.05)]
    rho: f64,
    /// Fraction of randomly labeled noise points
    #[arg(long, default_value_t = 0.01)]
    nu: f64,
    #[arg(long, default_value_t = 300)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output (LIBSVM format, class C rows first)
    #[arg(long)]
    out: PathBuf,
    /// Row indices of the planted points (JSON)
    #[arg(long)]
    planted: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct PsiCurveArgs {
    /// Number of points; sets gamma = 64/n and mu = n/128
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Output (CSV: theta, psi, psi_prime)
    #[arg(long)]
    out: PathBuf,
}

pub fn run(cmd: SvmCommand) -> Result<(), CliError> {
    match cmd {
        SvmCommand::Train(a) => train_cmd(a),
        SvmCommand::Predict(a) => predict_cmd(a),
        SvmCommand::Synth(a) => synth(a),
        SvmCommand::PsiCurve(a) => psi_curve(a),
    }
}

fn train_cmd(a: TrainArgs) -> Result<(), CliError> {
    let manifest = ManifestBuilder::start("svm train", &a, None);
    let data = read_libsvm(&a.data).map_err(|e| CliError::input("--data", &a.data, e))?;
    let raw = SvmDataset::from_labeled(&data).map_err(|e| CliError::input("--data", &a.data, e))?;
    let ds = if a.no_scale {
        raw
    } else {
        raw.scaled_to_unit_radius().map_err(|e| CliError::input("--data", &a.data, e))?
    };
    let run = train(&ds, positive("--delta-min", a.delta_min)?, at_least_one("--max-iter", a.max_iter)?)
        .map_err(CliError::solve)?;

    let predicted = predict(&run.model, &data.points).map_err(CliError::solve)?;
    println!("points: {} ({} class C, {} class D)", ds.n(), ds.j(), ds.l());
    println!("kappa: {}", num(run.hyperparams.kappa));
    println!("iterations: {}", run.report.iterations);
    println!("stop_reason: {:?}", run.report.stop_reason);
    println!("certified_fraction: {}", num(run.tracker.fraction()));
    println!("training_accuracy: {}", num(accuracy(&predicted, &data.labels)));

    write_model(&a.model, &run.model).map_err(|e| CliError::output(&a.model, e))?;
    let mut outputs = vec![a.model.as_path()];
    if let Some(path) = &a.trace {
        let mut csv = CsvReport::new(path, &["iteration", "projected_step_norm", "Delta", "p_properly_classified", "g_value"]);
        for r in &run.trace {
            csv.row(vec![
                r.iteration.to_string(),
                num(r.projected_step_norm),
                num(r.delta),
                num(r.p_properly_classified),
                num(r.g_value),
            ]);
        }
        csv.finish()?;
        outputs.push(path);
    }
    manifest.write_for(&outputs)
}

fn predict_cmd(a: PredictArgs) -> Result<(), CliError> {
    let manifest = ManifestBuilder::start("svm predict", &a, None);
    let model = read_model(&a.model).map_err(|e| CliError::input("--model", &a.model, e))?;
    let data = read_libsvm(&a.data).map_err(|e| CliError::input("--data", &a.data, e))?;
    let width = model.w.len();
    if data.points.ncols() > width {
        return Err(CliError::flag(
            "--data",
            format!("{} has {} features, the model has {width}", a.data.display(), data.points.ncols()),
        ));
    }
    let points = DMatrix::from_fn(data.len(), width, |r, c| if c < data.points.ncols() { data.points[(r, c)] } else { 0.0 });
    let predicted = predict(&model, &points).map_err(CliError::solve)?;
    eprintln!("accuracy: {}", num(accuracy(&predicted, &data.labels)));
    let text: String = predicted.iter().map(|&y| if y > 0 { "+1\n" } else { "-1\n" }).collect();
    match &a.out {
        Some(out) => {
            std::fs::write(out, text).map_err(|e| CliError::output(out, e))?;
            manifest.write_for(&[out])
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct PlantedRows {
    class_c: Vec<usize>,
    class_d: Vec<usize>,
}

fn synth(a: SynthArgs) -> Result<(), CliError> {
    let manifest = ManifestBuilder::start("svm synth", &a, Some(a.seed));
    let model = TwoBallModel {
        sigma1: a.sigma1,
        sigma2: a.sigma2,
        rho: a.rho,
        nu: a.nu,
        n: at_least_one("--n", a.n)?,
        dim: at_least_one("--dim", a.dim)?,
        seed: a.seed,
    };
    let (ds, planted) = gen_two_ball(&model).map_err(CliError::solve)?;
    let mut points = DMatrix::zeros(ds.n(), ds.dim());
    points.rows_mut(0, ds.j()).copy_from(&ds.c_points);
    points.rows_mut(ds.j(), ds.l()).copy_from(&ds.d_points);
    let labels = (0..ds.n()).map(|i| if i < ds.j() { 1 } else { -1 }).collect();
    write_libsvm(&a.out, &LabeledData { points, labels }).map_err(|e| CliError::output(&a.out, e))?;
    let mut outputs = vec![a.out.as_path()];
    if let Some(path) = &a.planted {
        write_json(path, &PlantedRows { class_c: planted.j.clone(), class_d: planted.l.clone() })?;
        outputs.push(path);
    }

    println!("points: {} ({} class C, {} class D), planted {} + {}", ds.n(), ds.j(), ds.l(), planted.j.len(), planted.l.len());
    let tc = theory_constants(a.sigma1, a.sigma2, a.rho, a.nu, ds.n(), None).map_err(CliError::solve)?;
    println!("K: {}", num(tc.k));
    println!("delta0: {}", num(tc.delta0));
    println!("assumption_ok: {}", tc.assumption_ok);
    println!("kbar_feasible: {} (needs Kbar > {})", tc.kbar_feasible, num(tc.kbar_lower));
    if let (Some(kbar), Some(big_delta)) = (tc.kbar, tc.big_delta) {
        println!("kbar: {}", num(kbar));
        println!("big_delta: {}", num(big_delta));
    }
    manifest.write_for(&outputs)
}

fn psi_curve(a: PsiCurveArgs) -> Result<(), CliError> {
    let manifest = ManifestBuilder::start("svm psi-curve", &a, None);
    let hp = SvmHyperparams::new(at_least_one("--n", a.n)?, 1.0);
    let mut csv = CsvReport::new(&a.out, &["theta", "psi", "psi_prime"]);
    for i in 0..=200 {
        let theta = (i as f64 - 50.0) / 100.0;
        csv.row(vec![num(theta), num(psi(theta, &hp)), num(psi_prime(theta, &hp))]);
    }
    csv.finish()?;
    manifest.write_for(&[&a.out])
}
