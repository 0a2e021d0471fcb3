use std::path::{Path, PathBuf};

use clap::{Args, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use sepfista::datagen::{self, ClusterConfig, SweepConfig};
use sepfista::esp::{
    delta_estimate, iteration_bound, normalize_instance, read_instance, reference_solution, separation_radius,
    solve_esp, write_instance, EspMode, EspOutcome, EspRun,
};
use sepfista::pdhg::displacement_estimate;
use sepfista::EspInstance;

use crate::error::{at_least_one, positive, CliError};
use crate::output::{num, write_json, CsvReport, ManifestBuilder};

/// Environment variable with the number of sweep worker threads (default: all cores).
pub const THREADS_ENV: &str = "SEPFISTA_THREADS";

#[derive(Debug, Subcommand)]
pub enum EspCommand {
    /// Run FISTA on an instance file and report the separator
    Solve(SolveArgs),
    /// Two-ellipsoid distance sweep in the plane
    Sweep(SweepArgs),
    /// Estimate the limiting displacement with PDHG and compare with FISTA
    Diagnose(DiagnoseArgs),
    /// Write a clustered synthetic instance
    Synth(SynthArgs),
    /// Build an instance from MNIST-format IDX files
    Mnist(MnistArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Stop at the first iterate whose hyperplane separates
    Early,
    /// Stop when the projected step is at most --tol
    Tol,
}

#[derive(Debug, Args, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct SolveArgs {
    /// Instance file (JSON)
    #[arg(long)]
    instance: PathBuf,
    /// Stopping rule
    #[arg(long, value_enum, default_value_t = Mode::Early)]
    mode: Mode,
    /// Projected-step tolerance for --mode tol
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 100_000)]
    max_iter: usize,
    /// Per-iteration report (CSV)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Separator output (JSON, coordinates of the input file)
    #[arg(long)]
    model: Option<PathBuf>,
    /// Write 0 in the elapsed_seconds column so reports are byte-identical across runs
    #[arg(long)]
    no_timing: bool,
}

#[derive(Debug, Args, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 0.01)]
    d_min: f64,
    #[arg(long, default_value_t = 1.0)]
    d_max: f64,
    #[arg(long, default_value_t = 0.01)]
    d_step: f64,
    /// Seed for the two shape matrices
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Shape scale: A = omega Q Q^T + eps I
    #[arg(long, default_value_t = 0.1)]
    omega: f64,
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,
    /// Early-stop iteration budget per distance
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
    /// Output (CSV: d, separator_found, iterations, residual_norm, normalization_factor)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct DiagnoseArgs {
    #[arg(long)]
    instance: PathBuf,
    /// PDHG iterations
    #[arg(long, default_value_t = 10_000)]
    iters: usize,
    /// Iteration cap of the FISTA reference solve
    #[arg(long, default_value_t = 100_000)]
    reference_iters: usize,
    /// Projected-step tolerance of the FISTA reference solve
    #[arg(long, default_value_t = 1e-10)]
    reference_tol: f64,
    /// Also write the diagnostics as JSON
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct SynthArgs {
    /// Ellipsoids of class C
    #[arg(long, default_value_t = 10)]
    per_class: usize,
    /// Ellipsoids of class D (default: same as --per-class)
    #[arg(long)]
    per_class_d: Option<usize>,
    #[arg(long, default_value_t = 20)]
    dim: usize,
    /// Cluster centers sit at -/+ separation e1
    #[arg(long, default_value_t = 1.0)]
    separation: f64,
    /// Standard deviation of the center jitter
    #[arg(long, default_value_t = 0.1)]
    jitter: f64,
    /// Shapes are omega Q Q^T / dim + eps I
    #[arg(long, default_value_t = 0.05)]
    omega: f64,
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output instance (JSON)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct MnistArgs {
    /// IDX image file (magic 0x00000803)
    #[arg(long)]
    images: PathBuf,
    /// IDX label file (magic 0x00000801)
    #[arg(long)]
    labels: PathBuf,
    /// Images per class (class D count defaults to the same)
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long)]
    n_d: Option<usize>,
    #[arg(long, default_value_t = 0)]
    digit_c: u8,
    #[arg(long, default_value_t = 1)]
    digit_d: u8,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

pub fn run(cmd: EspCommand) -> Result<(), CliError> {
    match cmd {
        EspCommand::Solve(a) => solve(a),
        EspCommand::Sweep(a) => sweep(a),
        EspCommand::Diagnose(a) => diagnose(a),
        EspCommand::Synth(a) => synth(a),
        EspCommand::Mnist(a) => mnist(a),
    }
}

pub fn load_instance(path: &Path) -> Result<EspInstance, CliError> {
    let ellipsoids = read_instance(path).map_err(|e| CliError::input("--instance", path, e))?;
    normalize_instance(ellipsoids).map_err(|e| CliError::input("--instance", path, e))
}

pub fn run_mode(inst: &EspInstance, mode: Mode, tol: f64, max_iter: usize) -> Result<EspRun, CliError> {
    let mode = match mode {
        Mode::Early => EspMode::EarlyStop,
        Mode::Tol => EspMode::Tolerance(positive("--tol", tol)?),
    };
    solve_esp(inst, mode, at_least_one("--max-iter", max_iter)?).map_err(CliError::solve)
}

fn solve(a: SolveArgs) -> Result<(), CliError> {
    let manifest = ManifestBuilder::start("esp solve", &a, None);
    let inst = load_instance(&a.instance)?;
    let run = run_mode(&inst, a.mode, a.tol, a.max_iter)?;

    println!("iterations: {}", run.report.iterations);
    println!("stop_reason: {:?}", run.report.stop_reason);
    println!("residual_norm: {}", num(run.residual.norm));
    match &run.outcome {
        EspOutcome::Separator(m) => {
            let m = m.denormalized(inst.normalization_factor);
            println!("separator: found at iteration {} ({:?})", m.found_at_iteration, m.orientation);
            println!("w: [{}]", m.w.iter().map(|&x| num(x)).collect::<Vec<_>>().join(", "));
            println!("offset: {}", num(m.offset));
        }
        EspOutcome::NoSeparatorFound => println!("separator: none"),
    }

    let mut outputs: Vec<&Path> = Vec::new();
    if let Some(out) = &a.out {
        let mut csv = CsvReport::new(out, &["iteration", "f_value", "residual_norm", "separator_found", "elapsed_seconds"]);
        for r in &run.trace {
            let elapsed = if a.no_timing { 0.0 } else { r.elapsed_seconds };
            csv.row(vec![
                r.iteration.to_string(),
                num(r.f_value),
                num(r.residual_norm),
                u8::from(r.separator_found).to_string(),
                num(elapsed),
            ]);
        }
        csv.finish()?;
        outputs.push(out);
    }
    if let Some(path) = &a.model {
        match run.outcome.separator() {
            Some(m) => {
                write_json(path, &m.denormalized(inst.normalization_factor))?;
                outputs.push(path);
            }
            None => eprintln!("warning: no separator found, --model {} not written", path.display()),
        }
    }
    manifest.write_for(&outputs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub d: f64,
    pub found: bool,
    pub iterations: usize,
    pub residual_norm: f64,
    pub normalization_factor: f64,
}

fn thread_count() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .parse::<usize>()
            .ok()
            .filter(|&n| n >= 1)
            .map(Some)
            .ok_or_else(|| CliError::User(format!("error: {THREADS_ENV}={v} is not a positive integer"))),
        Err(_) => Ok(None),
    }
}

pub fn sweep_rows(cfg: &SweepConfig, max_iter: usize) -> Result<Vec<SweepRow>, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count()?.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Solver(format!("cannot start worker threads: {e}")))?;
    // collect keeps d-order regardless of completion order
    pool.install(|| {
        cfg.d_values
            .par_iter()
            .map(|&d| {
                let inst = datagen::gen_sweep_instance(cfg, d).map_err(CliError::solve)?;
                let run = solve_esp(&inst, EspMode::EarlyStop, max_iter).map_err(CliError::solve)?;
                Ok(SweepRow {
                    d,
                    found: run.outcome.separator().is_some(),
                    iterations: run.report.iterations,
                    residual_norm: run.residual.norm,
                    normalization_factor: inst.normalization_factor,
                })
            })
            .collect()
    })
}

fn sweep(a: SweepArgs) -> Result<(), CliError> {
    let manifest = ManifestBuilder::start("esp sweep", &a, Some(a.seed));
    positive("--d-min", a.d_min)?;
    positive("--d-step", a.d_step)?;
    if a.d_max < a.d_min {
        return Err(CliError::flag("--d-max", format!("{} is below --d-min {}", a.d_max, a.d_min)));
    }
    let cfg = SweepConfig {
        omega: positive("--omega", a.omega)?,
        eps: positive("--eps", a.eps)?,
        d_values: datagen::distance_grid(a.d_min, a.d_max, a.d_step),
        seed: a.seed,
    };
    let rows = sweep_rows(&cfg, at_least_one("--max-iter", a.max_iter)?)?;
    let mut csv = CsvReport::new(&a.out, &["d", "separator_found", "iterations", "residual_norm", "normalization_factor"]);
    for r in &rows {
        csv.row(vec![
            num(r.d),
            u8::from(r.found).to_string(),
            r.iterations.to_string(),
            num(r.residual_norm),
            num(r.normalization_factor),
        ]);
    }
    csv.finish()?;
    let solvable = rows.iter().filter(|r| r.found).count();
    match rows.iter().find(|r| r.found) {
        Some(first) => println!("{solvable} of {} distances separated; first at d = {}", rows.len(), first.d),
        None => println!("0 of {} distances separated", rows.len()),
    }
    manifest.write_for(&[&a.out])
}

#[derive(Debug, Serialize)]
struct Diagnostics {
    pdhg_iterations: usize,
    v_r_norm: f64,
    v_d: Vec<f64>,
    v_d_norm: f64,
    /// `|s + t - |v_D|^2|` for the PDHG estimate
    splust_gap: f64,
    reference_iterations: usize,
    reference_v_d: Vec<f64>,
    reference_splust_gap: f64,
    pdhg_reference_distance: f64,
    delta_estimate: f64,
    separation_radius: f64,
    iteration_bound: Option<f64>,
}

fn diagnose(a: DiagnoseArgs) -> Result<(), CliError> {
    let manifest = ManifestBuilder::start("esp diagnose", &a, None);
    let inst = load_instance(&a.instance)?;
    let iters = at_least_one("--iters", a.iters)?;
    let (v_r, v_d) = displacement_estimate(&inst, iters);
    let reference = reference_solution(
        &inst,
        at_least_one("--reference-iters", a.reference_iters)?,
        positive("--reference-tol", a.reference_tol)?,
    )
    .map_err(CliError::solve)?;
    let ref_vd = reference.residual.to_vector();
    let delta = delta_estimate(&reference.residual);
    let diag = Diagnostics {
        pdhg_iterations: iters,
        v_r_norm: v_r.norm(),
        v_d: v_d.as_slice().to_vec(),
        v_d_norm: v_d.norm(),
        splust_gap: (v_d[0] + v_d[1] - v_d.norm_squared()).abs(),
        reference_iterations: reference.iterations,
        reference_v_d: ref_vd.as_slice().to_vec(),
        reference_splust_gap: (reference.residual.s + reference.residual.t - ref_vd.norm_squared()).abs(),
        pdhg_reference_distance: (&v_d - &ref_vd).norm(),
        delta_estimate: delta,
        separation_radius: separation_radius(ref_vd.norm()),
        iteration_bound: (delta > 0.0).then(|| iteration_bound(inst.operator_norm(), reference.x.norm(), delta)),
    };
    let vec = |v: &[f64]| v.iter().map(|&x| num(x)).collect::<Vec<_>>().join(", ");
    println!("pdhg_iterations: {}", diag.pdhg_iterations);
    println!("v_R_norm: {}", num(diag.v_r_norm));
    println!("v_D: [{}]", vec(&diag.v_d));
    println!("v_D_norm: {}", num(diag.v_d_norm));
    println!("splust_gap: {}", num(diag.splust_gap));
    println!("reference_v_D: [{}]", vec(&diag.reference_v_d));
    println!("reference_splust_gap: {}", num(diag.reference_splust_gap));
    println!("pdhg_reference_distance: {}", num(diag.pdhg_reference_distance));
    println!("delta_estimate: {}", num(diag.delta_estimate));
    println!("separation_radius: {}", num(diag.separation_radius));
    match diag.iteration_bound {
        Some(b) => println!("iteration_bound: {}", num(b)),
        None => println!("iteration_bound: none (not separable)"),
    }
    if let Some(out) = &a.out {
        write_json(out, &diag)?;
        manifest.write_for(&[out])?;
    }
    Ok(())
}

fn synth(a: SynthArgs) -> Result<(), CliError> {
    let manifest = ManifestBuilder::start("esp synth", &a, Some(a.seed));
    let cfg = ClusterConfig {
        per_class_c: at_least_one("--per-class", a.per_class)?,
        per_class_d: at_least_one("--per-class-d", a.per_class_d.unwrap_or(a.per_class))?,
        dim: at_least_one("--dim", a.dim)?,
        separation: a.separation,
        jitter: a.jitter,
        omega: positive("--omega", a.omega)?,
        eps: positive("--eps", a.eps)?,
        seed: a.seed,
    };
    let ellipsoids = datagen::gen_cluster_ellipsoids(&cfg).map_err(CliError::solve)?;
    write_instance(&a.out, &ellipsoids).map_err(|e| CliError::output(&a.out, e))?;
    println!("wrote {} ellipsoids in R^{} to {}", ellipsoids.len(), cfg.dim, a.out.display());
    manifest.write_for(&[&a.out])
}

fn mnist(a: MnistArgs) -> Result<(), CliError> {
    let manifest = ManifestBuilder::start("esp mnist", &a, Some(a.seed));
    let images = datagen::read_idx_images(&a.images).map_err(|e| CliError::input("--images", &a.images, e))?;
    let labels = datagen::read_idx_labels(&a.labels).map_err(|e| CliError::input("--labels", &a.labels, e))?;
    let n_c = at_least_one("--n", a.n)?;
    let n_d = at_least_one("--n-d", a.n_d.unwrap_or(a.n))?;
    let ellipsoids =
        datagen::digit_ellipsoids(&images, &labels, (a.digit_c, n_c), (a.digit_d, n_d), a.seed).map_err(CliError::solve)?;
    write_instance(&a.out, &ellipsoids).map_err(|e| CliError::output(&a.out, e))?;
    println!("wrote {} image ellipsoids to {}", ellipsoids.len(), a.out.display());
    manifest.write_for(&[&a.out])
}
