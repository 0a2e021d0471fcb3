//! Synthetic instances: the two-ball SVM data model, the two-ellipsoid
//! distance sweep, clustered ellipsoid families, and ellipsoids built from
//! grayscale images (with an IDX file reader).
//!
//! All generators are deterministic functions of their configuration and
//! seed; randomness comes from [`RNG_ALGORITHM`].

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::esp::{normalize_instance, Ellipsoid, EspInstance, Label, ShapeMatrix};
use crate::svm::SvmDataset;

/// Identifier of the pseudo-random generator, recorded in run metadata.
pub const RNG_ALGORITHM: &str = "chacha8";

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_vector(rng: &mut ChaCha8Rng, dim: usize) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Uniform sample from the ball `B(center, radius)`.
pub fn uniform_in_ball(rng: &mut ChaCha8Rng, center: &DVector<f64>, radius: f64) -> DVector<f64> {
    let dim = center.len();
    let mut dir = gaussian_vector(rng, dim);
    while dir.norm() == 0.0 {
        dir = gaussian_vector(rng, dim);
    }
    let r = radius * rng.random::<f64>().powf(1.0 / dim as f64);
    center + dir.normalize() * r
}

/// Two planted clusters `B(sigma1 e1, rho)` and `B(-sigma2 e1, rho)` plus
/// noise points in the ball enclosing both.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoBallModel {
    pub sigma1: f64,
    pub sigma2: f64,
    pub rho: f64,
    pub nu: f64,
    pub n: usize,
    pub dim: usize,
    pub seed: u64,
}

impl TwoBallModel {
    /// Point counts `(j0, l0, n_noise)`: `floor(nu n)` noise points and the
    /// rest split between the clusters, the extra one going to class C.
    pub fn counts(&self) -> Result<(usize, usize, usize)> {
        let bad = |m: String| Err(Error::InvalidDataModel(m));
        for (name, s) in [("sigma1", self.sigma1), ("sigma2", self.sigma2)] {
            if !(0.5..=1.0).contains(&s) {
                return bad(format!("{name} = {s} is outside [1/2, 1]"));
            }
        }
        if !(self.rho > 0.0 && self.rho < self.sigma1.min(self.sigma2)) {
            return bad(format!("rho = {} must lie in (0, min(sigma1, sigma2))", self.rho));
        }
        if !(self.nu >= 0.0) || self.nu > 1.0 {
            return bad(format!("nu = {} must lie in [0, 1]", self.nu));
        }
        if self.dim == 0 {
            return bad("dim must be positive".into());
        }
        let n_noise = (self.nu * self.n as f64).floor() as usize;
        let planted = self.n - n_noise;
        let j0 = planted.div_ceil(2);
        let l0 = planted - j0;
        if 3 * j0 < self.n || 3 * l0 < self.n {
            return bad(format!(
                "clusters of {j0} and {l0} points are below n/3 for n = {}",
                self.n
            ));
        }
        Ok((j0, l0, n_noise))
    }

    /// `max(sigma1, sigma2) + rho`, a bound on every point norm.
    pub fn radius(&self) -> f64 {
        self.sigma1.max(self.sigma2) + self.rho
    }
}

/// Ground truth of a two-ball sample: planted rows of the class-C and class-D
/// matrices. Planted points come first in each matrix, noise points after.
#[derive(Debug, Clone, PartialEq)]
pub struct Planted {
    pub j: Vec<usize>,
    pub l: Vec<usize>,
}

pub fn gen_two_ball(model: &TwoBallModel) -> Result<(SvmDataset, Planted)> {
    let (j0, l0, n_noise) = model.counts()?;
    let mut rng = rng(model.seed);
    let e1 = |s: f64| {
        let mut v = DVector::zeros(model.dim);
        v[0] = s;
        v
    };
    let mut c_rows: Vec<DVector<f64>> = (0..j0).map(|_| uniform_in_ball(&mut rng, &e1(model.sigma1), model.rho)).collect();
    let mut d_rows: Vec<DVector<f64>> = (0..l0).map(|_| uniform_in_ball(&mut rng, &e1(-model.sigma2), model.rho)).collect();
    let noise_center = e1(0.5 * (model.sigma1 - model.sigma2));
    let noise_radius = 0.5 * (model.sigma1 + model.sigma2) + model.rho;
    for _ in 0..n_noise {
        let p = uniform_in_ball(&mut rng, &noise_center, noise_radius);
        if rng.random::<bool>() {
            c_rows.push(p);
        } else {
            d_rows.push(p);
        }
    }
    let to_matrix = |rows: &[DVector<f64>]| DMatrix::from_fn(rows.len(), model.dim, |r, c| rows[r][c]);
    let ds = SvmDataset::new(to_matrix(&c_rows), to_matrix(&d_rows))?;
    Ok((
        ds,
        Planted {
            j: (0..j0).collect(),
            l: (0..l0).collect(),
        },
    ))
}

/// Two-ellipsoid distance sweep in the plane: shapes `omega Q Q^T + eps I`
/// drawn once from the seed, centers `(-d, 0)` (class C) and `(d, 0)` (class D).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    pub omega: f64,
    pub eps: f64,
    pub d_values: Vec<f64>,
    pub seed: u64,
}

impl SweepConfig {
    /// Defaults `omega = 0.1`, `eps = 1e-3`, `d = 0.01, 0.02, ..., 1.0`.
    pub fn new(seed: u64) -> Self {
        Self {
            omega: 0.1,
            eps: 1e-3,
            d_values: distance_grid(0.01, 1.0, 0.01),
            seed,
        }
    }

    /// The two shape matrices of the sweep.
    pub fn shapes(&self) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        if !(self.omega > 0.0 && self.eps > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "omega = {} and eps = {} must be positive",
                self.omega, self.eps
            )));
        }
        let mut rng = rng(self.seed);
        let mut draw = || {
            let q = DMatrix::from_fn(2, 2, |_, _| rng.sample::<f64, _>(StandardNormal));
            &q * q.transpose() * self.omega + DMatrix::identity(2, 2) * self.eps
        };
        let a0 = draw();
        let a1 = draw();
        Ok((a0, a1))
    }

    pub fn ellipsoids(&self, d: f64) -> Result<Vec<Ellipsoid>> {
        if !(d > 0.0) {
            return Err(Error::InvalidArgument(format!("distance must be positive, got {d}")));
        }
        let (a0, a1) = self.shapes()?;
        Ok(vec![
            Ellipsoid::dense(&[-d, 0.0], a0, Label::ClassC)?,
            Ellipsoid::dense(&[d, 0.0], a1, Label::ClassD)?,
        ])
    }
}

/// `d_min, d_min + step, ...` up to `d_max` (inclusive within half a step).
pub fn distance_grid(d_min: f64, d_max: f64, step: f64) -> Vec<f64> {
    if !(step > 0.0) || d_max < d_min {
        return Vec::new();
    }
    let count = ((d_max - d_min) / step + 0.5).floor() as usize + 1;
    (0..count).map(|i| d_min + i as f64 * step).collect()
}

/// Normalized sweep instance at distance `d`.
pub fn gen_sweep_instance(cfg: &SweepConfig, d: f64) -> Result<EspInstance> {
    normalize_instance(cfg.ellipsoids(d)?)
}

/// Families of ellipsoids around two centers `-/+ separation e1`, with
/// centers jittered by `jitter` times a standard Gaussian and shapes
/// `omega Q Q^T / dim + eps I`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClusterConfig {
    pub per_class_c: usize,
    pub per_class_d: usize,
    pub dim: usize,
    pub separation: f64,
    pub jitter: f64,
    pub omega: f64,
    pub eps: f64,
    pub seed: u64,
}

impl ClusterConfig {
    pub fn balanced(per_class: usize, dim: usize, seed: u64) -> Self {
        Self {
            per_class_c: per_class,
            per_class_d: per_class,
            dim,
            separation: 1.0,
            jitter: 0.1,
            omega: 0.05,
            eps: 1e-3,
            seed,
        }
    }
}

pub fn gen_cluster_ellipsoids(cfg: &ClusterConfig) -> Result<Vec<Ellipsoid>> {
    let mut rng = rng(cfg.seed);
    let mut out = Vec::with_capacity(cfg.per_class_c + cfg.per_class_d);
    for (count, sign, label) in [(cfg.per_class_c, -1.0, Label::ClassC), (cfg.per_class_d, 1.0, Label::ClassD)] {
        for _ in 0..count {
            let mut center = gaussian_vector(&mut rng, cfg.dim) * cfg.jitter;
            center[0] += sign * cfg.separation;
            let q = DMatrix::from_fn(cfg.dim, cfg.dim, |_, _| rng.sample::<f64, _>(StandardNormal));
            let shape = &q * q.transpose() * (cfg.omega / cfg.dim as f64) + DMatrix::identity(cfg.dim, cfg.dim) * cfg.eps;
            out.push(Ellipsoid::new(center, ShapeMatrix::Dense(shape), label)?);
        }
    }
    Ok(out)
}

pub const IMAGE_PIXELS: usize = 784;

/// Ellipsoid centered at the image scaled to `[0, 1]`, with diagonal shape
/// `eps + alpha (1 - theta)` where `theta = |2x - 1|` is the confidence that a
/// pixel is black or white (defaults `eps = 1e-10`, `alpha = 1/2`).
pub fn image_to_ellipsoid(pixels: &[f64], eps: f64, alpha: f64, label: Label) -> Result<Ellipsoid> {
    if pixels.len() != IMAGE_PIXELS {
        return Err(Error::BadImage(format!("expected {IMAGE_PIXELS} pixels, got {}", pixels.len())));
    }
    if let Some((i, p)) = pixels.iter().enumerate().find(|(_, p)| !(0.0..=255.0).contains(*p)) {
        return Err(Error::BadImage(format!("pixel {i} = {p} is outside [0, 255]")));
    }
    if !(eps > 0.0 && alpha >= 0.0) {
        return Err(Error::InvalidArgument(format!("need eps > 0 and alpha >= 0, got {eps}, {alpha}")));
    }
    let center = DVector::from_iterator(IMAGE_PIXELS, pixels.iter().map(|p| p / 255.0));
    let diag = center.map(|x| eps + alpha * (1.0 - (2.0 * x - 1.0).abs()));
    Ellipsoid::new(center, ShapeMatrix::Diagonal(diag), label)
}

fn read_be_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_be_bytes(bytes[at..at + 4].try_into().expect("four bytes"))
}

/// Images of an IDX file (magic `0x00000803`), one flattened row each.
pub fn read_idx_images(path: &Path) -> Result<Vec<Vec<u8>>> {
    let bytes = fs::read(path)?;
    parse_idx_images(&bytes).map_err(|m| Error::BadImage(format!("{}: {m}", path.display())))
}

fn parse_idx_images(bytes: &[u8]) -> std::result::Result<Vec<Vec<u8>>, String> {
    if bytes.len() < 16 {
        return Err("file is shorter than the IDX header".into());
    }
    let magic = read_be_u32(bytes, 0);
    if magic != 0x0000_0803 {
        return Err(format!("magic {magic:#010x} is not an image file"));
    }
    let count = read_be_u32(bytes, 4) as usize;
    let size = read_be_u32(bytes, 8) as usize * read_be_u32(bytes, 12) as usize;
    let body = &bytes[16..];
    if size == 0 || body.len() != count * size {
        return Err(format!("expected {count} images of {size} bytes, found {} bytes", body.len()));
    }
    Ok(body.chunks_exact(size).map(<[u8]>::to_vec).collect())
}

/// Labels of an IDX file (magic `0x00000801`).
pub fn read_idx_labels(path: &Path) -> Result<Vec<u8>> {
    let bytes = fs::read(path)?;
    parse_idx_labels(&bytes).map_err(|m| Error::BadImage(format!("{}: {m}", path.display())))
}

fn parse_idx_labels(bytes: &[u8]) -> std::result::Result<Vec<u8>, String> {
    if bytes.len() < 8 {
        return Err("file is shorter than the IDX header".into());
    }
    let magic = read_be_u32(bytes, 0);
    if magic != 0x0000_0801 {
        return Err(format!("magic {magic:#010x} is not a label file"));
    }
    let count = read_be_u32(bytes, 4) as usize;
    if bytes.len() - 8 != count {
        return Err(format!("expected {count} labels, found {}", bytes.len() - 8));
    }
    Ok(bytes[8..].to_vec())
}

/// Ellipsoids for `n_c` random images of `digit_c` (class C) and `n_d` of
/// `digit_d` (class D), sampled without replacement.
pub fn digit_ellipsoids(
    images: &[Vec<u8>],
    labels: &[u8],
    (digit_c, n_c): (u8, usize),
    (digit_d, n_d): (u8, usize),
    seed: u64,
) -> Result<Vec<Ellipsoid>> {
    if images.len() != labels.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} images but {} labels",
            images.len(),
            labels.len()
        )));
    }
    let mut rng = rng(seed);
    let mut out = Vec::with_capacity(n_c + n_d);
    for (digit, count, label) in [(digit_c, n_c, Label::ClassC), (digit_d, n_d, Label::ClassD)] {
        let pool: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == digit).collect();
        if pool.len() < count {
            return Err(Error::InvalidArgument(format!(
                "asked for {count} images of digit {digit}, only {} available",
                pool.len()
            )));
        }
        for &i in pool.choose_multiple(&mut rng, count) {
            let pixels: Vec<f64> = images[i].iter().map(|&b| f64::from(b)).collect();
            out.push(image_to_ellipsoid(&pixels, 1e-10, 0.5, label)?);
        }
    }
    Ok(out)
}

/// Seeded shuffle of `0..n` split into `(train, test)` with
/// `round(test_fraction * n)` test indices.
pub fn shuffle_split(n: usize, test_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng(seed));
    let n_test = ((test_fraction.clamp(0.0, 1.0) * n as f64).round() as usize).min(n);
    let test = idx.split_off(n - n_test);
    (idx, test)
}
