//! Euclidean projections onto second-order cones, products of them, and the
//! SVM dual feasible set.
//!
//! The dual set `Omega = {(u, v) : sum(u) = sum(v), 0 <= u, v <= gamma}` is
//! handled through the continuous quadratic knapsack problem
//!
//! ```text
//! min 1/2 |r - q|^2   s.t.   sum(r) = target,   lower <= r <= upper
//! ```
//!
//! whose solution is `r = clamp(q - lambda * e, lower, upper)` for the scalar
//! multiplier `lambda` at which the clamped sum meets the target. The map
//! `lambda -> sum(clamp(q - lambda e))` is nonincreasing and piecewise linear
//! with breakpoints `q_i - upper_i` and `q_i - lower_i`, so the multiplier is
//! found by a search over those breakpoints followed by one linear solve.

use std::cmp::Ordering;

use nalgebra::DVector;

use crate::error::{Error, Result};

/// A point `(head, tail)` in `R x R^d`; it belongs to the second-order cone
/// when `|tail| <= head`.
#[derive(Debug, Clone, PartialEq)]
pub struct SocPoint {
    pub head: f64,
    pub tail: DVector<f64>,
}

impl SocPoint {
    pub fn new(head: f64, tail: impl Into<DVector<f64>>) -> Self {
        Self {
            head,
            tail: tail.into(),
        }
    }

    pub fn dim(&self) -> usize {
        self.tail.len()
    }

    pub fn in_cone(&self) -> bool {
        self.tail.norm() <= self.head
    }

    fn write_to(&self, out: &mut [f64]) {
        out[0] = self.head;
        out[1..].copy_from_slice(self.tail.as_slice());
    }

    fn from_block(block: &[f64]) -> Self {
        Self {
            head: block[0],
            tail: DVector::from_column_slice(&block[1..]),
        }
    }
}

/// Projects `p` onto the second-order cone.
pub fn project_soc(p: &SocPoint) -> SocPoint {
    let mut block = vec![0.0; p.dim() + 1];
    p.write_to(&mut block);
    project_soc_block(&mut block);
    SocPoint::from_block(&block)
}

/// In-place cone projection of a flat block laid out as `[head, tail...]`.
pub fn project_soc_block(block: &mut [f64]) {
    let head = block[0];
    let tail = &mut block[1..];
    let norm = tail.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm <= head {
        return;
    }
    // The polar branch also covers the kink head = -|tail| and a zero tail.
    if norm <= -head {
        block.fill(0.0);
        return;
    }
    let alpha = 0.5 * (head + norm);
    let scale = alpha / norm;
    tail.iter_mut().for_each(|x| *x *= scale);
    block[0] = alpha;
}

/// A point of a product of equally sized second-order cones.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductConePoint {
    pub blocks: Vec<SocPoint>,
}

impl ProductConePoint {
    /// Splits a flat vector into `len / (dim + 1)` blocks of `[head, tail(dim)]`.
    pub fn from_flat(x: &[f64], dim: usize) -> Result<Self> {
        let block_len = dim + 1;
        if !x.len().is_multiple_of(block_len) {
            return Err(Error::DimensionMismatch(format!(
                "flat length {} is not a multiple of block length {block_len}",
                x.len()
            )));
        }
        Ok(Self {
            blocks: x.chunks_exact(block_len).map(SocPoint::from_block).collect(),
        })
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.blocks.iter().map(|b| b.dim() + 1).sum());
        for b in &self.blocks {
            out.push(b.head);
            out.extend_from_slice(b.tail.as_slice());
        }
        out
    }

    pub fn in_cone(&self) -> bool {
        self.blocks.iter().all(SocPoint::in_cone)
    }
}

pub fn project_product_cone(p: &ProductConePoint) -> ProductConePoint {
    ProductConePoint {
        blocks: p.blocks.iter().map(project_soc).collect(),
    }
}

/// In-place projection of a flat product-cone vector with blocks of length
/// `block_len` (head plus tail).
pub fn project_product_cone_flat(x: &mut [f64], block_len: usize) {
    debug_assert!(block_len >= 1 && x.len().is_multiple_of(block_len));
    x.chunks_exact_mut(block_len).for_each(project_soc_block);
}

/// Continuous quadratic knapsack instance.
#[derive(Debug, Clone, PartialEq)]
pub struct KnapsackProblem {
    pub q: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub target: f64,
}

impl KnapsackProblem {
    pub fn new(q: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>, target: f64) -> Result<Self> {
        if q.len() != lower.len() || q.len() != upper.len() {
            return Err(Error::DimensionMismatch(format!(
                "q, lower, upper have lengths {}, {}, {}",
                q.len(),
                lower.len(),
                upper.len()
            )));
        }
        if let Some(i) = (0..q.len()).find(|&i| !(lower[i] <= upper[i])) {
            return Err(Error::InvalidArgument(format!(
                "lower[{i}] = {} exceeds upper[{i}] = {}",
                lower[i], upper[i]
            )));
        }
        Ok(Self {
            q,
            lower,
            upper,
            target,
        })
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    /// `sum(clamp(q - lambda, lower, upper))`
    pub fn clamped_sum(&self, lambda: f64) -> f64 {
        (0..self.len()).map(|i| self.clamp_at(i, lambda)).sum()
    }

    fn clamp_at(&self, i: usize, lambda: f64) -> f64 {
        (self.q[i] - lambda).clamp(self.lower[i], self.upper[i])
    }

    /// Below this multiplier coordinate `i` sits at its upper bound.
    fn upper_breakpoint(&self, i: usize) -> f64 {
        self.q[i] - self.upper[i]
    }

    /// Above this multiplier coordinate `i` sits at its lower bound.
    fn lower_breakpoint(&self, i: usize) -> f64 {
        self.q[i] - self.lower[i]
    }

    fn breakpoints(&self) -> Vec<f64> {
        (0..self.len())
            .flat_map(|i| [self.upper_breakpoint(i), self.lower_breakpoint(i)])
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnapsackSolution {
    pub r: Vec<f64>,
    pub multiplier: f64,
}

/// Breakpoint search strategy.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum KnapsackMethod {
    /// Sort the breakpoints and binary-search them: O(n log n).
    #[default]
    Sort,
    /// Median-of-candidates selection with running aggregates of the
    /// coordinates whose status is already known: expected O(n).
    Median,
}

pub fn project_knapsack(kp: &KnapsackProblem) -> Result<KnapsackSolution> {
    project_knapsack_with(kp, KnapsackMethod::Sort)
}

pub fn project_knapsack_with(kp: &KnapsackProblem, method: KnapsackMethod) -> Result<KnapsackSolution> {
    let lower_sum: f64 = kp.lower.iter().sum();
    let upper_sum: f64 = kp.upper.iter().sum();
    if lower_sum > kp.target || upper_sum < kp.target {
        return Err(Error::InfeasibleBox {
            lower_sum,
            upper_sum,
            target: kp.target,
        });
    }

    // The optimal multipliers form the interval [a, b] with
    // a = inf{lambda : phi <= target} and b = inf{lambda : phi < target}.
    let (a, b) = match method {
        KnapsackMethod::Sort => (
            boundary_sorted(kp, Level::AtMost),
            boundary_sorted(kp, Level::Below),
        ),
        KnapsackMethod::Median => (
            boundary_median(kp, Level::AtMost),
            boundary_median(kp, Level::Below),
        ),
    };
    let multiplier = match (a.is_finite(), b.is_finite()) {
        (true, true) => 0.5 * (a + b),
        (true, false) => a,
        (false, true) => b,
        (false, false) => 0.0,
    };
    let r = (0..kp.len()).map(|i| kp.clamp_at(i, multiplier)).collect();
    Ok(KnapsackSolution { r, multiplier })
}

#[derive(Debug, Clone, Copy)]
enum Level {
    AtMost,
    Below,
}

impl Level {
    fn holds(self, value: f64, target: f64) -> bool {
        match self {
            Level::AtMost => value <= target,
            Level::Below => value < target,
        }
    }
}

/// Status of every coordinate on an open multiplier interval without
/// breakpoints: the clamped sum is `fixed_sum + free_q_sum - free_count * lambda`.
#[derive(Debug, Default, Clone, Copy)]
struct SegmentSums {
    fixed_sum: f64,
    free_q_sum: f64,
    free_count: usize,
}

impl SegmentSums {
    fn value(&self, lambda: f64) -> f64 {
        self.fixed_sum + self.free_q_sum - self.free_count as f64 * lambda
    }

    /// inf of the level set inside (lo, hi), given it fails at lo and holds at hi.
    fn boundary(&self, lo: f64, hi: f64, target: f64) -> f64 {
        if self.free_count == 0 {
            return hi;
        }
        let crossing = (self.fixed_sum + self.free_q_sum - target) / self.free_count as f64;
        crossing.clamp(lo, hi)
    }
}

fn boundary_sorted(kp: &KnapsackProblem, level: Level) -> f64 {
    let upper_sum: f64 = kp.upper.iter().sum();
    if level.holds(upper_sum, kp.target) {
        return f64::NEG_INFINITY;
    }
    let mut bps = kp.breakpoints();
    bps.sort_by(f64::total_cmp);
    bps.dedup();
    let idx = bps.partition_point(|&lambda| !level.holds(kp.clamped_sum(lambda), kp.target));
    if idx == bps.len() {
        return f64::INFINITY;
    }
    let hi = bps[idx];
    let lo = if idx == 0 { f64::NEG_INFINITY } else { bps[idx - 1] };
    let probe = if lo.is_finite() { 0.5 * (lo + hi) } else { hi - 1.0 };

    let mut sums = SegmentSums::default();
    for i in 0..kp.len() {
        let x = kp.q[i] - probe;
        if x >= kp.upper[i] {
            sums.fixed_sum += kp.upper[i];
        } else if x <= kp.lower[i] {
            sums.fixed_sum += kp.lower[i];
        } else {
            sums.free_q_sum += kp.q[i];
            sums.free_count += 1;
        }
    }
    sums.boundary(lo, hi, kp.target)
}

fn boundary_median(kp: &KnapsackProblem, level: Level) -> f64 {
    let upper_sum: f64 = kp.upper.iter().sum();
    if level.holds(upper_sum, kp.target) {
        return f64::NEG_INFINITY;
    }
    let mut candidates = kp.breakpoints();
    let mut undetermined: Vec<usize> = (0..kp.len()).collect();
    let mut sums = SegmentSums::default();
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);

    loop {
        candidates.retain(|&b| b > lo && b < hi);
        if candidates.is_empty() {
            break;
        }
        let mid = candidates.len() / 2;
        let (_, &mut m, _) = candidates.select_nth_unstable_by(mid, |a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
        let value = sums.value(m) + undetermined.iter().map(|&i| kp.clamp_at(i, m)).sum::<f64>();
        if level.holds(value, kp.target) {
            hi = m;
        } else {
            lo = m;
        }
        undetermined.retain(|&i| {
            let at_upper_until = kp.upper_breakpoint(i);
            let at_lower_from = kp.lower_breakpoint(i);
            if hi <= at_upper_until {
                sums.fixed_sum += kp.upper[i];
                false
            } else if at_lower_from <= lo {
                sums.fixed_sum += kp.lower[i];
                false
            } else if at_upper_until <= lo && hi <= at_lower_from {
                sums.free_q_sum += kp.q[i];
                sums.free_count += 1;
                false
            } else {
                true
            }
        });
    }
    debug_assert!(undetermined.is_empty());
    if hi == f64::INFINITY {
        return f64::INFINITY;
    }
    sums.boundary(lo, hi, kp.target)
}

/// Projects `(u, v)` onto `Omega = {sum(u) = sum(v), 0 <= u <= gamma, 0 <= v <= gamma}`.
///
/// # Panics
/// When `gamma` is not positive.
pub fn project_omega(u: &[f64], v: &[f64], gamma: f64) -> (Vec<f64>, Vec<f64>) {
    let mut z = Vec::with_capacity(u.len() + v.len());
    z.extend_from_slice(u);
    z.extend_from_slice(v);
    project_omega_flat(&mut z, u.len(), gamma);
    let v_part = z.split_off(u.len());
    (z, v_part)
}

/// In-place version of [`project_omega`] on the stacked vector `(u, v)`
/// where `u` occupies the first `j` entries.
pub fn project_omega_flat(z: &mut [f64], j: usize, gamma: f64) {
    assert!(gamma > 0.0, "gamma must be positive");
    let n = z.len();
    // r = (u, -v), q = (x, -y), lower = (0, -gamma), upper = (gamma, 0)
    let q: Vec<f64> = z
        .iter()
        .enumerate()
        .map(|(i, &x)| if i < j { x } else { -x })
        .collect();
    let lower = (0..n).map(|i| if i < j { 0.0 } else { -gamma }).collect();
    let upper = (0..n).map(|i| if i < j { gamma } else { 0.0 }).collect();
    let kp = KnapsackProblem {
        q,
        lower,
        upper,
        target: 0.0,
    };
    let sol = project_knapsack(&kp).expect("Omega is nonempty for gamma > 0");
    for (i, (zi, ri)) in z.iter_mut().zip(sol.r).enumerate() {
        *zi = if i < j { ri } else { -ri };
    }
}
