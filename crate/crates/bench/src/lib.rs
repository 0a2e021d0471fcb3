//! Seeded inputs shared by the solver benchmarks.

use rand::Rng;

use sepfista::datagen::{self, gen_two_ball, ClusterConfig, TwoBallModel};
use sepfista::esp::normalize_instance;
use sepfista::{EspInstance, KnapsackProblem, SvmDataset};

/// Box `[0, 1]^n` with target `n/4` and `q` uniform in `[-2, 2)`.
pub fn knapsack(n: usize, seed: u64) -> KnapsackProblem {
    let mut rng = datagen::rng(seed);
    let q = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    KnapsackProblem::new(q, vec![0.0; n], vec![1.0; n], n as f64 / 4.0).expect("valid box")
}

/// `blocks` second-order cone blocks of length `block_len`, flattened.
pub fn soc_blocks(blocks: usize, block_len: usize, seed: u64) -> Vec<f64> {
    let mut rng = datagen::rng(seed);
    (0..blocks * block_len).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn cluster_instance(per_class: usize, dim: usize, seed: u64) -> EspInstance {
    let ellipsoids = datagen::gen_cluster_ellipsoids(&ClusterConfig::balanced(per_class, dim, seed)).expect("cluster data");
    normalize_instance(ellipsoids).expect("nondegenerate instance")
}

/// Two-ball sample rescaled to unit radius.
pub fn two_ball(n: usize, seed: u64) -> SvmDataset {
    let model = TwoBallModel {
        sigma1: 0.75,
        sigma2: 0.75,
        rho: 0.05,
        nu: 0.01,
        n,
        dim: 2,
        seed,
    };
    gen_two_ball(&model).expect("valid model").0.scaled_to_unit_radius().expect("nonzero radius")
}
