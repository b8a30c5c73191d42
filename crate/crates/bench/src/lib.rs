//! Fixed-seed instances shared by the benchmarks.

use eclqr_core::random::{lqr_with_dims, random_weighted_system};
use eclqr_core::{EcLqrProblem, WeightedSystem};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn kernel_batch(count: usize, max_cols: usize, seed: u64) -> Vec<WeightedSystem> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| random_weighted_system(&mut r, max_cols))
        .collect()
}

pub fn standard_lqr(n: usize, m: usize, horizon: usize) -> EcLqrProblem {
    lqr_with_dims(&mut rng(horizon as u64), n, m, horizon)
}
