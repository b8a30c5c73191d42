#![allow(dead_code)]

use eclqr_core::linalg::{back_solve, eliminate_block, TriangularBlock};
use eclqr_core::{Mat, Vector, WeightedSystem};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `‖a − b‖∞ / max(‖b‖∞, 1)`
pub fn rel(a: &Mat, b: &Mat) -> f64 {
    (a - b).amax() / b.amax().max(1.0)
}

pub fn rel_v(a: &Vector, b: &Vector) -> f64 {
    (a - b).amax() / b.amax().max(1.0)
}

pub fn max_diff(a: &[Vector], b: &[Vector]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).amax())
        .fold(0.0, f64::max)
}

/// Eliminate every column and back-substitute.
pub fn full_solve(sys: &WeightedSystem) -> Vector {
    let cols = sys.cols();
    let pf = eliminate_block(sys, cols).expect("well-posed system");
    let frontal: Vec<usize> = (0..cols).collect();
    let block = TriangularBlock {
        frontal: &frontal,
        separator: &[],
        rows: &pf.eliminated,
    };
    Vector::from_vec(back_solve(&[block], vec![None; cols]).unwrap())
}

/// `[A | b]ᵀ W [A | b]` over the finite rows.
pub fn augmented_gram(sys: &WeightedSystem) -> Mat {
    let (a, b) = sys.whitened_objective();
    let mut ab = Mat::zeros(a.nrows(), a.ncols() + 1);
    ab.view_mut((0, 0), a.shape()).copy_from(&a);
    ab.set_column(a.ncols(), &b);
    ab.transpose() * ab
}
