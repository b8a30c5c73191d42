//! Random instance generators for property tests, the acceptance suite and
//! benchmarks. All take a caller-supplied RNG so runs are reproducible.

use rand::Rng;

use crate::eclqr::{CrossConstraint, CrossTerm, EcLqrProblem, LocalConstraint};
use crate::graph::VarKey;
use crate::linalg::{Mat, RowWeight, Vector, WeightedSystem};

fn uniform_mat<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Mat {
    Mat::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

fn uniform_vec<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vector {
    Vector::from_fn(len, |_, _| rng.random_range(-1.0..1.0))
}

/// `BᵀB/dim + floor·I`, eigenvalues bounded below by `floor`.
pub fn random_spd<R: Rng + ?Sized>(rng: &mut R, dim: usize, floor: f64) -> Mat {
    let b = uniform_mat(rng, dim, dim);
    b.transpose() * b / dim as f64 + Mat::identity(dim, dim) * floor
}

/// Dynamics near the identity with spectral radius around one.
pub fn random_dynamics<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize) -> (Mat, Mat) {
    let fx = Mat::identity(n, n) * 0.9 + uniform_mat(rng, n, n) * (0.3 / (n as f64).sqrt());
    let fu = uniform_mat(rng, n, m);
    (fx, fu)
}

/// Standard LQR with time-varying dynamics and costs, `n ≤ max_n`,
/// `m ≤ max_m`, `1 ≤ T ≤ max_t`.
pub fn random_lqr<R: Rng + ?Sized>(
    rng: &mut R,
    max_n: usize,
    max_m: usize,
    max_t: usize,
) -> EcLqrProblem {
    let n = rng.random_range(1..=max_n);
    let m = rng.random_range(1..=max_m);
    let horizon = rng.random_range(1..=max_t);
    lqr_with_dims(rng, n, m, horizon)
}

pub fn lqr_with_dims<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    m: usize,
    horizon: usize,
) -> EcLqrProblem {
    let mut fx = Vec::with_capacity(horizon);
    let mut fu = Vec::with_capacity(horizon);
    let mut qxx = Vec::with_capacity(horizon);
    let mut quu = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let (a, b) = random_dynamics(rng, n, m);
        fx.push(a);
        fu.push(b);
        qxx.push(random_spd(rng, n, 0.1));
        quu.push(random_spd(rng, m, 0.1));
    }
    EcLqrProblem {
        n,
        m,
        horizon,
        fx,
        fu,
        qxx,
        quu,
        qxx_final: random_spd(rng, n, 0.5),
        x0: uniform_vec(rng, n) * 2.0,
        local_constraints: Vec::new(),
        cross_constraints: Vec::new(),
    }
}

/// A dynamics-consistent trajectory: random controls rolled out from `x0`.
fn reference_trajectory<R: Rng + ?Sized>(
    rng: &mut R,
    p: &EcLqrProblem,
) -> (Vec<Vector>, Vec<Vector>) {
    let mut xs = vec![p.x0.clone()];
    let mut us = Vec::with_capacity(p.horizon);
    for t in 0..p.horizon {
        let u = uniform_vec(rng, p.m);
        xs.push(&p.fx[t] * &xs[t] + &p.fu[t] * &u);
        us.push(u);
    }
    (xs, us)
}

/// Random LQR plus up to `max_local` local and `max_cross` cross-time-step
/// constraints. Every constraint holds on a common reference trajectory, so
/// the instance is always feasible.
pub fn random_eclqr<R: Rng + ?Sized>(
    rng: &mut R,
    max_n: usize,
    max_m: usize,
    max_t: usize,
    max_local: usize,
    max_cross: usize,
) -> EcLqrProblem {
    let n = rng.random_range(1..=max_n);
    let m = rng.random_range(1..=max_m);
    let horizon = rng.random_range(2..=max_t.max(2));
    let mut p = lqr_with_dims(rng, n, m, horizon);
    let (xs, us) = reference_trajectory(rng, &p);

    for _ in 0..rng.random_range(0..=max_local) {
        let t = rng.random_range(1..=horizon);
        let rows = rng.random_range(1..=n);
        let gx = uniform_mat(rng, rows, n);
        let gu = (t < horizon && rng.random_bool(0.5)).then(|| uniform_mat(rng, rows, m));
        let mut val = &gx * &xs[t];
        if let Some(gu) = &gu {
            val += gu * &us[t];
        }
        p.local_constraints
            .push(LocalConstraint { t, gx, gu, g: -val });
    }

    for _ in 0..rng.random_range(0..=max_cross) {
        let rows = rng.random_range(1..=n);
        let t1 = rng.random_range(1..horizon);
        let t2 = rng.random_range(t1 + 1..=horizon);
        let mut terms = vec![
            CrossTerm {
                var: VarKey::state(t1),
                coeff: uniform_mat(rng, rows, n),
            },
            CrossTerm {
                var: VarKey::state(t2),
                coeff: uniform_mat(rng, rows, n),
            },
        ];
        if rng.random_bool(0.3) {
            let tu = rng.random_range(0..horizon);
            terms.push(CrossTerm {
                var: VarKey::control(tu),
                coeff: uniform_mat(rng, rows, m),
            });
        }
        let mut val = Vector::zeros(rows);
        for term in &terms {
            let z = if term.var.is_state() {
                &xs[term.var.t]
            } else {
                &us[term.var.t]
            };
            val += &term.coeff * z;
        }
        p.cross_constraints.push(CrossConstraint { terms, s: -val });
    }
    p
}

/// Random row-weighted system with at most `cols − 1` consistent hard
/// constraints and enough finite rows to make the minimizer unique.
pub fn random_weighted_system<R: Rng + ?Sized>(rng: &mut R, max_cols: usize) -> WeightedSystem {
    let cols = rng.random_range(1..=max_cols);
    let n_con = rng.random_range(0..cols);
    let n_fin = rng.random_range(cols..=cols + 4);
    let x_ref = uniform_vec(rng, cols);
    let rows = n_con + n_fin;
    let a = uniform_mat(rng, rows, cols);
    let mut b = uniform_vec(rng, rows);
    let mut weights = vec![RowWeight::Constrained; n_con];
    weights.extend((0..n_fin).map(|_| RowWeight::Finite(rng.random_range(0.1..10.0))));
    for i in 0..n_con {
        b[i] = a.row(i).dot(&x_ref.transpose());
    }
    // interleave so constrained rows are not always on top
    let mut order: Vec<usize> = (0..rows).collect();
    for i in (1..rows).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let a = a.select_rows(order.iter());
    let b = Vector::from_iterator(rows, order.iter().map(|&i| b[i]));
    let weights = order.iter().map(|&i| weights[i]).collect();
    WeightedSystem::new(a, b, weights).expect("generated system is well formed")
}
