//! Named problem instances: the three experiments plus a scalar toy and the
//! periodic instance used for the operation-count scaling check.

use crate::eclqr::{CrossConstraint, CrossTerm, EcLqrProblem, LocalConstraint};
use crate::graph::VarKey;
use crate::linalg::{Mat, Vector};

fn state_pin(t: usize, target: &[f64]) -> LocalConstraint {
    let n = target.len();
    LocalConstraint {
        t,
        gx: Mat::identity(n, n),
        gu: None,
        g: -Vector::from_column_slice(target),
    }
}

/// Three decoupled integrators with mild growth, pinned at the start, the
/// midpoint and the end: `x_0 = 0`, `x_50 = [1, 2, 3]`, `x_100 = [3, 2, 1]`.
pub fn problem7() -> EcLqrProblem {
    let mut p = problem7_base();
    p.local_constraints.push(state_pin(50, &[1.0, 2.0, 3.0]));
    p.local_constraints.push(state_pin(100, &[3.0, 2.0, 1.0]));
    p
}

/// [`problem7`] with the midpoint pin replaced by the mixed constraint
/// `x_50 + u_50 + [1, 2, 3] = 0`.
pub fn problem7b() -> EcLqrProblem {
    let mut p = problem7_base();
    p.local_constraints.push(LocalConstraint {
        t: 50,
        gx: Mat::identity(3, 3),
        gu: Some(Mat::identity(3, 3)),
        g: Vector::from_column_slice(&[1.0, 2.0, 3.0]),
    });
    p.local_constraints.push(state_pin(100, &[3.0, 2.0, 1.0]));
    p
}

fn problem7_base() -> EcLqrProblem {
    let dt = 0.01;
    let i3 = Mat::identity(3, 3);
    EcLqrProblem::time_invariant(
        &i3 + &i3 * dt,
        &i3 * dt,
        &i3 * 0.01,
        &i3 * 0.001,
        &i3 * 500.0,
        Vector::zeros(3),
        100,
    )
    .expect("problem 7 is well formed")
}

/// Double integrator whose state must advance by `[-0.6, 0]` every 20 steps:
/// `x_{c+20} − x_c = [-0.6, 0]` for `c = 0, 20, 40, 60, 80`.
pub fn problem9() -> EcLqrProblem {
    let dt = 0.01;
    let fx = Mat::from_row_slice(2, 2, &[1.0, dt, 0.0, 1.0]);
    let fu = Mat::from_row_slice(2, 1, &[0.0, dt]);
    let i2 = Mat::identity(2, 2);
    let mut p = EcLqrProblem::time_invariant(
        fx,
        fu,
        &i2 * 0.01,
        Mat::from_element(1, 1, 0.001),
        &i2 * 500.0,
        Vector::zeros(2),
        100,
    )
    .expect("problem 9 is well formed");
    for c in (0..100).step_by(20) {
        p.cross_constraints.push(periodic_step(
            c,
            20,
            &Vector::from_column_slice(&[-0.6, 0.0]),
        ));
    }
    p
}

/// `x_{c+span} − x_c = advance`.
pub fn periodic_step(c: usize, span: usize, advance: &Vector) -> CrossConstraint {
    let n = advance.len();
    CrossConstraint {
        terms: vec![
            CrossTerm {
                var: VarKey::state(c + span),
                coeff: Mat::identity(n, n),
            },
            CrossTerm {
                var: VarKey::state(c),
                coeff: -Mat::identity(n, n),
            },
        ],
        s: -advance,
    }
}

/// `n = m = 1`, `Fx = Fu = 1`, unit costs, `T = 1`, `x_0 = 1`.
pub fn lqr_toy() -> EcLqrProblem {
    let one = Mat::from_element(1, 1, 1.0);
    EcLqrProblem::time_invariant(
        one.clone(),
        one.clone(),
        one.clone(),
        one.clone(),
        one,
        Vector::from_element(1, 1.0),
        1,
    )
    .expect("toy problem is well formed")
}

/// [`problem7`]'s dynamics and costs over an arbitrary horizon with a
/// cross-time-step constraint of the given span repeated back to back.
pub fn periodic_instance(horizon: usize, span: usize) -> EcLqrProblem {
    let mut p = problem7_base();
    p.horizon = horizon;
    p.fx = vec![p.fx[0].clone(); horizon];
    p.fu = vec![p.fu[0].clone(); horizon];
    p.qxx = vec![p.qxx[0].clone(); horizon];
    p.quu = vec![p.quu[0].clone(); horizon];
    p.local_constraints.clear();
    let advance = Vector::from_column_slice(&[0.1, -0.2, 0.05]);
    let mut c = 0;
    while c + span <= horizon {
        p.cross_constraints.push(periodic_step(c, span, &advance));
        c += span;
    }
    p
}
