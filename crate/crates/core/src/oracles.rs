//! Ground-truth solvers used to check the elimination results.
//!
//! Neither routine shares code with [`crate::linalg`] or [`crate::graph`]: the
//! Riccati pass is the textbook backward recursion and the KKT solver
//! assembles the whole equality-constrained QP densely and hands it to an LU
//! factorization. Both are slow on purpose.

use nalgebra::Cholesky;

use crate::eclqr::EcLqrProblem;
use crate::error::{Error, Result};
use crate::graph::VarKind;
use crate::linalg::{Mat, RowWeight, Vector, WeightedSystem};

#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiResult {
    /// `K[t]`, `t = 0..T`, with `u_t = −K[t]·x_t`.
    pub gains: Vec<Mat>,
    /// `P[t]`, `t = 0..=T`; `P[T] = QxxT`.
    pub values: Vec<Mat>,
}

/// Discrete-time Riccati recursion for a problem without auxiliary constraints.
pub fn riccati(p: &EcLqrProblem) -> Result<RiccatiResult> {
    p.validate()?;
    if p.has_auxiliary_constraints() {
        return Err(Error::InvalidInput(
            "riccati handles only unconstrained LQR".into(),
        ));
    }
    let big_t = p.horizon;
    let mut values = vec![Mat::zeros(p.n, p.n); big_t + 1];
    let mut gains = vec![Mat::zeros(p.m, p.n); big_t];
    values[big_t] = p.qxx_final.clone();
    for t in (0..big_t).rev() {
        let next = &values[t + 1];
        let fu_t_p = p.fu[t].transpose() * next;
        let s = &p.quu[t] + &fu_t_p * &p.fu[t];
        let chol = Cholesky::new(s).ok_or(Error::SingularGainSolve(t))?;
        let k = chol.solve(&(&fu_t_p * &p.fx[t]));
        let fx_t_p = p.fx[t].transpose() * next;
        let pt = &p.qxx[t] + &fx_t_p * &p.fx[t] - &fx_t_p * &p.fu[t] * &k;
        values[t] = 0.5 * (&pt + pt.transpose());
        gains[t] = k;
    }
    Ok(RiccatiResult { gains, values })
}

/// Closed-loop trajectory under the Riccati gains.
pub fn riccati_rollout(
    p: &EcLqrProblem,
    r: &RiccatiResult,
    x0: Option<&Vector>,
) -> (Vec<Vector>, Vec<Vector>) {
    let mut xs = vec![x0.unwrap_or(&p.x0).clone()];
    let mut us = Vec::with_capacity(p.horizon);
    for t in 0..p.horizon {
        let u = -(&r.gains[t] * &xs[t]);
        xs.push(&p.fx[t] * &xs[t] + &p.fu[t] * &u);
        us.push(u);
    }
    (xs, us)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KktSolution {
    /// States `x_0..=x_T` followed by controls `u_0..u_T`.
    pub z: Vector,
    /// One multiplier per equality row (dynamics, initial, local, cross);
    /// rows found redundant get zero.
    pub lambda: Vector,
    pub cost: f64,
    pub xs: Vec<Vector>,
    pub us: Vec<Vector>,
}

/// Dense quadratic `zᵀHz` and equality rows `Cz = d` of the whole problem.
pub fn assemble_qp(p: &EcLqrProblem) -> Result<(Mat, Mat, Vector)> {
    p.validate()?;
    let (n, m, big_t) = (p.n, p.m, p.horizon);
    let nz = n * (big_t + 1) + m * big_t;
    let xi = |t: usize| n * t;
    let ui = |t: usize| n * (big_t + 1) + m * t;

    let mut h = Mat::zeros(nz, nz);
    for t in 0..big_t {
        h.view_mut((xi(t), xi(t)), (n, n)).copy_from(&p.qxx[t]);
        h.view_mut((ui(t), ui(t)), (m, m)).copy_from(&p.quu[t]);
    }
    h.view_mut((xi(big_t), xi(big_t)), (n, n))
        .copy_from(&p.qxx_final);

    let rows = n * big_t
        + n
        + p.local_constraints.iter().map(|c| c.g.len()).sum::<usize>()
        + p.cross_constraints.iter().map(|c| c.s.len()).sum::<usize>();
    let mut c = Mat::zeros(rows, nz);
    let mut d = Vector::zeros(rows);
    let mut r = 0;
    for t in 0..big_t {
        c.view_mut((r, xi(t + 1)), (n, n))
            .copy_from(&Mat::identity(n, n));
        c.view_mut((r, xi(t)), (n, n)).copy_from(&(-&p.fx[t]));
        c.view_mut((r, ui(t)), (n, m)).copy_from(&(-&p.fu[t]));
        r += n;
    }
    c.view_mut((r, xi(0)), (n, n))
        .copy_from(&Mat::identity(n, n));
    d.rows_mut(r, n).copy_from(&p.x0);
    r += n;
    for lc in &p.local_constraints {
        let l = lc.g.len();
        c.view_mut((r, xi(lc.t)), (l, n)).copy_from(&lc.gx);
        if let Some(gu) = &lc.gu {
            c.view_mut((r, ui(lc.t)), (l, m)).copy_from(gu);
        }
        d.rows_mut(r, l).copy_from(&(-&lc.g));
        r += l;
    }
    for cc in &p.cross_constraints {
        let l = cc.s.len();
        for term in &cc.terms {
            let (col, w) = match term.var.kind {
                VarKind::State => (xi(term.var.t), n),
                VarKind::Control => (ui(term.var.t), m),
            };
            let mut blk = c.view_mut((r, col), (l, w));
            blk += &term.coeff;
        }
        d.rows_mut(r, l).copy_from(&(-&cc.s));
        r += l;
    }
    Ok((h, c, d))
}

/// Solve the problem as one dense equality-constrained QP.
pub fn kkt_solve(p: &EcLqrProblem) -> Result<KktSolution> {
    let (h, c, d) = assemble_qp(p)?;
    let f = Vector::zeros(h.nrows());
    let (z, lambda) = solve_equality_qp(&h, &f, &c, &d)?;
    let cost = z.dot(&(&h * &z));
    let (n, m, big_t) = (p.n, p.m, p.horizon);
    let xs = (0..=big_t).map(|t| z.rows(n * t, n).into_owned()).collect();
    let us = (0..big_t)
        .map(|t| z.rows(n * (big_t + 1) + m * t, m).into_owned())
        .collect();
    Ok(KktSolution {
        z,
        lambda,
        cost,
        xs,
        us,
    })
}

/// Minimizer of the finite rows of `sys` (weighted least squares) subject to
/// its hard-constraint rows holding exactly.
pub fn kkt_weighted_least_squares(sys: &WeightedSystem) -> Result<Vector> {
    let cols = sys.cols();
    let mut h = Mat::zeros(cols, cols);
    let mut f = Vector::zeros(cols);
    let mut c_rows = Vec::new();
    for (i, w) in sys.weights().iter().enumerate() {
        let row = sys.a().row(i);
        match w {
            RowWeight::Finite(p) => {
                h += *p * row.transpose() * row;
                f += *p * sys.b()[i] * row.transpose();
            }
            RowWeight::Constrained => c_rows.push(i),
        }
    }
    let c = sys.a().select_rows(c_rows.iter());
    let d = Vector::from_iterator(c_rows.len(), c_rows.iter().map(|&i| sys.b()[i]));
    solve_equality_qp(&h, &f, &c, &d).map(|(z, _)| z)
}

/// `min zᵀHz − 2fᵀz  s.t.  Cz = d` through `[2H Cᵀ; C 0]·[z; λ] = [2f; d]`.
/// Dependent constraint rows are removed first; inconsistent ones are an error.
fn solve_equality_qp(h: &Mat, f: &Vector, c: &Mat, d: &Vector) -> Result<(Vector, Vector)> {
    let nz = h.nrows();
    let keep = independent_rows(c, d)?;
    let c_red = c.select_rows(keep.iter());
    let d_red = Vector::from_iterator(keep.len(), keep.iter().map(|&i| d[i]));
    let nc = keep.len();

    let mut kkt = Mat::zeros(nz + nc, nz + nc);
    kkt.view_mut((0, 0), (nz, nz)).copy_from(&(2.0 * h));
    kkt.view_mut((0, nz), (nz, nc))
        .copy_from(&c_red.transpose());
    kkt.view_mut((nz, 0), (nc, nz)).copy_from(&c_red);
    let mut rhs = Vector::zeros(nz + nc);
    rhs.rows_mut(0, nz).copy_from(&(2.0 * f));
    rhs.rows_mut(nz, nc).copy_from(&d_red);

    let lu = kkt.clone().lu();
    let mut sol = lu.solve(&rhs).ok_or(Error::SingularKkt)?;
    // one step of iterative refinement
    let resid = &rhs - &kkt * &sol;
    if let Some(corr) = lu.solve(&resid) {
        sol += corr;
    }
    let resid = (&rhs - &kkt * &sol).amax();
    let scale = kkt.amax().max(1.0) * sol.amax().max(1.0) + rhs.amax();
    if !sol.iter().all(|v| v.is_finite()) || resid > 1e-9 * scale {
        return Err(Error::SingularKkt);
    }

    let z = sol.rows(0, nz).into_owned();
    let mut lambda = Vector::zeros(c.nrows());
    for (j, &i) in keep.iter().enumerate() {
        lambda[i] = sol[nz + j];
    }
    Ok((z, lambda))
}

/// Indices of a maximal independent subset of the rows of `[C | d]`, found by
/// Gaussian elimination with partial pivoting.
fn independent_rows(c: &Mat, d: &Vector) -> Result<Vec<usize>> {
    let (rows, cols) = c.shape();
    let mut work = c.clone();
    let mut rhs = d.clone();
    let mut perm: Vec<usize> = (0..rows).collect();
    let tol = 1e-10 * c.amax().max(1.0);
    let mut rank = 0;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let (best, mag) = (rank..rows)
            .map(|i| (i, work[(i, col)].abs()))
            .fold((rank, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if mag <= tol {
            continue;
        }
        work.swap_rows(rank, best);
        rhs.swap_rows(rank, best);
        perm.swap(rank, best);
        let piv = work[(rank, col)];
        for i in rank + 1..rows {
            let factor = work[(i, col)] / piv;
            if factor != 0.0 {
                for j in col..cols {
                    work[(i, j)] -= factor * work[(rank, j)];
                }
                rhs[i] -= factor * rhs[rank];
            }
        }
        rank += 1;
    }
    let rhs_tol = 1e-8 * d.amax().max(1.0);
    if (rank..rows).any(|i| rhs[i].abs() > rhs_tol) {
        return Err(Error::Infeasible(None));
    }
    let mut keep: Vec<usize> = perm[..rank].to_vec();
    keep.sort_unstable();
    Ok(keep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eclqr::LocalConstraint;

    fn scalar(q: f64, r: f64, qf: f64, horizon: usize) -> EcLqrProblem {
        let s = |v: f64| Mat::from_element(1, 1, v);
        EcLqrProblem::time_invariant(
            s(1.0),
            s(1.0),
            s(q),
            s(r),
            s(qf),
            Vector::from_element(1, 1.0),
            horizon,
        )
        .unwrap()
    }

    #[test]
    fn one_step_closed_form() {
        let r = riccati(&scalar(1.0, 1.0, 1.0, 1)).unwrap();
        assert!((r.gains[0][(0, 0)] - 0.5).abs() < 1e-15);
        assert!((r.values[0][(0, 0)] - 1.5).abs() < 1e-15);
        assert_eq!(r.values[1][(0, 0)], 1.0);
    }

    #[test]
    fn heavy_control_penalty_kills_gain() {
        let r = riccati(&scalar(1.0, 1e9, 1.0, 10)).unwrap();
        assert!(r.gains.iter().all(|k| k.amax() <= 1e-6));
    }

    #[test]
    fn zero_state_cost_gives_zero_gains() {
        let r = riccati(&scalar(0.0, 1.0, 0.0, 5)).unwrap();
        assert!(r.gains.iter().all(|k| k.amax() == 0.0));
        assert!(r.values.iter().all(|p| p.amax() == 0.0));
    }

    #[test]
    fn riccati_rejects_constraints_and_singular_gains() {
        let mut p = scalar(1.0, 1.0, 1.0, 2);
        p.add_local_constraint(LocalConstraint {
            t: 1,
            gx: Mat::identity(1, 1),
            gu: None,
            g: Vector::zeros(1),
        })
        .unwrap();
        assert!(riccati(&p).is_err());
        let p = scalar(0.0, 0.0, 0.0, 2);
        assert_eq!(riccati(&p).unwrap_err(), Error::SingularGainSolve(1));
    }

    #[test]
    fn kkt_toy_problem() {
        // min x² + u²  s.t.  x − u = 0
        let h = Mat::identity(2, 2);
        let c = Mat::from_row_slice(1, 2, &[1.0, -1.0]);
        let (z, _) = solve_equality_qp(&h, &Vector::zeros(2), &c, &Vector::zeros(1)).unwrap();
        assert!(z.amax() < 1e-15);
    }

    #[test]
    fn kkt_matches_one_step_riccati() {
        let s = kkt_solve(&scalar(1.0, 1.0, 1.0, 1)).unwrap();
        assert!((s.us[0][0] + 0.5).abs() < 1e-12);
        assert!((s.xs[1][0] - 0.5).abs() < 1e-12);
        assert!((s.cost - 1.5).abs() < 1e-12);
    }

    #[test]
    fn kkt_detects_inconsistent_constraints() {
        let mut p = scalar(1.0, 1.0, 1.0, 1);
        p.add_local_constraint(LocalConstraint {
            t: 0,
            gx: Mat::identity(1, 1),
            gu: None,
            g: Vector::zeros(1),
        })
        .unwrap();
        assert_eq!(kkt_solve(&p).unwrap_err(), Error::Infeasible(None));
    }

    #[test]
    fn kkt_tolerates_redundant_rows() {
        let mut p = scalar(1.0, 1.0, 1.0, 1);
        p.add_local_constraint(LocalConstraint {
            t: 0,
            gx: Mat::from_element(1, 1, 2.0),
            gu: None,
            g: Vector::from_element(1, -2.0),
        })
        .unwrap();
        let s = kkt_solve(&p).unwrap();
        assert!((s.us[0][0] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn kkt_flags_unbounded_problems() {
        // free control with zero cost: the QP has a flat direction
        let s = |v: f64| Mat::from_element(1, 1, v);
        let p = EcLqrProblem::time_invariant(
            s(1.0),
            s(1.0),
            s(0.0),
            s(0.0),
            s(0.0),
            Vector::zeros(1),
            1,
        )
        .unwrap();
        assert_eq!(kkt_solve(&p).unwrap_err(), Error::SingularKkt);
    }
}
