//! Dense kernel for the elimination steps.
//!
//! A [`WeightedSystem`] is a stack of rows `a·θ ≈ b`, each tagged either with a
//! finite scalar precision or as a hard constraint. [`eliminate_block`] factors
//! the leading `k` columns out of such a system with a Gram-Schmidt sweep that
//! switches to exact row reduction whenever a hard-constraint row can serve as
//! the pivot, and [`back_solve`] evaluates the resulting triangular rows.
//!
//! Hard constraints are never encoded as an infinite weight; they carry the
//! [`RowWeight::Constrained`] tag and are only ever combined by substitution.

use nalgebra::{DMatrix, DVector};

use crate::error::LinalgError;

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// An entry is nonzero if `|entry| > ZERO_TOL * max(1, row scale)`.
pub const ZERO_TOL: f64 = 1e-12;

/// A hard-constraint row whose coefficients vanished is consistent only while
/// `|rhs| <= RHS_TOL * max(1, row scale)`.
pub const RHS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RowWeight {
    /// Scalar precision (inverse variance) of the row.
    Finite(f64),
    /// Zero-variance row: must hold exactly.
    Constrained,
}

impl RowWeight {
    pub const UNIT: RowWeight = RowWeight::Finite(1.0);

    pub fn is_constrained(self) -> bool {
        matches!(self, RowWeight::Constrained)
    }
}

/// Rows `a[i,:]·θ = b[i]` with per-row weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSystem {
    a: Mat,
    b: Vector,
    weights: Vec<RowWeight>,
}

impl WeightedSystem {
    pub fn new(a: Mat, b: Vector, weights: Vec<RowWeight>) -> Result<Self, LinalgError> {
        if a.nrows() != b.len() || a.nrows() != weights.len() {
            return Err(LinalgError::DimensionMismatch(format!(
                "a has {} rows, b has {}, weights has {}",
                a.nrows(),
                b.len(),
                weights.len()
            )));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(LinalgError::InvalidInput("non-finite entry".into()));
        }
        for (i, w) in weights.iter().enumerate() {
            if let RowWeight::Finite(p) = w {
                if !(p.is_finite() && *p > 0.0) {
                    return Err(LinalgError::InvalidInput(format!(
                        "row {i} has precision {p}, expected finite and > 0"
                    )));
                }
            }
        }
        Ok(Self { a, b, weights })
    }

    pub fn empty(cols: usize) -> Self {
        Self {
            a: Mat::zeros(0, cols),
            b: Vector::zeros(0),
            weights: Vec::new(),
        }
    }

    pub fn a(&self) -> &Mat {
        &self.a
    }

    pub fn b(&self) -> &Vector {
        &self.b
    }

    pub fn weights(&self) -> &[RowWeight] {
        &self.weights
    }

    pub fn rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn cols(&self) -> usize {
        self.a.ncols()
    }

    /// Finite rows scaled by the square root of their precision.
    pub fn whitened_objective(&self) -> (Mat, Vector) {
        let picks: Vec<(usize, f64)> = self
            .weights
            .iter()
            .enumerate()
            .filter_map(|(i, w)| match w {
                RowWeight::Finite(p) => Some((i, p.sqrt())),
                RowWeight::Constrained => None,
            })
            .collect();
        let mut a = Mat::zeros(picks.len(), self.cols());
        let mut b = Vector::zeros(picks.len());
        for (r, &(i, s)) in picks.iter().enumerate() {
            a.set_row(r, &(self.a.row(i) * s));
            b[r] = self.b[i] * s;
        }
        (a, b)
    }

    /// The hard-constraint rows, unscaled.
    pub fn constraint_rows(&self) -> (Mat, Vector) {
        let idx: Vec<usize> = (0..self.rows())
            .filter(|&i| self.weights[i].is_constrained())
            .collect();
        let a = self.a.select_rows(idx.iter());
        let b = Vector::from_iterator(idx.len(), idx.iter().map(|&i| self.b[i]));
        (a, b)
    }
}

/// Output of [`eliminate_block`].
#[derive(Debug, Clone, PartialEq)]
pub struct PartialFactorization {
    /// One row per eliminated column, unit diagonal, upper triangular on the
    /// eliminated block. Gram-Schmidt rows carry the precision `R_jj²` that
    /// restores the un-normalized row when whitened.
    pub eliminated: WeightedSystem,
    /// Rows left over on the trailing columns; exactly zero on the first `k`.
    pub remainder: WeightedSystem,
    /// Scalar multiply-accumulates spent in this call.
    pub macs: u64,
}

#[derive(Debug, Clone)]
struct WorkRow {
    coef: Vec<f64>,
    rhs: f64,
    constrained: bool,
    /// Largest magnitude this row has carried; sets its zero tolerance.
    scale: f64,
    origin: usize,
}

impl WorkRow {
    fn tol(&self) -> f64 {
        ZERO_TOL * self.scale.max(1.0)
    }

    fn is_zero_from(&self, start: usize) -> bool {
        let tol = self.tol();
        self.coef[start..].iter().all(|v| v.abs() <= tol)
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Factor the first `k` columns out of `sys`.
///
/// Column by column: a hard-constraint row with a nonzero entry becomes the
/// pivot (largest magnitude, lowest index on ties), is normalized, and is
/// substituted into every other row. Without one, the finite rows are
/// whitened and orthogonalized against the column (modified Gram-Schmidt),
/// emitting the normalized `R` row.
///
/// The finite remainder is re-triangularized when it has more rows than
/// remaining columns, so factors passed down an elimination chain never grow.
/// Any leftover right-hand side energy is kept as a single all-zero row.
pub fn eliminate_block(
    sys: &WeightedSystem,
    k: usize,
) -> Result<PartialFactorization, LinalgError> {
    let cols = sys.cols();
    if k > cols {
        return Err(LinalgError::DimensionMismatch(format!(
            "cannot eliminate {k} columns from a system with {cols}"
        )));
    }

    let mut work: Vec<WorkRow> = (0..sys.rows())
        .map(|i| {
            let (s, constrained) = match sys.weights[i] {
                RowWeight::Finite(p) => (p.sqrt(), false),
                RowWeight::Constrained => (1.0, true),
            };
            let coef: Vec<f64> = sys.a.row(i).iter().map(|v| v * s).collect();
            WorkRow {
                scale: max_abs(&coef),
                coef,
                rhs: sys.b[i] * s,
                constrained,
                origin: i,
            }
        })
        .collect();

    let mut macs = 0u64;
    let mut elim_a = Mat::zeros(k, cols);
    let mut elim_b = Vector::zeros(k);
    let mut elim_w = Vec::with_capacity(k);

    for j in 0..k {
        let mut pivot: Option<(usize, f64)> = None;
        for (idx, r) in work.iter().enumerate() {
            if !r.constrained {
                continue;
            }
            let mag = r.coef[j].abs();
            if mag > r.tol() && pivot.is_none_or(|(_, best)| mag > best) {
                pivot = Some((idx, mag));
            }
        }

        if let Some((idx, _)) = pivot {
            let mut p = work.remove(idx);
            let piv = p.coef[j];
            for v in &mut p.coef[j + 1..] {
                *v /= piv;
            }
            p.rhs /= piv;
            p.coef[j] = 1.0;
            macs += (cols - j) as u64;
            let p_scale = max_abs(&p.coef);

            for r in work.iter_mut() {
                let f = r.coef[j];
                if f == 0.0 {
                    continue;
                }
                for l in j + 1..cols {
                    r.coef[l] -= f * p.coef[l];
                }
                r.rhs -= f * p.rhs;
                r.coef[j] = 0.0;
                r.scale = r.scale.max(f.abs() * p_scale);
                macs += (cols - j) as u64;
            }

            elim_a.row_mut(j).copy_from_slice(&p.coef);
            elim_b[j] = p.rhs;
            elim_w.push(RowWeight::Constrained);
        } else {
            for r in work.iter_mut().filter(|r| r.constrained) {
                r.coef[j] = 0.0;
            }
            let (r_row, r_rhs) = gram_schmidt_column(&mut work, j, cols, &mut macs)
                .ok_or(LinalgError::Underdetermined(j))?;
            let norm = r_row[j];
            let mut row = elim_a.row_mut(j);
            for l in j..cols {
                row[l] = r_row[l] / norm;
            }
            row[j] = 1.0;
            elim_b[j] = r_rhs / norm;
            elim_w.push(RowWeight::Finite(norm * norm));
        }
    }

    let mut finite = Vec::new();
    let mut constrained = Vec::new();
    for r in work {
        if r.constrained {
            if r.is_zero_from(k) {
                if r.rhs.abs() > RHS_TOL * r.scale.max(1.0) {
                    return Err(LinalgError::Infeasible(r.origin));
                }
                continue;
            }
            constrained.push(r);
        } else {
            finite.push(r);
        }
    }

    if finite.len() > cols - k {
        finite = compress(finite, k, cols, &mut macs);
    }

    let n_rows = finite.len() + constrained.len();
    let mut rem_a = Mat::zeros(n_rows, cols);
    let mut rem_b = Vector::zeros(n_rows);
    let mut rem_w = Vec::with_capacity(n_rows);
    for (i, r) in finite.iter().chain(constrained.iter()).enumerate() {
        let mut row = rem_a.row_mut(i);
        for l in k..cols {
            row[l] = r.coef[l];
        }
        rem_b[i] = r.rhs;
        rem_w.push(if r.constrained {
            RowWeight::Constrained
        } else {
            RowWeight::UNIT
        });
    }

    Ok(PartialFactorization {
        eliminated: WeightedSystem::new(elim_a, elim_b, elim_w)?,
        remainder: WeightedSystem::new(rem_a, rem_b, rem_w)?,
        macs,
    })
}

/// One modified Gram-Schmidt step on column `j` of the finite rows.
/// Returns the un-normalized `R` row (`R_jj` at index `j`) and its rhs, or
/// `None` when the column carries no information.
fn gram_schmidt_column(
    work: &mut [WorkRow],
    j: usize,
    cols: usize,
    macs: &mut u64,
) -> Option<(Vec<f64>, f64)> {
    let mut sq = 0.0;
    let mut scale: f64 = 0.0;
    let mut n_finite = 0u64;
    for r in work.iter().filter(|r| !r.constrained) {
        sq += r.coef[j] * r.coef[j];
        scale = scale.max(r.scale);
        n_finite += 1;
    }
    *macs += n_finite;
    let norm = sq.sqrt();
    if norm <= ZERO_TOL * scale.max(1.0) {
        return None;
    }

    let mut r_row = vec![0.0; cols];
    r_row[j] = norm;
    let mut r_rhs = 0.0;
    for r in work.iter().filter(|r| !r.constrained) {
        let q = r.coef[j] / norm;
        if q == 0.0 {
            continue;
        }
        for l in j + 1..cols {
            r_row[l] += q * r.coef[l];
        }
        r_rhs += q * r.rhs;
    }
    *macs += n_finite * (cols - j) as u64;

    for r in work.iter_mut().filter(|r| !r.constrained) {
        let q = r.coef[j] / norm;
        if q != 0.0 {
            for l in j + 1..cols {
                r.coef[l] -= q * r_row[l];
            }
            r.rhs -= q * r_rhs;
        }
        r.coef[j] = 0.0;
    }
    *macs += n_finite * (cols - j) as u64;

    Some((r_row, r_rhs))
}

/// Re-triangularize finite rows on columns `k..cols`.
fn compress(mut rows: Vec<WorkRow>, k: usize, cols: usize, macs: &mut u64) -> Vec<WorkRow> {
    let scale = rows.iter().fold(0.0_f64, |m, r| m.max(r.scale));
    let mut out = Vec::with_capacity(cols - k + 1);
    for j in k..cols {
        if let Some((r_row, r_rhs)) = gram_schmidt_column(&mut rows, j, cols, macs) {
            out.push(WorkRow {
                coef: r_row,
                rhs: r_rhs,
                constrained: false,
                scale,
                origin: usize::MAX,
            });
        }
    }
    let residual = rows.iter().map(|r| r.rhs * r.rhs).sum::<f64>().sqrt();
    if residual > 0.0 {
        out.push(WorkRow {
            coef: vec![0.0; cols],
            rhs: residual,
            constrained: false,
            scale,
            origin: usize::MAX,
        });
    }
    out
}

/// Eliminated rows together with the global variable indices of their columns:
/// the first `frontal.len()` columns are solved for, the rest are read.
#[derive(Debug, Clone, Copy)]
pub struct TriangularBlock<'a> {
    pub frontal: &'a [usize],
    pub separator: &'a [usize],
    pub rows: &'a WeightedSystem,
}

/// Apply the blocks in the given order, each row giving
/// `θ = (rhs − Σ coef·known) / diag`. `known` seeds already fixed scalars.
pub fn back_solve(
    blocks: &[TriangularBlock<'_>],
    known: Vec<Option<f64>>,
) -> Result<Vec<f64>, LinalgError> {
    let mut known = known;
    for block in blocks {
        let k = block.frontal.len();
        let sys = block.rows;
        if sys.rows() != k || sys.cols() != k + block.separator.len() {
            return Err(LinalgError::DimensionMismatch(format!(
                "block is {}x{}, expected {}x{}",
                sys.rows(),
                sys.cols(),
                k,
                k + block.separator.len()
            )));
        }
        let mut sep = Vec::with_capacity(block.separator.len());
        for &s in block.separator {
            let v = known
                .get(s)
                .copied()
                .flatten()
                .ok_or(LinalgError::MissingParent(s))?;
            sep.push(v);
        }
        let mut frontal = vec![0.0; k];
        for i in (0..k).rev() {
            let row = sys.a.row(i);
            let mut v = sys.b[i];
            for l in i + 1..k {
                v -= row[l] * frontal[l];
            }
            for (s, sv) in sep.iter().enumerate() {
                v -= row[k + s] * sv;
            }
            let d = row[i];
            if d == 0.0 {
                return Err(LinalgError::InvalidInput(format!(
                    "zero diagonal in row {i}"
                )));
            }
            frontal[i] = v / d;
        }
        for (i, &idx) in block.frontal.iter().enumerate() {
            if idx >= known.len() {
                return Err(LinalgError::DimensionMismatch(format!(
                    "variable index {idx} out of range"
                )));
            }
            known[idx] = Some(frontal[i]);
        }
    }
    known
        .into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or(LinalgError::Unresolved(i)))
        .collect()
}

/// Rewrite unit upper-triangular rows `[U | B | d]` on `k` frontal columns as
/// the explicit map `frontal = offset − gain·separator`, i.e. `gain = U⁻¹B`
/// and `offset = U⁻¹d`.
pub fn explicit_affine(rows: &WeightedSystem, k: usize) -> Result<(Mat, Vector), LinalgError> {
    if rows.rows() != k || rows.cols() < k {
        return Err(LinalgError::DimensionMismatch(format!(
            "expected {k} rows and at least {k} columns, got {}x{}",
            rows.rows(),
            rows.cols()
        )));
    }
    let s = rows.cols() - k;
    let mut gain = rows.a.columns(k, s).into_owned();
    let mut offset = rows.b.clone();
    for i in (0..k).rev() {
        for l in i + 1..k {
            let u = rows.a[(i, l)];
            if u != 0.0 {
                for j in 0..s {
                    gain[(i, j)] -= u * gain[(l, j)];
                }
                offset[i] -= u * offset[l];
            }
        }
        let d = rows.a[(i, i)];
        if d == 0.0 {
            return Err(LinalgError::InvalidInput(format!(
                "zero diagonal in row {i}"
            )));
        }
        if d != 1.0 {
            gain.row_mut(i).scale_mut(1.0 / d);
            offset[i] /= d;
        }
    }
    Ok((gain, offset))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(rows: &[&[f64]], b: &[f64], w: &[RowWeight]) -> WeightedSystem {
        let cols = rows.first().map_or(0, |r| r.len());
        let a = Mat::from_fn(rows.len(), cols, |i, j| rows[i][j]);
        WeightedSystem::new(a, Vector::from_column_slice(b), w.to_vec()).unwrap()
    }

    fn solve_all(pf: &PartialFactorization, k: usize) -> Vec<f64> {
        let frontal: Vec<usize> = (0..k).collect();
        let block = TriangularBlock {
            frontal: &frontal,
            separator: &[],
            rows: &pf.eliminated,
        };
        back_solve(&[block], vec![None; k]).unwrap()
    }

    #[test]
    fn single_hard_constraint_pins_variable() {
        let s = sys(&[&[1.0]], &[5.0], &[RowWeight::Constrained]);
        let pf = eliminate_block(&s, 1).unwrap();
        assert_eq!(pf.eliminated.a()[(0, 0)], 1.0);
        assert_eq!(pf.eliminated.b()[0], 5.0);
        assert_eq!(pf.eliminated.weights(), &[RowWeight::Constrained]);
        assert_eq!(pf.remainder.rows(), 0);
    }

    #[test]
    fn dynamics_pivot_substitutes_into_state_cost() {
        // columns: x2 (2) | u1 (1) | x1 (2)
        let qh = [[2.0, 0.5], [0.0, 1.5]];
        let fu = [0.3, -0.7];
        let fx = [[1.1, 0.2], [-0.4, 0.9]];
        let rows: Vec<Vec<f64>> = vec![
            vec![qh[0][0], qh[0][1], 0.0, 0.0, 0.0],
            vec![qh[1][0], qh[1][1], 0.0, 0.0, 0.0],
            vec![1.0, 0.0, -fu[0], -fx[0][0], -fx[0][1]],
            vec![0.0, 1.0, -fu[1], -fx[1][0], -fx[1][1]],
        ];
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let s = sys(
            &refs,
            &[0.0; 4],
            &[
                RowWeight::UNIT,
                RowWeight::UNIT,
                RowWeight::Constrained,
                RowWeight::Constrained,
            ],
        );
        let pf = eliminate_block(&s, 2).unwrap();

        for i in 0..2 {
            for j in 0..5 {
                assert_eq!(pf.eliminated.a()[(i, j)], rows[2 + i][j]);
            }
            assert!(pf.eliminated.weights()[i].is_constrained());
        }
        assert_eq!(pf.remainder.rows(), 2);
        for i in 0..2 {
            let qfu = qh[i][0] * fu[0] + qh[i][1] * fu[1];
            let qfx0 = qh[i][0] * fx[0][0] + qh[i][1] * fx[1][0];
            let qfx1 = qh[i][0] * fx[0][1] + qh[i][1] * fx[1][1];
            let r = pf.remainder.a().row(i);
            assert_eq!(r[0], 0.0);
            assert_eq!(r[1], 0.0);
            assert!((r[2] - qfu).abs() < 1e-14);
            assert!((r[3] - qfx0).abs() < 1e-14);
            assert!((r[4] - qfx1).abs() < 1e-14);
            assert_eq!(pf.remainder.weights()[i], RowWeight::UNIT);
        }
    }

    #[test]
    fn square_least_squares_matches_normal_equations() {
        // AᵀA = [[4,2],[2,10]], Aᵀb = [8,13] → x = [54/36, 36/36]
        let s = sys(
            &[&[2.0, 1.0], &[0.0, 3.0]],
            &[4.0, 3.0],
            &[RowWeight::UNIT, RowWeight::UNIT],
        );
        let pf = eliminate_block(&s, 2).unwrap();
        assert_eq!(pf.remainder.rows(), 0);
        let x = solve_all(&pf, 2);
        assert!((x[0] - 1.5).abs() < 1e-14);
        assert!((x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_column_is_underdetermined() {
        let s = sys(&[&[0.0, 1.0]], &[1.0], &[RowWeight::UNIT]);
        assert_eq!(eliminate_block(&s, 1), Err(LinalgError::Underdetermined(0)));
        let empty = WeightedSystem::empty(2);
        assert_eq!(
            eliminate_block(&empty, 1),
            Err(LinalgError::Underdetermined(0))
        );
    }

    #[test]
    fn conflicting_constraints_are_infeasible() {
        let s = sys(
            &[&[1.0], &[1.0]],
            &[1.0, 2.0],
            &[RowWeight::Constrained, RowWeight::Constrained],
        );
        assert_eq!(eliminate_block(&s, 1), Err(LinalgError::Infeasible(1)));
    }

    #[test]
    fn redundant_constraints_are_dropped() {
        let s = sys(
            &[&[1.0], &[2.0]],
            &[1.0, 2.0],
            &[RowWeight::Constrained, RowWeight::Constrained],
        );
        let pf = eliminate_block(&s, 1).unwrap();
        // the larger entry wins the pivot
        assert_eq!(pf.eliminated.b()[0], 1.0);
        assert_eq!(pf.remainder.rows(), 0);
    }

    #[test]
    fn pivot_ties_take_lowest_row() {
        let s = sys(
            &[&[1.0, 2.0], &[-1.0, 0.0]],
            &[3.0, 1.0],
            &[RowWeight::Constrained, RowWeight::Constrained],
        );
        let pf = eliminate_block(&s, 1).unwrap();
        assert_eq!(
            pf.eliminated.a().row(0).iter().copied().collect::<Vec<_>>(),
            vec![1.0, 2.0]
        );
        assert_eq!(
            pf.remainder.a().row(0).iter().copied().collect::<Vec<_>>(),
            vec![0.0, 2.0]
        );
        assert_eq!(pf.remainder.b()[0], 4.0);
    }

    #[test]
    fn too_many_columns_is_a_mismatch() {
        let s = sys(&[&[1.0]], &[1.0], &[RowWeight::UNIT]);
        assert!(matches!(
            eliminate_block(&s, 2),
            Err(LinalgError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn rejects_bad_weights_and_shapes() {
        let a = Mat::zeros(1, 1);
        let b = Vector::zeros(1);
        assert!(WeightedSystem::new(a.clone(), b.clone(), vec![RowWeight::Finite(0.0)]).is_err());
        assert!(
            WeightedSystem::new(a.clone(), b.clone(), vec![RowWeight::Finite(f64::INFINITY)])
                .is_err()
        );
        assert!(WeightedSystem::new(a, b, vec![]).is_err());
    }

    #[test]
    fn finite_remainder_is_compressed() {
        // 4 rows, eliminate 1 of 2 columns: remainder must fit in 1 row + residual.
        let s = sys(
            &[&[1.0, 2.0], &[0.5, -1.0], &[0.0, 1.0], &[2.0, 0.0]],
            &[1.0, 2.0, 3.0, 4.0],
            &[RowWeight::UNIT; 4],
        );
        let pf = eliminate_block(&s, 1).unwrap();
        assert!(pf.remainder.rows() <= 2);
        assert!(pf.remainder.a().column(0).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn back_solve_single_row() {
        let s = sys(&[&[1.0]], &[5.0], &[RowWeight::Constrained]);
        let b = TriangularBlock {
            frontal: &[0],
            separator: &[],
            rows: &s,
        };
        assert_eq!(back_solve(&[b], vec![None]).unwrap(), vec![5.0]);
    }

    #[test]
    fn back_solve_affine_chain() {
        // variables: 0 = x1, 1 = u1, 2 = x2; K = 0.5, c = 2
        // x1 = 2; u1 = -0.5·2 = -1; x2 = 1.01·2 + 0.01·(-1) = 2.01
        let x1 = sys(&[&[1.0]], &[2.0], &[RowWeight::Constrained]);
        let u1 = sys(&[&[1.0, 0.5]], &[0.0], &[RowWeight::Finite(4.0)]);
        let x2 = sys(&[&[1.0, -0.01, -1.01]], &[0.0], &[RowWeight::Constrained]);
        let blocks = [
            TriangularBlock {
                frontal: &[0],
                separator: &[],
                rows: &x1,
            },
            TriangularBlock {
                frontal: &[1],
                separator: &[0],
                rows: &u1,
            },
            TriangularBlock {
                frontal: &[2],
                separator: &[1, 0],
                rows: &x2,
            },
        ];
        let x = back_solve(&blocks, vec![None; 3]).unwrap();
        assert_eq!(x[0], 2.0);
        assert_eq!(x[1], -1.0);
        assert!((x[2] - 2.01).abs() < 1e-15);
    }

    #[test]
    fn back_solve_reports_ordering_violations() {
        let u1 = sys(&[&[1.0, 0.5]], &[0.0], &[RowWeight::UNIT]);
        let b = TriangularBlock {
            frontal: &[1],
            separator: &[0],
            rows: &u1,
        };
        assert_eq!(
            back_solve(&[b], vec![None; 2]),
            Err(LinalgError::MissingParent(0))
        );
        let x = sys(&[&[1.0]], &[1.0], &[RowWeight::UNIT]);
        let b = TriangularBlock {
            frontal: &[0],
            separator: &[],
            rows: &x,
        };
        assert_eq!(
            back_solve(&[b], vec![None; 2]),
            Err(LinalgError::Unresolved(1))
        );
    }

    #[test]
    fn explicit_affine_inverts_unit_triangle() {
        // [1 2 | 1] θ0 + 2θ1 + s = 3
        // [0 1 | 4] θ1 + 4s = 1
        let rows = sys(
            &[&[1.0, 2.0, 1.0], &[0.0, 1.0, 4.0]],
            &[3.0, 1.0],
            &[RowWeight::UNIT, RowWeight::UNIT],
        );
        let (gain, offset) = explicit_affine(&rows, 2).unwrap();
        // θ1 = 1 − 4s, θ0 = 3 − 2(1 − 4s) − s = 1 + 7s
        assert_eq!(offset.as_slice(), &[1.0, 1.0]);
        assert_eq!(gain[(0, 0)], -7.0);
        assert_eq!(gain[(1, 0)], 4.0);
    }
}
