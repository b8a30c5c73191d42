use std::collections::BTreeSet;

use nalgebra::{Cholesky, SymmetricEigen};

use crate::error::{Error, Result};
use crate::graph::{VarKey, VarKind};
use crate::linalg::{Mat, Vector};

/// `gx·x_t + gu·u_t + g = 0`. At `t == horizon` only the state term exists.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalConstraint {
    pub t: usize,
    pub gx: Mat,
    pub gu: Option<Mat>,
    pub g: Vector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossTerm {
    pub var: VarKey,
    pub coeff: Mat,
}

/// `Σ coeffᵢ·varᵢ + s = 0` over variables at arbitrary time steps.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossConstraint {
    pub terms: Vec<CrossTerm>,
    pub s: Vector,
}

/// Finite-horizon LQR with auxiliary equality constraints.
///
/// States `x_0..=x_T`, controls `u_0..u_T`. Minimizes
/// `x_Tᵀ·qxx_final·x_T + Σ_t (x_tᵀ·qxx[t]·x_t + u_tᵀ·quu[t]·u_t)` subject to
/// `x_{t+1} = fx[t]·x_t + fu[t]·u_t`, `x_0 = x0` and the listed constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct EcLqrProblem {
    pub n: usize,
    pub m: usize,
    pub horizon: usize,
    pub fx: Vec<Mat>,
    pub fu: Vec<Mat>,
    pub qxx: Vec<Mat>,
    pub quu: Vec<Mat>,
    pub qxx_final: Mat,
    pub x0: Vector,
    pub local_constraints: Vec<LocalConstraint>,
    pub cross_constraints: Vec<CrossConstraint>,
}

impl EcLqrProblem {
    /// Same dynamics and costs at every step, no auxiliary constraints.
    pub fn time_invariant(
        fx: Mat,
        fu: Mat,
        qxx: Mat,
        quu: Mat,
        qxx_final: Mat,
        x0: Vector,
        horizon: usize,
    ) -> Result<Self> {
        let p = Self {
            n: fx.nrows(),
            m: fu.ncols(),
            horizon,
            fx: vec![fx; horizon],
            fu: vec![fu; horizon],
            qxx: vec![qxx; horizon],
            quu: vec![quu; horizon],
            qxx_final,
            x0,
            local_constraints: Vec::new(),
            cross_constraints: Vec::new(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn add_local_constraint(&mut self, c: LocalConstraint) -> Result<()> {
        self.check_local(&c)?;
        self.local_constraints.push(c);
        Ok(())
    }

    pub fn add_cross_constraint(&mut self, c: CrossConstraint) -> Result<()> {
        self.check_cross(&c)?;
        self.cross_constraints.push(c);
        Ok(())
    }

    pub fn has_auxiliary_constraints(&self) -> bool {
        !self.local_constraints.is_empty() || !self.cross_constraints.is_empty()
    }

    pub fn with_x0(&self, x0: Vector) -> Result<Self> {
        if x0.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "x0 has length {}, expected {}",
                x0.len(),
                self.n
            )));
        }
        Ok(Self { x0, ..self.clone() })
    }

    /// The problem restarted at step `from` with state `x_from`: times shift
    /// down by `from` and constraints that end before `from` are dropped.
    /// Fails if a cross constraint straddles `from`.
    pub fn tail(&self, from: usize, x_from: Vector) -> Result<Self> {
        if from > self.horizon {
            return Err(Error::InvalidInput(format!(
                "tail start {from} beyond horizon {}",
                self.horizon
            )));
        }
        let mut locals = Vec::new();
        for c in &self.local_constraints {
            if c.t >= from {
                locals.push(LocalConstraint {
                    t: c.t - from,
                    ..c.clone()
                });
            }
        }
        let mut crosses = Vec::new();
        for c in &self.cross_constraints {
            let before = c.terms.iter().filter(|t| t.var.t < from).count();
            if before == c.terms.len() {
                continue;
            }
            if before > 0 {
                return Err(Error::InvalidInput(
                    "cross constraint straddles the tail start".into(),
                ));
            }
            let terms = c
                .terms
                .iter()
                .map(|t| CrossTerm {
                    var: VarKey {
                        t: t.var.t - from,
                        kind: t.var.kind,
                    },
                    coeff: t.coeff.clone(),
                })
                .collect();
            crosses.push(CrossConstraint {
                terms,
                s: c.s.clone(),
            });
        }
        let p = Self {
            n: self.n,
            m: self.m,
            horizon: self.horizon - from,
            fx: self.fx[from..].to_vec(),
            fu: self.fu[from..].to_vec(),
            qxx: self.qxx[from..].to_vec(),
            quu: self.quu[from..].to_vec(),
            qxx_final: self.qxx_final.clone(),
            x0: x_from,
            local_constraints: locals,
            cross_constraints: crosses,
        };
        p.validate()?;
        Ok(p)
    }

    /// Shape and finiteness checks. Cost definiteness is checked when the
    /// graph is built.
    pub fn validate(&self) -> Result<()> {
        let (n, m, big_t) = (self.n, self.m, self.horizon);
        if n == 0 || m == 0 {
            return Err(Error::DimensionMismatch(
                "state and control dimensions must be positive".into(),
            ));
        }
        for (name, list) in [
            ("Fx", &self.fx),
            ("Fu", &self.fu),
            ("Qxx", &self.qxx),
            ("Quu", &self.quu),
        ] {
            if list.len() != big_t {
                return Err(Error::DimensionMismatch(format!(
                    "{name} has {} entries, expected {big_t}",
                    list.len()
                )));
            }
        }
        for t in 0..big_t {
            shape("Fx", t, &self.fx[t], n, n)?;
            shape("Fu", t, &self.fu[t], n, m)?;
            shape("Qxx", t, &self.qxx[t], n, n)?;
            shape("Quu", t, &self.quu[t], m, m)?;
        }
        shape("QxxT", big_t, &self.qxx_final, n, n)?;
        if self.x0.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "x0 has length {}, expected {n}",
                self.x0.len()
            )));
        }
        finite("x0", self.x0.iter())?;
        for c in &self.local_constraints {
            self.check_local(c)?;
        }
        for c in &self.cross_constraints {
            self.check_cross(c)?;
        }
        Ok(())
    }

    fn check_local(&self, c: &LocalConstraint) -> Result<()> {
        if c.t > self.horizon {
            return Err(Error::DimensionMismatch(format!(
                "local constraint at t={} beyond horizon {}",
                c.t, self.horizon
            )));
        }
        let l = c.g.len();
        if l == 0 {
            return Err(Error::DimensionMismatch(format!(
                "local constraint at t={} has no rows",
                c.t
            )));
        }
        shape("Gx", c.t, &c.gx, l, self.n)?;
        if let Some(gu) = &c.gu {
            if c.t == self.horizon {
                return Err(Error::DimensionMismatch(
                    "terminal local constraint cannot involve a control".into(),
                ));
            }
            shape("Gu", c.t, gu, l, self.m)?;
        }
        finite("g", c.g.iter())
    }

    fn check_cross(&self, c: &CrossConstraint) -> Result<()> {
        let rows = c.s.len();
        if rows == 0 || c.terms.is_empty() {
            return Err(Error::DimensionMismatch(
                "cross constraint needs terms and rows".into(),
            ));
        }
        let mut seen = BTreeSet::new();
        for term in &c.terms {
            let (limit, dim) = match term.var.kind {
                VarKind::State => (self.horizon, self.n),
                VarKind::Control => (
                    self.horizon.checked_sub(1).ok_or_else(|| {
                        Error::DimensionMismatch(
                            "control term in a problem without controls".into(),
                        )
                    })?,
                    self.m,
                ),
            };
            if term.var.t > limit {
                return Err(Error::DimensionMismatch(format!(
                    "cross term {} outside the horizon",
                    term.var
                )));
            }
            if !seen.insert(term.var) {
                return Err(Error::InvalidInput(format!(
                    "cross constraint repeats {}",
                    term.var
                )));
            }
            shape("S", term.var.t, &term.coeff, rows, dim)?;
        }
        finite("s", c.s.iter())
    }
}

fn shape(name: &str, t: usize, mat: &Mat, rows: usize, cols: usize) -> Result<()> {
    if mat.nrows() != rows || mat.ncols() != cols {
        return Err(Error::DimensionMismatch(format!(
            "{name} at t={t} is {}x{}, expected {rows}x{cols}",
            mat.nrows(),
            mat.ncols()
        )));
    }
    finite(name, mat.iter())
}

fn finite<'a>(name: &str, mut values: impl Iterator<Item = &'a f64>) -> Result<()> {
    if values.any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "{name} has a non-finite entry"
        )));
    }
    Ok(())
}

/// Rows `L` with `LᵀL = q`, dropping null directions; `None` for a zero
/// matrix. Rejects asymmetric or indefinite input.
pub(crate) fn cost_sqrt(q: &Mat, label: &str) -> Result<Option<Mat>> {
    let scale = q.amax().max(1.0);
    if (q - q.transpose()).amax() > 1e-10 * scale {
        return Err(Error::InvalidCost(format!("{label} is not symmetric")));
    }
    if q.iter().all(|v| *v == 0.0) {
        return Ok(None);
    }
    if let Some(chol) = Cholesky::new(q.clone()) {
        return Ok(Some(chol.l().transpose()));
    }
    let eig = SymmetricEigen::new(q.clone());
    let top = eig.eigenvalues.amax();
    if eig.eigenvalues.min() < -1e-10 * scale {
        return Err(Error::InvalidCost(format!(
            "{label} is not positive semidefinite"
        )));
    }
    let keep: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&i| eig.eigenvalues[i] > 1e-12 * top)
        .collect();
    if keep.is_empty() {
        return Ok(None);
    }
    let mut l = Mat::zeros(keep.len(), q.ncols());
    for (r, &i) in keep.iter().enumerate() {
        let s = eig.eigenvalues[i].sqrt();
        for c in 0..q.ncols() {
            l[(r, c)] = s * eig.eigenvectors[(c, i)];
        }
    }
    Ok(Some(l))
}
