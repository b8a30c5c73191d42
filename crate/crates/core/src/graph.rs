//! Gaussian factor graphs with hard-constraint factors, and variable
//! elimination over them.
//!
//! Eliminating a variable stacks every adjacent factor into one
//! [`WeightedSystem`] (columns: the variable, then its separator in [`VarKey`]
//! order), factors it with [`linalg::eliminate_block`], keeps the eliminated
//! rows as a [`Conditional`] and hands the remainder back to the graph as at
//! most two new factors on the separator: one objective, one constraint.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, LinalgError, Result};
use crate::linalg::{self, Mat, RowWeight, TriangularBlock, Vector, WeightedSystem, ZERO_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarKind {
    Control,
    State,
}

/// A trajectory variable. Ordered by time, then control before state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarKey {
    pub t: usize,
    pub kind: VarKind,
}

impl VarKey {
    pub fn state(t: usize) -> Self {
        Self {
            t,
            kind: VarKind::State,
        }
    }

    pub fn control(t: usize) -> Self {
        Self {
            t,
            kind: VarKind::Control,
        }
    }

    pub fn is_state(&self) -> bool {
        self.kind == VarKind::State
    }
}

impl fmt::Display for VarKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            VarKind::State => write!(f, "x{}", self.t),
            VarKind::Control => write!(f, "u{}", self.t),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorKind {
    /// Whitened least-squares rows (unit weight).
    Objective,
    /// Rows that must hold exactly.
    Constraint,
}

/// A block row `Σ blocks[i]·keys[i] = rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    keys: Vec<VarKey>,
    blocks: Vec<Mat>,
    rhs: Vector,
    kind: FactorKind,
}

impl Factor {
    pub fn new(kind: FactorKind, keys: Vec<VarKey>, blocks: Vec<Mat>, rhs: Vector) -> Result<Self> {
        if keys.len() != blocks.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} keys but {} blocks",
                keys.len(),
                blocks.len()
            )));
        }
        let unique: BTreeSet<_> = keys.iter().collect();
        if unique.len() != keys.len() {
            return Err(Error::InvalidInput(
                "factor references a variable twice".into(),
            ));
        }
        if let Some(b) = blocks.iter().find(|b| b.nrows() != rhs.len()) {
            return Err(Error::DimensionMismatch(format!(
                "block has {} rows, rhs has {}",
                b.nrows(),
                rhs.len()
            )));
        }
        if blocks
            .iter()
            .flat_map(|b| b.iter())
            .chain(rhs.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidInput("non-finite factor entry".into()));
        }
        Ok(Self {
            keys,
            blocks,
            rhs,
            kind,
        })
    }

    pub fn objective(keys: Vec<VarKey>, blocks: Vec<Mat>, rhs: Vector) -> Result<Self> {
        Self::new(FactorKind::Objective, keys, blocks, rhs)
    }

    pub fn constraint(keys: Vec<VarKey>, blocks: Vec<Mat>, rhs: Vector) -> Result<Self> {
        Self::new(FactorKind::Constraint, keys, blocks, rhs)
    }

    /// Objective `‖Σ Aᵢxᵢ − b‖²_Σ` stored as `L·Aᵢ`, `L·b` where `LᵀL = Σ⁻¹`.
    pub fn whitened(
        keys: Vec<VarKey>,
        blocks: Vec<Mat>,
        rhs: Vector,
        sqrt_information: &Mat,
    ) -> Result<Self> {
        if sqrt_information.ncols() != rhs.len() {
            return Err(Error::DimensionMismatch(format!(
                "square-root information has {} columns, rhs has {} rows",
                sqrt_information.ncols(),
                rhs.len()
            )));
        }
        let blocks = blocks
            .iter()
            .map(|b| {
                if b.nrows() != rhs.len() {
                    return Err(Error::DimensionMismatch(
                        "block rows differ from rhs".into(),
                    ));
                }
                Ok(sqrt_information * b)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::objective(keys, blocks, sqrt_information * rhs)
    }

    pub fn keys(&self) -> &[VarKey] {
        &self.keys
    }

    pub fn blocks(&self) -> &[Mat] {
        &self.blocks
    }

    pub fn block(&self, key: VarKey) -> Option<&Mat> {
        self.keys
            .iter()
            .position(|k| *k == key)
            .map(|i| &self.blocks[i])
    }

    pub fn rhs(&self) -> &Vector {
        &self.rhs
    }

    pub fn kind(&self) -> FactorKind {
        self.kind
    }

    pub fn rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn involves(&self, key: VarKey) -> bool {
        self.keys.contains(&key)
    }

    /// `A·z − b` for the given assignment.
    pub fn residual(&self, values: &BTreeMap<VarKey, Vector>) -> Result<Vector> {
        let mut r = -self.rhs.clone();
        for (k, b) in self.keys.iter().zip(&self.blocks) {
            let v = values.get(k).ok_or(Error::UnknownVariable(*k))?;
            if v.len() != b.ncols() {
                return Err(Error::DimensionMismatch(format!(
                    "{k} has length {}",
                    v.len()
                )));
            }
            r += b * v;
        }
        Ok(r)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FactorGraph {
    dims: BTreeMap<VarKey, usize>,
    factors: Vec<Factor>,
}

impl FactorGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_variable(&mut self, key: VarKey, dim: usize) -> Result<()> {
        if dim == 0 {
            return Err(Error::DimensionMismatch(format!("{key} has dimension 0")));
        }
        match self.dims.get(&key) {
            Some(&prev) if prev != dim => Err(Error::DimensionMismatch(format!(
                "{key} redeclared with dimension {dim} (was {prev})"
            ))),
            _ => {
                self.dims.insert(key, dim);
                Ok(())
            }
        }
    }

    pub fn add_factor(&mut self, factor: Factor) -> Result<()> {
        for (k, b) in factor.keys.iter().zip(&factor.blocks) {
            let dim = *self.dims.get(k).ok_or(Error::UnknownVariable(*k))?;
            if b.ncols() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "block for {k} has {} columns, variable has dimension {dim}",
                    b.ncols()
                )));
            }
        }
        self.factors.push(factor);
        Ok(())
    }

    pub fn dims(&self) -> &BTreeMap<VarKey, usize> {
        &self.dims
    }

    pub fn dim(&self, key: VarKey) -> Option<usize> {
        self.dims.get(&key).copied()
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }
}

/// `frontal = rhs − Σ parent_blocks·parents`, as unit upper-triangular rows
/// `[U | B₁ … B_p | d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conditional {
    pub frontal: VarKey,
    pub parents: Vec<VarKey>,
    parent_dims: Vec<usize>,
    rows: WeightedSystem,
}

impl Conditional {
    pub fn rows(&self) -> &WeightedSystem {
        &self.rows
    }

    pub fn frontal_dim(&self) -> usize {
        self.rows.rows()
    }

    pub fn parent_dims(&self) -> &[usize] {
        &self.parent_dims
    }

    /// Column block of the rows belonging to `parents[i]`.
    pub fn parent_block(&self, i: usize) -> Mat {
        let start = self.frontal_dim() + self.parent_dims[..i].iter().sum::<usize>();
        self.rows
            .a()
            .columns(start, self.parent_dims[i])
            .into_owned()
    }

    /// Explicit form `frontal = offset − Σ gains[i]·parents[i]`.
    pub fn explicit(&self) -> Result<(Vec<Mat>, Vector)> {
        let (gain, offset) = linalg::explicit_affine(&self.rows, self.frontal_dim())?;
        let mut start = 0;
        let gains = self
            .parent_dims
            .iter()
            .map(|&d| {
                let g = gain.columns(start, d).into_owned();
                start += d;
                g
            })
            .collect();
        Ok((gains, offset))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EliminationStep {
    pub conditional: Conditional,
    /// Objective then constraint remainder on the separator, each only if nonempty.
    pub new_factors: Vec<Factor>,
    /// Squared rhs of objective rows that lost all their coefficients.
    pub cost_offset: f64,
    pub macs: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BayesNet {
    /// In elimination order; evaluate back to front.
    pub conditionals: Vec<Conditional>,
    pub residual_factors: Vec<Factor>,
    pub cost_offset: f64,
    pub macs: u64,
}

fn eliminate_factors(
    key: VarKey,
    dims: &BTreeMap<VarKey, usize>,
    adjacent: &[&Factor],
) -> Result<EliminationStep> {
    if adjacent.is_empty() {
        return Err(Error::Underdetermined(key));
    }
    let k = *dims.get(&key).ok_or(Error::UnknownVariable(key))?;
    let separator: Vec<VarKey> = adjacent
        .iter()
        .flat_map(|f| f.keys.iter().copied())
        .filter(|&v| v != key)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    let mut offsets = BTreeMap::new();
    offsets.insert(key, 0);
    let mut cols = k;
    let mut sep_dims = Vec::with_capacity(separator.len());
    for s in &separator {
        let d = *dims.get(s).ok_or(Error::UnknownVariable(*s))?;
        offsets.insert(*s, cols);
        sep_dims.push(d);
        cols += d;
    }

    let n_rows: usize = adjacent.iter().map(|f| f.rows()).sum();
    let mut a = Mat::zeros(n_rows, cols);
    let mut b = Vector::zeros(n_rows);
    let mut weights = Vec::with_capacity(n_rows);
    let mut row = 0;
    for f in adjacent {
        let r = f.rows();
        for (fk, blk) in f.keys.iter().zip(&f.blocks) {
            a.view_mut((row, offsets[fk]), (r, blk.ncols()))
                .copy_from(blk);
        }
        b.rows_mut(row, r).copy_from(&f.rhs);
        let w = match f.kind {
            FactorKind::Objective => RowWeight::UNIT,
            FactorKind::Constraint => RowWeight::Constrained,
        };
        weights.extend(std::iter::repeat_n(w, r));
        row += r;
    }

    let sys = WeightedSystem::new(a, b, weights)?;
    let pf = linalg::eliminate_block(&sys, k).map_err(|e| match e {
        LinalgError::Underdetermined(_) => Error::Underdetermined(key),
        LinalgError::Infeasible(_) => Error::Infeasible(Some(key)),
        other => Error::Linalg(other),
    })?;

    let conditional = Conditional {
        frontal: key,
        parents: separator.clone(),
        parent_dims: sep_dims.clone(),
        rows: pf.eliminated,
    };

    let rem = &pf.remainder;
    let mut cost_offset = 0.0;
    let mut objective_rows = Vec::new();
    let mut constraint_rows = Vec::new();
    for i in 0..rem.rows() {
        let coef = rem.a().row(i);
        let empty = coef
            .columns(k, cols - k)
            .iter()
            .all(|v| v.abs() <= ZERO_TOL);
        if rem.weights()[i].is_constrained() {
            constraint_rows.push(i);
        } else if empty {
            cost_offset += rem.b()[i] * rem.b()[i];
        } else {
            objective_rows.push(i);
        }
    }

    let mut new_factors = Vec::new();
    for (kind, rows) in [
        (FactorKind::Objective, objective_rows),
        (FactorKind::Constraint, constraint_rows),
    ] {
        if rows.is_empty() {
            continue;
        }
        let mut keys = Vec::new();
        let mut blocks = Vec::new();
        for (s, &d) in separator.iter().zip(&sep_dims) {
            let blk = Mat::from_fn(rows.len(), d, |r, c| rem.a()[(rows[r], offsets[s] + c)]);
            if blk.iter().any(|v| *v != 0.0) {
                keys.push(*s);
                blocks.push(blk);
            }
        }
        let rhs = Vector::from_iterator(rows.len(), rows.iter().map(|&r| rem.b()[r]));
        new_factors.push(Factor::new(kind, keys, blocks, rhs)?);
    }

    Ok(EliminationStep {
        conditional,
        new_factors,
        cost_offset,
        macs: pf.macs,
    })
}

/// Eliminate one variable from an immutable graph, returning the step and the
/// reduced graph.
pub fn eliminate_one(g: &FactorGraph, key: VarKey) -> Result<(EliminationStep, FactorGraph)> {
    if !g.dims.contains_key(&key) {
        return Err(Error::UnknownVariable(key));
    }
    let (adjacent, rest): (Vec<&Factor>, Vec<&Factor>) =
        g.factors.iter().partition(|f| f.involves(key));
    let step = eliminate_factors(key, &g.dims, &adjacent)?;
    let mut dims = g.dims.clone();
    dims.remove(&key);
    let factors = rest
        .into_iter()
        .cloned()
        .chain(step.new_factors.iter().cloned())
        .collect();
    Ok((step, FactorGraph { dims, factors }))
}

/// Incremental elimination with an adjacency index, so each step only touches
/// the factors next to the eliminated variable.
#[derive(Debug, Clone)]
pub struct Eliminator {
    dims: BTreeMap<VarKey, usize>,
    factors: Vec<Option<Factor>>,
    adjacency: BTreeMap<VarKey, BTreeSet<usize>>,
    net: BayesNet,
}

impl Eliminator {
    pub fn new(g: FactorGraph) -> Self {
        let mut adjacency: BTreeMap<VarKey, BTreeSet<usize>> =
            g.dims.keys().map(|k| (*k, BTreeSet::new())).collect();
        for (i, f) in g.factors.iter().enumerate() {
            for k in &f.keys {
                adjacency.entry(*k).or_default().insert(i);
            }
        }
        Self {
            dims: g.dims,
            factors: g.factors.into_iter().map(Some).collect(),
            adjacency,
            net: BayesNet::default(),
        }
    }

    pub fn eliminate(&mut self, key: VarKey) -> Result<EliminationStep> {
        if !self.dims.contains_key(&key) {
            return Err(Error::UnknownVariable(key));
        }
        let ids = self.adjacency.remove(&key).unwrap_or_default();
        let adjacent: Vec<&Factor> = ids
            .iter()
            .filter_map(|&i| self.factors[i].as_ref())
            .collect();
        let step = eliminate_factors(key, &self.dims, &adjacent)?;

        for &i in &ids {
            if let Some(f) = self.factors[i].take() {
                for k in f.keys.iter().filter(|k| **k != key) {
                    if let Some(set) = self.adjacency.get_mut(k) {
                        set.remove(&i);
                    }
                }
            }
        }
        self.dims.remove(&key);
        for f in &step.new_factors {
            let id = self.factors.len();
            for k in &f.keys {
                self.adjacency.entry(*k).or_default().insert(id);
            }
            self.factors.push(Some(f.clone()));
        }

        self.net.conditionals.push(step.conditional.clone());
        self.net.cost_offset += step.cost_offset;
        self.net.macs += step.macs;
        Ok(step)
    }

    /// Factors still attached to the graph.
    pub fn remaining(&self) -> impl Iterator<Item = &Factor> {
        self.factors.iter().flatten()
    }

    pub fn finish(mut self) -> Result<BayesNet> {
        if !self.dims.is_empty() {
            let left: Vec<String> = self.dims.keys().map(|k| k.to_string()).collect();
            return Err(Error::InvalidOrdering(format!(
                "not eliminated: {}",
                left.join(", ")
            )));
        }
        self.net.residual_factors = self.factors.into_iter().flatten().collect();
        Ok(self.net)
    }
}

/// Eliminate every variable of `g` in `ordering`.
pub fn eliminate_all(g: &FactorGraph, ordering: &[VarKey]) -> Result<BayesNet> {
    check_ordering(g, ordering)?;
    let mut elim = Eliminator::new(g.clone());
    for &key in ordering {
        elim.eliminate(key)?;
    }
    elim.finish()
}

pub(crate) fn check_ordering(g: &FactorGraph, ordering: &[VarKey]) -> Result<()> {
    let seen: BTreeSet<_> = ordering.iter().copied().collect();
    if seen.len() != ordering.len() {
        return Err(Error::InvalidOrdering("ordering repeats a variable".into()));
    }
    if let Some(k) = ordering.iter().find(|k| !g.dims.contains_key(k)) {
        return Err(Error::UnknownVariable(*k));
    }
    if seen.len() != g.dims.len() {
        return Err(Error::InvalidOrdering(format!(
            "ordering covers {} of {} variables",
            seen.len(),
            g.dims.len()
        )));
    }
    Ok(())
}

/// Back-substitute through the Bayes net, last conditional first.
pub fn solve_assignment(bn: &BayesNet) -> Result<BTreeMap<VarKey, Vector>> {
    let mut offsets: BTreeMap<VarKey, (usize, usize)> = BTreeMap::new();
    let mut total = 0;
    for c in &bn.conditionals {
        offsets.insert(c.frontal, (total, c.frontal_dim()));
        total += c.frontal_dim();
    }
    let span = |(start, len): (usize, usize)| (start..start + len).collect::<Vec<_>>();

    let mut indices = Vec::with_capacity(bn.conditionals.len());
    for c in &bn.conditionals {
        let frontal = span(offsets[&c.frontal]);
        let mut separator = Vec::new();
        for (p, &d) in c.parents.iter().zip(&c.parent_dims) {
            let &(start, len) = offsets.get(p).ok_or(Error::MissingParent(*p))?;
            if len != d {
                return Err(Error::DimensionMismatch(format!(
                    "{p} has dimension {len}, conditional expects {d}"
                )));
            }
            separator.extend(start..start + len);
        }
        indices.push((frontal, separator));
    }

    let blocks: Vec<TriangularBlock<'_>> = bn
        .conditionals
        .iter()
        .zip(&indices)
        .rev()
        .map(|(c, (frontal, separator))| TriangularBlock {
            frontal,
            separator,
            rows: &c.rows,
        })
        .collect();

    let owner = |idx: usize| {
        offsets
            .iter()
            .find(|(_, &(s, l))| idx >= s && idx < s + l)
            .map(|(k, _)| *k)
    };
    let values = linalg::back_solve(&blocks, vec![None; total]).map_err(|e| match e {
        LinalgError::MissingParent(i) | LinalgError::Unresolved(i) => match owner(i) {
            Some(k) => Error::MissingParent(k),
            None => Error::Linalg(e),
        },
        other => Error::Linalg(other),
    })?;

    Ok(offsets
        .into_iter()
        .map(|(k, (s, l))| (k, Vector::from_column_slice(&values[s..s + l])))
        .collect())
}
