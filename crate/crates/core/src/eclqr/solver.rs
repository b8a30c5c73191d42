use std::collections::{BTreeMap, BTreeSet};

use crate::eclqr::problem::{cost_sqrt, EcLqrProblem};
use crate::error::{Error, Result};
use crate::graph::{self, Eliminator, Factor, FactorGraph, FactorKind, VarKey, VarKind};
use crate::linalg::{Mat, Vector};

/// Feedback law `u_t = −Σ gains[i]·parents[i] + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub t: usize,
    pub parents: Vec<VarKey>,
    pub gains: Vec<Mat>,
    pub k: Vector,
}

impl Policy {
    pub fn gain(&self, parent: VarKey) -> Option<&Mat> {
        self.parents
            .iter()
            .position(|p| *p == parent)
            .map(|i| &self.gains[i])
    }

    pub fn apply(&self, mut value: impl FnMut(VarKey) -> Option<Vector>) -> Result<Vector> {
        let mut u = self.k.clone();
        for (p, g) in self.parents.iter().zip(&self.gains) {
            let v = value(*p).ok_or(Error::MissingParent(*p))?;
            u -= g * v;
        }
        Ok(u)
    }
}

/// Cost-to-go `zᵀ·quadratic·z − linearᵀ·z` over the stacked `parents`, up to
/// a constant.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueRecord {
    pub t: usize,
    pub parents: Vec<VarKey>,
    pub quadratic: Mat,
    pub linear: Vector,
}

/// Constraint-to-go `matrix·z = rhs` over the stacked `parents`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintToGo {
    pub t: usize,
    pub parents: Vec<VarKey>,
    pub matrix: Mat,
    pub rhs: Vector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub xs: Vec<Vector>,
    pub us: Vec<Vector>,
    pub policies: Vec<Policy>,
    pub values: Vec<ValueRecord>,
    pub ctgs: Vec<ConstraintToGo>,
    pub cost: f64,
    pub max_violation: f64,
    /// Multiply-accumulates spent in elimination.
    pub macs: u64,
}

/// Factor graph of the problem. Factor order: per step the state cost, the
/// control cost and the dynamics; then terminal cost, initial condition,
/// local constraints and cross constraints in list order.
pub fn build_graph(p: &EcLqrProblem) -> Result<FactorGraph> {
    assemble(p).map(|(g, _)| g)
}

/// The graph and the index of its initial-condition factor.
fn assemble(p: &EcLqrProblem) -> Result<(FactorGraph, usize)> {
    p.validate()?;
    let (n, m, big_t) = (p.n, p.m, p.horizon);
    let mut g = FactorGraph::new();
    for t in 0..=big_t {
        g.add_variable(VarKey::state(t), n)?;
        if t < big_t {
            g.add_variable(VarKey::control(t), m)?;
        }
    }

    let unary_cost = |key: VarKey, q: &Mat, label: String| -> Result<Option<Factor>> {
        cost_sqrt(q, &label)?
            .map(|l| {
                let rows = l.nrows();
                Factor::objective(vec![key], vec![l], Vector::zeros(rows))
            })
            .transpose()
    };

    for t in 0..big_t {
        if let Some(f) = unary_cost(VarKey::state(t), &p.qxx[t], format!("Qxx[{t}]"))? {
            g.add_factor(f)?;
        }
        if let Some(f) = unary_cost(VarKey::control(t), &p.quu[t], format!("Quu[{t}]"))? {
            g.add_factor(f)?;
        }
        g.add_factor(Factor::constraint(
            vec![VarKey::state(t + 1), VarKey::control(t), VarKey::state(t)],
            vec![Mat::identity(n, n), -&p.fu[t], -&p.fx[t]],
            Vector::zeros(n),
        )?)?;
    }
    if let Some(f) = unary_cost(VarKey::state(big_t), &p.qxx_final, "QxxT".into())? {
        g.add_factor(f)?;
    }
    let initial = g.factors().len();
    g.add_factor(Factor::constraint(
        vec![VarKey::state(0)],
        vec![Mat::identity(n, n)],
        p.x0.clone(),
    )?)?;

    for c in &p.local_constraints {
        let mut keys = vec![VarKey::state(c.t)];
        let mut blocks = vec![c.gx.clone()];
        if let Some(gu) = &c.gu {
            keys.push(VarKey::control(c.t));
            blocks.push(gu.clone());
        }
        g.add_factor(Factor::constraint(keys, blocks, -&c.g)?)?;
    }
    for c in &p.cross_constraints {
        let keys = c.terms.iter().map(|t| t.var).collect();
        let blocks = c.terms.iter().map(|t| t.coeff.clone()).collect();
        g.add_factor(Factor::constraint(keys, blocks, -&c.s)?)?;
    }
    Ok((g, initial))
}

/// `x_T, u_{T−1}, x_{T−1}, …, u_0, x_0`.
pub fn default_ordering(p: &EcLqrProblem) -> Vec<VarKey> {
    let mut order = Vec::with_capacity(2 * p.horizon + 1);
    order.push(VarKey::state(p.horizon));
    for t in (0..p.horizon).rev() {
        order.push(VarKey::control(t));
        order.push(VarKey::state(t));
    }
    order
}

pub fn solve(p: &EcLqrProblem) -> Result<Solution> {
    let (g, initial) = assemble(p)?;
    let ordering = default_ordering(p);
    graph::check_ordering(&g, &ordering)?;

    // the initial condition is data, not part of the constraint-to-go
    let mut native: BTreeMap<usize, Vec<Factor>> = BTreeMap::new();
    for (i, f) in g.factors().iter().enumerate() {
        if i == initial {
            continue;
        }
        if let [key] = f.keys() {
            if key.is_state() {
                native.entry(key.t).or_default().push(f.clone());
            }
        }
    }

    let mut elim = Eliminator::new(g);
    let mut values = Vec::with_capacity(p.horizon);
    let mut ctgs = Vec::with_capacity(p.horizon);
    for &key in &ordering {
        let step = elim.eliminate(key)?;
        if key.kind == VarKind::Control {
            let unary = native.get(&key.t).map(Vec::as_slice).unwrap_or(&[]);
            let (v, c) = records_at(key.t, &step.new_factors, unary)?;
            values.push(v);
            ctgs.push(c);
        }
    }
    let bn = elim.finish()?;
    let assignment = graph::solve_assignment(&bn)?;

    let mut policies = Vec::with_capacity(p.horizon);
    for c in bn
        .conditionals
        .iter()
        .filter(|c| c.frontal.kind == VarKind::Control)
    {
        let (gains, k) = c.explicit()?;
        policies.push(Policy {
            t: c.frontal.t,
            parents: c.parents.clone(),
            gains,
            k,
        });
    }
    policies.reverse();
    values.reverse();
    ctgs.reverse();

    let xs: Vec<Vector> = (0..=p.horizon)
        .map(|t| assignment[&VarKey::state(t)].clone())
        .collect();
    let us: Vec<Vector> = (0..p.horizon)
        .map(|t| assignment[&VarKey::control(t)].clone())
        .collect();
    let (cost, max_violation) = evaluate(p, &xs, &us)?;

    Ok(Solution {
        xs,
        us,
        policies,
        values,
        ctgs,
        cost,
        max_violation,
        macs: bn.macs,
    })
}

/// Cost-to-go and constraint-to-go right after `u_t` is eliminated: the new
/// factors from that step plus the factors native to `x_t` alone.
fn records_at(
    t: usize,
    produced: &[Factor],
    unary: &[Factor],
) -> Result<(ValueRecord, ConstraintToGo)> {
    let xt = VarKey::state(t);
    let pick = |kind: FactorKind| -> Vec<&Factor> {
        produced
            .iter()
            .chain(unary.iter())
            .filter(|f| f.kind() == kind)
            .collect()
    };
    let objectives = pick(FactorKind::Objective);
    let constraints = pick(FactorKind::Constraint);

    let mut parents: BTreeSet<VarKey> = produced
        .iter()
        .flat_map(|f| f.keys().iter().copied())
        .collect();
    parents.insert(xt);
    let parents: Vec<VarKey> = parents.into_iter().collect();

    let mut dims = BTreeMap::new();
    for f in produced.iter().chain(unary.iter()) {
        for (k, b) in f.keys().iter().zip(f.blocks()) {
            dims.insert(*k, b.ncols());
        }
    }
    let mut offsets = BTreeMap::new();
    let mut width = 0;
    for p in &parents {
        let d = *dims.get(p).ok_or(Error::UnknownVariable(*p))?;
        offsets.insert(*p, width);
        width += d;
    }

    let stack = |factors: &[&Factor]| -> (Mat, Vector) {
        let rows: usize = factors.iter().map(|f| f.rows()).sum();
        let mut a = Mat::zeros(rows, width);
        let mut b = Vector::zeros(rows);
        let mut r = 0;
        for f in factors {
            for (k, blk) in f.keys().iter().zip(f.blocks()) {
                a.view_mut((r, offsets[k]), (f.rows(), blk.ncols()))
                    .copy_from(blk);
            }
            b.rows_mut(r, f.rows()).copy_from(f.rhs());
            r += f.rows();
        }
        (a, b)
    };

    let (a, b) = stack(&objectives);
    let quadratic = a.transpose() * &a;
    let linear = 2.0 * a.transpose() * b;
    let (matrix, rhs) = stack(&constraints);
    Ok((
        ValueRecord {
            t,
            parents: parents.clone(),
            quadratic,
            linear,
        },
        ConstraintToGo {
            t,
            parents,
            matrix,
            rhs,
        },
    ))
}

/// Forward-simulate the policies from `x0_override` (or the problem's `x0`).
/// A policy may read the current and earlier states and earlier controls.
pub fn rollout(
    p: &EcLqrProblem,
    policies: &[Policy],
    x0_override: Option<&Vector>,
) -> Result<(Vec<Vector>, Vec<Vector>)> {
    let x0 = x0_override.unwrap_or(&p.x0);
    if x0.len() != p.n {
        return Err(Error::DimensionMismatch(format!(
            "x0 has length {}, expected {}",
            x0.len(),
            p.n
        )));
    }
    let by_t: BTreeMap<usize, &Policy> = policies.iter().map(|pol| (pol.t, pol)).collect();
    let mut xs = vec![x0.clone()];
    let mut us: Vec<Vector> = Vec::with_capacity(p.horizon);
    for t in 0..p.horizon {
        let pol = by_t
            .get(&t)
            .ok_or_else(|| Error::InvalidInput(format!("no policy for u{t}")))?;
        let u = pol.apply(|key| match key.kind {
            VarKind::State if key.t <= t => Some(xs[key.t].clone()),
            VarKind::Control if key.t < t => Some(us[key.t].clone()),
            _ => None,
        })?;
        if u.len() != p.m {
            return Err(Error::DimensionMismatch(format!(
                "policy for u{t} has length {}",
                u.len()
            )));
        }
        xs.push(&p.fx[t] * &xs[t] + &p.fu[t] * &u);
        us.push(u);
    }
    Ok((xs, us))
}

/// Objective value and the largest constraint residual (∞-norm) over the
/// dynamics, initial condition, local and cross constraints.
pub fn evaluate(p: &EcLqrProblem, xs: &[Vector], us: &[Vector]) -> Result<(f64, f64)> {
    if xs.len() != p.horizon + 1 || us.len() != p.horizon {
        return Err(Error::DimensionMismatch(format!(
            "trajectory has {} states and {} controls, horizon is {}",
            xs.len(),
            us.len(),
            p.horizon
        )));
    }
    if let Some(x) = xs.iter().find(|x| x.len() != p.n) {
        return Err(Error::DimensionMismatch(format!(
            "state of length {}",
            x.len()
        )));
    }
    if let Some(u) = us.iter().find(|u| u.len() != p.m) {
        return Err(Error::DimensionMismatch(format!(
            "control of length {}",
            u.len()
        )));
    }

    let quad = |q: &Mat, v: &Vector| v.dot(&(q * v));
    let mut cost = quad(&p.qxx_final, &xs[p.horizon]);
    for t in 0..p.horizon {
        cost += quad(&p.qxx[t], &xs[t]) + quad(&p.quu[t], &us[t]);
    }

    let mut viol: f64 = (&xs[0] - &p.x0).amax();
    for t in 0..p.horizon {
        let r = &xs[t + 1] - &p.fx[t] * &xs[t] - &p.fu[t] * &us[t];
        viol = viol.max(r.amax());
    }
    for c in &p.local_constraints {
        let mut r = &c.gx * &xs[c.t] + &c.g;
        if let Some(gu) = &c.gu {
            r += gu * &us[c.t];
        }
        viol = viol.max(r.amax());
    }
    for c in &p.cross_constraints {
        let mut r = c.s.clone();
        for term in &c.terms {
            let v = match term.var.kind {
                VarKind::State => &xs[term.var.t],
                VarKind::Control => &us[term.var.t],
            };
            r += &term.coeff * v;
        }
        viol = viol.max(r.amax());
    }
    Ok((cost, viol))
}
