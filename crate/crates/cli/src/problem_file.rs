//! JSON problem files.
//!
//! ```json
//! {
//!   "n": 1, "m": 1, "T": 1,
//!   "dynamics": {"Fx": [[1]], "Fu": [[1]]},
//!   "costs": {"Qxx": [[1]], "Quu": [[1]], "QxxT": [[1]]},
//!   "x0": [1],
//!   "local_constraints": [{"t": 1, "Gx": [[1]], "g": [-0.5]}],
//!   "cross_constraints": [{"terms": [{"kind": "x", "t": 1, "S": [[1]]}], "s": [0]}]
//! }
//! ```
//!
//! Matrices are row-major nested arrays. `dynamics`, `Qxx` and `Quu` are
//! either one matrix for every step or a list of `{"t", ...}` entries covering
//! each step once. Local constraints read `Gx·x_t + Gu·u_t + g = 0`, cross
//! constraints `Σ S·z + s = 0`. Both constraint lists may be omitted.

use std::path::Path;

use eclqr_core::{
    CrossConstraint, CrossTerm, EcLqrProblem, LocalConstraint, Mat, VarKey, VarKind, Vector,
};
use serde::{Deserialize, Serialize};

type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub dynamics: Dynamics,
    pub costs: Costs,
    pub x0: Vec<f64>,
    #[serde(default)]
    pub local_constraints: Vec<LocalEntry>,
    #[serde(default)]
    pub cross_constraints: Vec<CrossEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Dynamics {
    Broadcast(DynamicsPair),
    PerStep(Vec<DynamicsStep>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsPair {
    #[serde(rename = "Fx")]
    pub fx: Rows,
    #[serde(rename = "Fu")]
    pub fu: Rows,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsStep {
    pub t: usize,
    #[serde(rename = "Fx")]
    pub fx: Rows,
    #[serde(rename = "Fu")]
    pub fu: Rows,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Costs {
    #[serde(rename = "Qxx")]
    pub qxx: CostSeries,
    #[serde(rename = "Quu")]
    pub quu: CostSeries,
    #[serde(rename = "QxxT")]
    pub qxx_final: Rows,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CostSeries {
    Broadcast(Rows),
    PerStep(Vec<CostStep>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostStep {
    pub t: usize,
    pub value: Rows,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalEntry {
    pub t: usize,
    #[serde(rename = "Gx")]
    pub gx: Rows,
    #[serde(rename = "Gu", default, skip_serializing_if = "Option::is_none")]
    pub gu: Option<Rows>,
    pub g: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossEntry {
    pub terms: Vec<TermEntry>,
    pub s: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermEntry {
    pub kind: TermKind,
    pub t: usize,
    #[serde(rename = "S")]
    pub s: Rows,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TermKind {
    #[serde(rename = "x")]
    State,
    #[serde(rename = "u")]
    Control,
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed problem file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid problem: {0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> LoadError {
    LoadError::Invalid(msg.into())
}

fn to_mat(rows: &Rows, what: &str) -> Result<Mat, LoadError> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || cols == 0 {
        return Err(invalid(format!("{what} is empty")));
    }
    if rows.iter().any(|r| r.len() != cols) {
        return Err(invalid(format!("{what} has rows of different lengths")));
    }
    Ok(Mat::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

fn from_mat(m: &Mat) -> Rows {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Expand a per-step list into one entry per `t < horizon`.
fn per_step<T: Clone>(
    entries: Vec<(usize, T)>,
    horizon: usize,
    what: &str,
) -> Result<Vec<T>, LoadError> {
    let mut slots: Vec<Option<T>> = vec![None; horizon];
    for (t, v) in entries {
        let slot = slots
            .get_mut(t)
            .ok_or_else(|| invalid(format!("{what} entry for t={t} is outside 0..{horizon}")))?;
        if slot.replace(v).is_some() {
            return Err(invalid(format!("{what} has two entries for t={t}")));
        }
    }
    slots
        .into_iter()
        .enumerate()
        .map(|(t, v)| v.ok_or_else(|| invalid(format!("{what} has no entry for t={t}"))))
        .collect()
}

fn cost_series(c: &CostSeries, horizon: usize, what: &str) -> Result<Vec<Mat>, LoadError> {
    match c {
        CostSeries::Broadcast(rows) => Ok(vec![to_mat(rows, what)?; horizon]),
        CostSeries::PerStep(steps) => {
            let mats = steps
                .iter()
                .map(|s| Ok((s.t, to_mat(&s.value, &format!("{what}[{}]", s.t))?)))
                .collect::<Result<Vec<_>, LoadError>>()?;
            per_step(mats, horizon, what)
        }
    }
}

fn series_entry(mats: &[Mat]) -> CostSeries {
    match mats.first() {
        Some(first) if mats.iter().all(|q| q == first) => CostSeries::Broadcast(from_mat(first)),
        _ => CostSeries::PerStep(
            mats.iter()
                .enumerate()
                .map(|(t, q)| CostStep {
                    t,
                    value: from_mat(q),
                })
                .collect(),
        ),
    }
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self, LoadError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, LoadError> {
        let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem files always serialize")
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_json() + "\n")
    }

    /// Build and validate the problem.
    pub fn to_problem(&self) -> Result<EcLqrProblem, LoadError> {
        let horizon = self.horizon;
        let (fx, fu) = match &self.dynamics {
            Dynamics::Broadcast(d) => (
                vec![to_mat(&d.fx, "Fx")?; horizon],
                vec![to_mat(&d.fu, "Fu")?; horizon],
            ),
            Dynamics::PerStep(steps) => {
                let pairs = steps
                    .iter()
                    .map(|s| {
                        let fx = to_mat(&s.fx, &format!("Fx[{}]", s.t))?;
                        let fu = to_mat(&s.fu, &format!("Fu[{}]", s.t))?;
                        Ok((s.t, (fx, fu)))
                    })
                    .collect::<Result<Vec<_>, LoadError>>()?;
                per_step(pairs, horizon, "dynamics")?.into_iter().unzip()
            }
        };
        let local_constraints = self
            .local_constraints
            .iter()
            .enumerate()
            .map(|(i, c)| {
                Ok(LocalConstraint {
                    t: c.t,
                    gx: to_mat(&c.gx, &format!("local_constraints[{i}].Gx"))?,
                    gu: c
                        .gu
                        .as_ref()
                        .map(|gu| to_mat(gu, &format!("local_constraints[{i}].Gu")))
                        .transpose()?,
                    g: Vector::from_column_slice(&c.g),
                })
            })
            .collect::<Result<Vec<_>, LoadError>>()?;
        let cross_constraints = self
            .cross_constraints
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let terms = c
                    .terms
                    .iter()
                    .enumerate()
                    .map(|(j, term)| {
                        let kind = match term.kind {
                            TermKind::State => VarKind::State,
                            TermKind::Control => VarKind::Control,
                        };
                        Ok(CrossTerm {
                            var: VarKey { t: term.t, kind },
                            coeff: to_mat(
                                &term.s,
                                &format!("cross_constraints[{i}].terms[{j}].S"),
                            )?,
                        })
                    })
                    .collect::<Result<Vec<_>, LoadError>>()?;
                Ok(CrossConstraint {
                    terms,
                    s: Vector::from_column_slice(&c.s),
                })
            })
            .collect::<Result<Vec<_>, LoadError>>()?;

        let p = EcLqrProblem {
            n: self.n,
            m: self.m,
            horizon,
            fx,
            fu,
            qxx: cost_series(&self.costs.qxx, horizon, "Qxx")?,
            quu: cost_series(&self.costs.quu, horizon, "Quu")?,
            qxx_final: to_mat(&self.costs.qxx_final, "QxxT")?,
            x0: Vector::from_column_slice(&self.x0),
            local_constraints,
            cross_constraints,
        };
        p.validate().map_err(|e| invalid(e.to_string()))?;
        Ok(p)
    }

    /// Inverse of [`ProblemFile::to_problem`]; uses the broadcast forms when
    /// every step is identical.
    pub fn from_problem(p: &EcLqrProblem) -> Self {
        let same_dynamics =
            p.fx.windows(2).all(|w| w[0] == w[1]) && p.fu.windows(2).all(|w| w[0] == w[1]);
        let dynamics = if same_dynamics && p.horizon > 0 {
            Dynamics::Broadcast(DynamicsPair {
                fx: from_mat(&p.fx[0]),
                fu: from_mat(&p.fu[0]),
            })
        } else {
            Dynamics::PerStep(
                (0..p.horizon)
                    .map(|t| DynamicsStep {
                        t,
                        fx: from_mat(&p.fx[t]),
                        fu: from_mat(&p.fu[t]),
                    })
                    .collect(),
            )
        };
        Self {
            n: p.n,
            m: p.m,
            horizon: p.horizon,
            dynamics,
            costs: Costs {
                qxx: series_entry(&p.qxx),
                quu: series_entry(&p.quu),
                qxx_final: from_mat(&p.qxx_final),
            },
            x0: p.x0.iter().copied().collect(),
            local_constraints: p
                .local_constraints
                .iter()
                .map(|c| LocalEntry {
                    t: c.t,
                    gx: from_mat(&c.gx),
                    gu: c.gu.as_ref().map(from_mat),
                    g: c.g.iter().copied().collect(),
                })
                .collect(),
            cross_constraints: p
                .cross_constraints
                .iter()
                .map(|c| CrossEntry {
                    terms: c
                        .terms
                        .iter()
                        .map(|term| TermEntry {
                            kind: if term.var.is_state() {
                                TermKind::State
                            } else {
                                TermKind::Control
                            },
                            t: term.var.t,
                            s: from_mat(&term.coeff),
                        })
                        .collect(),
                    s: c.s.iter().copied().collect(),
                })
                .collect(),
        }
    }
}
