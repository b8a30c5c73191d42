//! The `solve`, `simulate` and `verify` commands.
//!
//! Every command either completes and writes all of its files, or fails with
//! an exit code from [`exit`] and leaves no output files behind.

use std::io::Write;
use std::path::{Path, PathBuf};

use eclqr_core::oracles::{kkt_solve, riccati, KktSolution, RiccatiResult};
use eclqr_core::{evaluate, rollout, solve, EcLqrProblem, Error, Solution, Vector};

use crate::output::{fmt_num, gains_csv, trajectory_csv, values_csv};
use crate::problem_file::ProblemFile;

pub mod exit {
    pub const OK: i32 = 0;
    /// Unreadable or malformed input, invalid problem, I/O failure.
    pub const INPUT: i32 = 1;
    pub const INFEASIBLE: i32 = 2;
    pub const UNDERDETERMINED: i32 = 3;
    /// `--x0` override of the wrong length.
    pub const X0_DIMENSION: i32 = 4;
    /// `verify` found a disagreement beyond tolerance.
    pub const TOLERANCE: i32 = 5;
}

pub const TRAJECTORY_TOL: f64 = 1e-6;
pub const COST_TOL: f64 = 1e-6;
pub const GAIN_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Infeasible(_) => exit::INFEASIBLE,
            Error::Underdetermined(_) => exit::UNDERDETERMINED,
            _ => exit::INPUT,
        };
        Self::new(code, e.to_string())
    }
}

fn load(path: &Path) -> Result<EcLqrProblem, Failure> {
    ProblemFile::load(path)
        .and_then(|f| f.to_problem())
        .map_err(|e| Failure::new(exit::INPUT, e.to_string()))
}

fn io_failure(e: std::io::Error) -> Failure {
    Failure::new(exit::INPUT, format!("cannot write output: {e}"))
}

/// Write all files or none.
fn write_all(files: &[(&Path, String)]) -> Result<(), Failure> {
    let mut written: Vec<PathBuf> = Vec::new();
    for (path, text) in files {
        if let Err(e) = std::fs::write(path, text) {
            for w in &written {
                let _ = std::fs::remove_file(w);
            }
            return Err(Failure::new(
                exit::INPUT,
                format!("cannot write {}: {e}", path.display()),
            ));
        }
        written.push(path.to_path_buf());
    }
    Ok(())
}

fn summary(cost: f64, violation: f64) -> String {
    format!("cost={} violation={}", fmt_num(cost), fmt_num(violation))
}

pub fn cmd_solve(
    problem: &Path,
    traj: &Path,
    gains: &Path,
    values: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    let p = load(problem)?;
    let sol = solve(&p)?;
    let mut files = vec![
        (traj, trajectory_csv(&sol.xs, &sol.us)),
        (gains, gains_csv(&sol.policies, p.m)),
    ];
    if let Some(v) = values {
        files.push((v, values_csv(&sol.values, &sol.ctgs)));
    }
    write_all(&files)?;
    writeln!(out, "{}", summary(sol.cost, sol.max_violation)).map_err(io_failure)
}

/// Parse `"v1,v2,..."`.
pub fn parse_vector(text: &str) -> Result<Vector, Failure> {
    let values = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| Failure::new(exit::INPUT, format!("bad vector {text:?}: {e}")))?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Failure::new(
            exit::INPUT,
            format!("bad vector {text:?}: non-finite entry"),
        ));
    }
    Ok(Vector::from_vec(values))
}

pub fn cmd_simulate(
    problem: &Path,
    x0: &str,
    traj: &Path,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    let p = load(problem)?;
    let x0 = parse_vector(x0)?;
    if x0.len() != p.n {
        return Err(Failure::new(
            exit::X0_DIMENSION,
            format!("--x0 has {} entries, the problem has n = {}", x0.len(), p.n),
        ));
    }
    let sol = solve(&p)?;
    let (xs, us) = rollout(&p, &sol.policies, Some(&x0))?;
    let (cost, violation) = evaluate(&p.with_x0(x0)?, &xs, &us)?;
    write_all(&[(traj, trajectory_csv(&xs, &us))])?;
    writeln!(out, "{}", summary(cost, violation)).map_err(io_failure)
}

fn rel_diff<'a>(pairs: impl Iterator<Item = (&'a Vector, &'a Vector)>) -> f64 {
    pairs
        .map(|(a, b)| (a - b).amax() / b.amax().max(1.0))
        .fold(0.0, f64::max)
}

/// One line of the `verify` table.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.value <= self.tolerance
    }
}

/// Compare a solution with the KKT optimum and, when given, the Riccati gains.
pub fn compare(sol: &Solution, kkt: &KktSolution, ric: Option<&RiccatiResult>) -> Vec<Check> {
    let traj = rel_diff(sol.xs.iter().zip(&kkt.xs).chain(sol.us.iter().zip(&kkt.us)));
    let cost = (sol.cost - kkt.cost).abs() / kkt.cost.abs().max(1.0);
    let mut checks = vec![
        Check {
            name: "trajectory vs KKT",
            value: traj,
            tolerance: TRAJECTORY_TOL,
        },
        Check {
            name: "cost vs KKT",
            value: cost,
            tolerance: COST_TOL,
        },
    ];
    if let Some(ric) = ric {
        let gains = sol
            .policies
            .iter()
            .zip(&ric.gains)
            .map(|(pol, k)| (&pol.gains[0] - k).amax() / k.amax().max(1.0))
            .fold(0.0, f64::max);
        checks.push(Check {
            name: "gains vs Riccati",
            value: gains,
            tolerance: GAIN_TOL,
        });
    }
    checks
}

fn report(checks: &[Check], sol: &Solution, out: &mut dyn Write) -> Result<(), Failure> {
    let mut text = format!(
        "{:<20} {:<20} {:<10} status\n",
        "check", "max rel diff", "tolerance"
    );
    for c in checks {
        text += &format!(
            "{:<20} {:<20} {:<10} {}\n",
            c.name,
            fmt_num(c.value),
            fmt_num(c.tolerance),
            if c.passed() { "ok" } else { "FAIL" }
        );
    }
    text += &summary(sol.cost, sol.max_violation);
    writeln!(out, "{text}").map_err(io_failure)?;
    let failed: Vec<&str> = checks
        .iter()
        .filter(|c| !c.passed())
        .map(|c| c.name)
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::new(
            exit::TOLERANCE,
            format!("outside tolerance: {}", failed.join(", ")),
        ))
    }
}

pub fn cmd_verify(problem: &Path, out: &mut dyn Write) -> Result<(), Failure> {
    let p = load(problem)?;
    let sol = solve(&p)?;
    let kkt = kkt_solve(&p)?;
    let ric = if p.has_auxiliary_constraints() {
        None
    } else {
        Some(riccati(&p)?)
    };
    report(&compare(&sol, &kkt, ric.as_ref()), &sol, out)
}
