//! Number formatting and the CSV layouts written by the commands.

use std::fmt::Write as _;

use eclqr_core::{ConstraintToGo, Policy, ValueRecord, VarKey, VarKind, Vector};

/// `printf("%.12g")`: 12 significant digits, trailing zeros dropped,
/// scientific notation outside `1e-4 ≤ |v| < 1e12`.
pub fn fmt_num(v: f64) -> String {
    const DIGITS: i32 = 12;
    if v == 0.0 {
        return if v.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..DIGITS).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", strip_zeros(mantissa), exp.abs())
    } else {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        strip_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn push_all<'a>(line: &mut String, values: impl IntoIterator<Item = &'a f64>) {
    for v in values {
        line.push(',');
        line.push_str(&fmt_num(*v));
    }
}

fn kind_tag(k: VarKind) -> &'static str {
    match k {
        VarKind::State => "x",
        VarKind::Control => "u",
    }
}

/// Header `t,x_0..,u_0..`; one row per step, control fields empty on the last.
pub fn trajectory_csv(xs: &[Vector], us: &[Vector]) -> String {
    let n = xs.first().map_or(0, |x| x.len());
    let m = us.first().map_or(0, |u| u.len());
    let mut out = String::from("t");
    (0..n).for_each(|i| write!(out, ",x_{i}").unwrap());
    (0..m).for_each(|i| write!(out, ",u_{i}").unwrap());
    out.push('\n');
    for (t, x) in xs.iter().enumerate() {
        let mut line = t.to_string();
        push_all(&mut line, x.iter());
        match us.get(t) {
            Some(u) => push_all(&mut line, u.iter()),
            None => (0..m).for_each(|_| line.push(',')),
        }
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// One row per (control, parent): `t,parent_kind,parent_t,K…,k…` with `K`
/// row-major. `K` fields are padded to the widest parent so every row has the
/// same number of columns.
pub fn gains_csv(policies: &[Policy], m: usize) -> String {
    let width = policies
        .iter()
        .flat_map(|p| p.gains.iter().map(|g| g.ncols()))
        .max()
        .unwrap_or(0);
    let mut out = String::from("t,parent_kind,parent_t");
    (0..m * width).for_each(|i| write!(out, ",K_{i}").unwrap());
    (0..m).for_each(|i| write!(out, ",k_{i}").unwrap());
    out.push('\n');
    for pol in policies {
        for (parent, g) in pol.parents.iter().zip(&pol.gains) {
            let mut line = format!("{},{},{}", pol.t, kind_tag(parent.kind), parent.t);
            push_all(&mut line, g.transpose().iter());
            (g.len()..m * width).for_each(|_| line.push(','));
            push_all(&mut line, pol.k.iter());
            out.push_str(&line);
            out.push('\n');
        }
    }
    out
}

fn parent_list(parents: &[VarKey]) -> String {
    parents
        .iter()
        .map(|p| p.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Per control step: cost-to-go `zᵀVz + vᵀz` and constraint-to-go `Hz = h`
/// over the stacked parents `z`. Rows have variable length:
/// `t,parents,dim,h_rows` then `V` (dim², row-major), `v` (dim),
/// `H` (h_rows·dim, row-major) and `h` (h_rows).
pub fn values_csv(values: &[ValueRecord], ctgs: &[ConstraintToGo]) -> String {
    let mut out = String::from("t,parents,dim,h_rows,V,v,H,h\n");
    for (v, c) in values.iter().zip(ctgs) {
        let mut line = format!(
            "{},{},{},{}",
            v.t,
            parent_list(&v.parents),
            v.quadratic.nrows(),
            c.matrix.nrows()
        );
        push_all(&mut line, v.quadratic.transpose().iter());
        push_all(&mut line, v.linear.iter());
        push_all(&mut line, c.matrix.transpose().iter());
        push_all(&mut line, c.rhs.iter());
        out.push_str(&line);
        out.push('\n');
    }
    out
}
