use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use eclqr_cli::ProblemFile;
use eclqr_core::random::random_eclqr;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn problems() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../problems")
}

fn problem(name: &str) -> String {
    problems().join(name).display().to_string()
}

fn eclqr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eclqr"))
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

struct Outputs {
    _dir: tempfile::TempDir,
    traj: String,
    gains: String,
    values: String,
}

fn outputs() -> Outputs {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n).display().to_string();
    Outputs {
        traj: p("traj.csv"),
        gains: p("gains.csv"),
        values: p("values.csv"),
        _dir: dir,
    }
}

fn solve(name: &str, o: &Outputs) -> Output {
    eclqr(&[
        "solve",
        &problem(name),
        "--traj",
        &o.traj,
        "--gains",
        &o.gains,
        "--values",
        &o.values,
    ])
}

fn read(p: &str) -> String {
    std::fs::read_to_string(p).unwrap()
}

fn parse_summary(stdout: &[u8]) -> (f64, f64) {
    let s = String::from_utf8_lossy(stdout);
    let line = s.lines().find(|l| l.starts_with("cost=")).unwrap();
    let mut parts = line.split(' ');
    let cost = parts.next().unwrap()["cost=".len()..].parse().unwrap();
    let viol = parts.next().unwrap()["violation=".len()..].parse().unwrap();
    (cost, viol)
}

#[test]
fn p7_trajectory_hits_waypoints() {
    let o = outputs();
    let out = solve("p7.json", &o);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let traj = read(&o.traj);
    let lines: Vec<&str> = traj.lines().collect();
    assert_eq!(lines.len(), 102);
    assert_eq!(lines[0], "t,x_0,x_1,x_2,u_0,u_1,u_2");
    assert!(lines[51].starts_with("50,1,2,3,"));
    assert_eq!(lines[101], "100,3,2,1,,,");
    let (_, viol) = parse_summary(&out.stdout);
    assert!(viol <= 1e-8);
    // one gains row per control: every parent set is just x_t
    assert_eq!(read(&o.gains).lines().count(), 101);
    assert_eq!(read(&o.values).lines().count(), 101);
}

#[test]
fn p9_gains_reference_period_start() {
    let o = outputs();
    assert_eq!(code(&solve("p9.json", &o)), 0);
    let gains = read(&o.gains);
    let rows: Vec<Vec<&str>> = gains
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    // 100 controls, the 95 inside a period have two parents
    assert_eq!(rows.len(), 195);
    assert!(rows.iter().any(|r| r[0] != r[2]));
    assert!(rows
        .iter()
        .filter(|r| r[0] != r[2])
        .all(|r| r[2].parse::<usize>().unwrap() % 20 == 0));
}

#[test]
fn outputs_are_deterministic() {
    let (a, b) = (outputs(), outputs());
    solve("p9.json", &a);
    solve("p9.json", &b);
    assert_eq!(read(&a.traj), read(&b.traj));
    assert_eq!(read(&a.gains), read(&b.gains));
    assert_eq!(read(&a.values), read(&b.values));
}

#[test]
fn simulate_perturbed_p9_stays_feasible() {
    let o = outputs();
    let out = eclqr(&[
        "simulate",
        &problem("p9.json"),
        "--x0",
        "0,1.8",
        "--traj",
        &o.traj,
    ]);
    assert_eq!(code(&out), 0);
    let (_, viol) = parse_summary(&out.stdout);
    assert!(viol <= 1e-8);
}

#[test]
fn simulate_nominal_reproduces_solve() {
    let (a, b) = (outputs(), outputs());
    solve("p9.json", &a);
    let out = eclqr(&[
        "simulate",
        &problem("p9.json"),
        "--x0",
        "0,0",
        "--traj",
        &b.traj,
    ]);
    assert_eq!(code(&out), 0);
    // rollout and back-substitution round differently, so compare numerically
    let (ta, tb) = (read(&a.traj), read(&b.traj));
    assert_eq!(ta.lines().count(), tb.lines().count());
    for (la, lb) in ta.lines().zip(tb.lines()).skip(1) {
        for (fa, fb) in la.split(',').zip(lb.split(',')) {
            if fa.is_empty() {
                assert!(fb.is_empty());
                continue;
            }
            let (va, vb): (f64, f64) = (fa.parse().unwrap(), fb.parse().unwrap());
            assert!((va - vb).abs() <= 1e-12 * va.abs().max(1.0), "{la} vs {lb}");
        }
    }
}

#[test]
fn simulate_rejects_wrong_length_x0() {
    let o = outputs();
    let out = eclqr(&[
        "simulate",
        &problem("p9.json"),
        "--x0",
        "1",
        "--traj",
        &o.traj,
    ]);
    assert_eq!(code(&out), 4);
    assert!(!Path::new(&o.traj).exists());
    let out = eclqr(&[
        "simulate",
        &problem("p9.json"),
        "--x0",
        "1,x",
        "--traj",
        &o.traj,
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn verify_bundled_scenarios() {
    for name in ["p7.json", "p7b.json", "p9.json"] {
        let out = eclqr(&["verify", &problem(name)]);
        assert_eq!(
            code(&out),
            0,
            "{name}: {}",
            String::from_utf8_lossy(&out.stdout)
        );
    }
    let out = eclqr(&["verify", &problem("lqr_toy.json")]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("gains vs Riccati"));
}

#[test]
fn error_exit_codes_leave_no_files() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"n\": 1,").unwrap();
    for (file, expected) in [
        (bad.display().to_string(), 1),
        (problem("infeasible.json"), 2),
        (problem("underdetermined.json"), 3),
        (dir.path().join("missing.json").display().to_string(), 1),
    ] {
        let o = outputs();
        let out = eclqr(&["solve", &file, "--traj", &o.traj, "--gains", &o.gains]);
        assert_eq!(code(&out), expected, "{file}");
        assert!(!out.stderr.is_empty());
        assert!(!Path::new(&o.traj).exists() && !Path::new(&o.gains).exists());
        assert_eq!(code(&eclqr(&["verify", &file])), expected);
    }
    assert_eq!(code(&eclqr(&["solve"])), 1);
}

#[test]
fn random_problem_files_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let dir = tempfile::tempdir().unwrap();
    for i in 0..20 {
        let p = random_eclqr(&mut rng, 4, 3, 10, 3, 2);
        let path = dir.path().join(format!("{i}.json"));
        ProblemFile::from_problem(&p).save(&path).unwrap();
        assert_eq!(ProblemFile::load(&path).unwrap().to_problem().unwrap(), p);
        assert_eq!(code(&eclqr(&["verify", &path.display().to_string()])), 0);
    }
}
