mod common;

use common::rng;
use eclqr_core::oracles::{assemble_qp, kkt_solve, riccati};
use eclqr_core::random::{random_eclqr, random_lqr};
use eclqr_core::{scenarios, solve, Vector};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kkt_solution_is_stationary_and_feasible(seed in any::<u64>()) {
        let p = random_eclqr(&mut rng(seed), 4, 3, 30, 3, 2);
        let (h, c, d) = assemble_qp(&p).unwrap();
        let s = kkt_solve(&p).unwrap();
        let stationarity = (2.0 * &h * &s.z + c.transpose() * &s.lambda).amax();
        prop_assert!(stationarity <= 1e-9 * (1.0 + s.z.norm()), "stationarity {}", stationarity);
        prop_assert!((&c * &s.z - d).amax() <= 1e-9);
        prop_assert!((s.cost - s.z.dot(&(&h * &s.z))).abs() <= 1e-12 * s.cost.max(1.0));
    }

    #[test]
    fn solve_cost_matches_kkt(seed in any::<u64>()) {
        let p = random_eclqr(&mut rng(seed), 4, 3, 30, 3, 2);
        let sol = solve(&p).unwrap();
        let kkt = kkt_solve(&p).unwrap();
        prop_assert!((sol.cost - kkt.cost).abs() <= 1e-8 * kkt.cost.abs().max(1.0));
    }

    #[test]
    fn riccati_values_are_symmetric_psd(seed in any::<u64>()) {
        let p = random_lqr(&mut rng(seed), 5, 3, 50);
        for v in riccati(&p).unwrap().values {
            prop_assert_eq!(&v, &v.transpose());
            prop_assert!(v.symmetric_eigenvalues().min() >= -1e-9);
        }
    }
}

#[test]
fn kkt_reproduces_problem7_waypoints() {
    let s = kkt_solve(&scenarios::problem7()).unwrap();
    assert!((&s.xs[50] - Vector::from_column_slice(&[1.0, 2.0, 3.0])).amax() <= 1e-8);
    assert!((&s.xs[100] - Vector::from_column_slice(&[3.0, 2.0, 1.0])).amax() <= 1e-8);
}

#[test]
fn kkt_matches_riccati_on_the_toy() {
    let p = scenarios::lqr_toy();
    let s = kkt_solve(&p).unwrap();
    let r = riccati(&p).unwrap();
    assert!((s.us[0][0] + r.gains[0][(0, 0)] * p.x0[0]).abs() <= 1e-12);
}
