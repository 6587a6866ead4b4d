use core::f64::consts::PI;

use proptest::prelude::*;
use qlab_core::bilateral::{
    characteristic_residual, eigen_roots, gamma_closed_form, integral_equation_residual, reproduce_table,
    BilateralScenario, PUBLISHED_TABLE, TABLE_ROOT_TOL,
};
use qlab_core::simulate::path_rng;
use rand_core::RngCore;

#[test]
fn coefficients_by_hand() {
    // pω = 2: α₁ = p(1 + 2)/4, β₁ = −p²/4
    let sc = BilateralScenario::new(0.5, 4.0).unwrap();
    assert!((sc.alpha1() - 0.375).abs() < 1e-15);
    assert!((sc.beta1() + 0.0625).abs() < 1e-15);
    assert!((sc.alpha2() - 0.1875).abs() < 1e-15);
    assert!((sc.beta2() + 0.03125).abs() < 1e-15);
}

#[test]
fn closed_form_solves_the_integral_equation() {
    // a single (x, t) can cancel by luck, so the order is read off the mean over fixed random points
    let mut rng = path_rng(11, 0);
    let mut unif = || (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    for &(p, len) in &[(1.0, PI), (1.0, 1.0)] {
        let sc = BilateralScenario::new(p, len).unwrap();
        let pts: Vec<(f64, f64)> = (0..64).map(|_| (unif() * len, unif() * len)).collect();
        let mean: Vec<f64> = [250, 500, 1000, 2000]
            .iter()
            .map(|&n| {
                let total: f64 =
                    pts.iter().map(|&(x, t)| integral_equation_residual(&sc, x, t, n).unwrap().abs()).sum();
                total / pts.len() as f64
            })
            .collect();
        for &(x, t) in &pts {
            assert!(integral_equation_residual(&sc, x, t, 2000).unwrap().abs() <= 1e-5);
        }
        for w in mean.windows(2) {
            assert!(w[1] <= 0.55 * w[0], "{mean:?}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn residual_bound_at_random_points(a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let sc = BilateralScenario::new(1.0, 1.0).unwrap();
        prop_assert!(integral_equation_residual(&sc, a, b, 2000).unwrap().abs() <= 1e-5);
    }
}

#[test]
fn published_roots() {
    for &(c, printed) in &PUBLISHED_TABLE {
        let sc = BilateralScenario::new(1.0, c).unwrap();
        let rep = eigen_roots(&sc, 10.0);
        let top = rep.maximal.unwrap().lambda;
        assert!((top - printed).abs() <= TABLE_ROOT_TOL, "pω = {c}: {top} vs {printed}");
        for r in &rep.roots {
            assert!(characteristic_residual(&sc, r.lambda) <= 1e-8 * (1.0 + r.lambda), "{r:?}");
        }
        assert_eq!(rep.degenerate.is_some(), (c - PI / 2.0).abs() < 1e-12);
    }
}

#[test]
fn two_roots_share_the_first_branch_at_pi() {
    let rep = eigen_roots(&BilateralScenario::new(1.0, PI).unwrap(), 10.0);
    let first: Vec<f64> = rep.roots.iter().filter(|r| r.branch == 1).map(|r| r.lambda).collect();
    assert_eq!(first.len(), 2, "{first:?}");
    assert!(rep.roots.windows(2).all(|w| w[0].lambda > w[1].lambda));
}

#[test]
fn operator_column_of_the_table() {
    let rep = reproduce_table(400).unwrap();
    assert_eq!(rep.rows.len(), 5);
    assert!(rep.operator_monotone);
    assert!(!rep.published_monotone);
    for row in &rep.rows {
        assert!(row.root_matches_published);
        if row.degenerate.is_some() {
            assert!(row.operator_matches_degenerate == Some(true) && !row.operator_matches_root);
        } else {
            assert!(row.operator_matches_root && row.operator_matches_published, "{row:?}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn gamma_is_symmetric_and_positive(
        p in 0.2f64..3.0,
        len in 0.2f64..4.0,
        a in 0.0f64..1.0,
        b in 0.0f64..1.0,
    ) {
        let sc = BilateralScenario::new(p, len).unwrap();
        let (x, t) = (a * len, b * len);
        let g = gamma_closed_form(&sc, x, t).unwrap();
        prop_assert!(g > 0.0);
        prop_assert!((g - gamma_closed_form(&sc, t, x).unwrap()).abs() <= 1e-12 * g);
    }
}
