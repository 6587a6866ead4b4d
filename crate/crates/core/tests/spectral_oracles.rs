use core::f64::consts::PI;

use nalgebra::DVector;
use qlab_core::bilateral::{eigen_roots, eigenfunction_closed_form, operator_top_eigenvalue, BilateralScenario};
use qlab_core::discretize::{assemble_t, build_grid, Domain};
use qlab_core::quasipotential::{build_b, quasipotential_for, Quasipotential};
use qlab_core::spectral::{
    count_outside, decay_rate, dominant_lambda, eigen_clustering, prefactor_q, principal_eigen, spectrum,
};
use qlab_core::{Atom, Error, LevyMeasure};

fn bilateral(p: f64, len: f64, n: usize) -> Quasipotential {
    let m = LevyMeasure::bilateral_exponential(p).unwrap();
    let g = build_grid(&Domain::interval(0.0, len).unwrap(), n).unwrap();
    build_b(&assemble_t(&m, &g).unwrap()).unwrap()
}

#[test]
fn principal_pair_is_positive_and_normalized() {
    for &(p, len) in &[(1.0, PI), (2.0, 1.0), (0.5, 3.0)] {
        let q = bilateral(p, len, 200);
        let s = principal_eigen(&q).unwrap();
        let (right, left) = s.residuals(&q).unwrap();
        assert!(right <= 1e-9 && left <= 1e-9, "{right} {left}");
        assert!(s.g1.iter().all(|&v| v >= 0.0) && s.h1.iter().all(|&v| v >= 0.0));
        let pairing: f64 = s.g1.iter().zip(&s.h1).map(|(g, h)| g * h).sum();
        assert!((pairing - 1.0).abs() <= 1e-10);
        assert!(s.eigenvalues.iter().all(|z| z.norm() <= s.mu1 * (1.0 + 1e-10)));
        assert!((s.mu1 - (1.0 + s.lambda1) / s.omega).abs() <= 1e-12 * s.mu1);
        assert!((s.lambda1 - dominant_lambda(&q).unwrap()).abs() <= 1e-10 * s.lambda1);
        assert!(s.index_one() && s.multiplicity == 1);
        assert_eq!(decay_rate(&s), 1.0 / s.mu1);
    }
}

#[test]
fn spectrum_lies_in_the_right_half_plane() {
    let q = bilateral(1.0, PI, 150);
    let eigs = spectrum(&q);
    assert_eq!(eigs.len(), 150);
    assert!(eigs.iter().all(|z| z.re > 0.0));
    assert!(eigs.windows(2).all(|w| w[0].norm() >= w[1].norm()));
}

#[test]
fn top_eigenvalue_at_pi() {
    let q = bilateral(1.0, PI, 400);
    let s = principal_eigen(&q).unwrap();
    assert!((s.lambda1 - 2.454).abs() <= 0.01 * 2.454, "{}", s.lambda1);
    assert!((decay_rate(&s) - 2.0 / 3.454).abs() <= 0.01);
}

#[test]
fn prefactor_is_the_projection_of_one() {
    let q = bilateral(1.0, PI, 200);
    let s = principal_eigen(&q).unwrap();
    let total_h: f64 = s.h1.iter().sum();
    for (i, &x) in s.nodes().iter().enumerate().step_by(17) {
        let qx = prefactor_q(&s, x).unwrap();
        assert!((qx - s.g1[i] * total_h).abs() <= 1e-12 * qx.max(1.0));
        assert!(qx > 0.0);
    }
}

#[test]
fn nilpotent_and_trivial_cases() {
    let d = Domain::interval(0.0, 1.0).unwrap();
    let shift = LevyMeasure::atoms(vec![Atom::new(0.3, 1.0)]).unwrap();
    let q = quasipotential_for(&shift, &d, 10).unwrap();
    assert!(matches!(principal_eigen(&q), Err(Error::QuasiNilpotent { .. })));

    let out = LevyMeasure::atoms(vec![Atom::new(1.5, 2.0)]).unwrap();
    let s = principal_eigen(&quasipotential_for(&out, &d, 10).unwrap()).unwrap();
    assert_eq!(s.mu1, 0.5);
    assert_eq!(decay_rate(&s), 2.0);
    assert_eq!(prefactor_q(&s, 0.0).unwrap(), 1.0);
}

#[test]
fn clustering_counts_are_stable_under_refinement() {
    let eps = 0.05;
    let counts: Vec<usize> =
        [100, 200, 400].iter().map(|&n| eigen_clustering(&bilateral(1.0, PI, n), eps).unwrap()).collect();
    assert!(counts.iter().all(|&c| c == counts[0]), "{counts:?}");
    assert!(counts[0] >= 1);
}

#[test]
fn count_outside_rejects_left_half_plane() {
    let z = |re: f64| num_complex::Complex64::new(re, 0.0);
    assert_eq!(count_outside(&[z(1.0), z(1.02), z(0.5), z(0.2)], 1.0, 0.05).unwrap(), 2);
    assert!(matches!(count_outside(&[z(0.5), z(-0.1)], 1.0, 0.05), Err(Error::SpectrumNotRightHalfPlane { .. })));
}

#[test]
fn closed_form_eigenfunction_matches_operator() {
    let sc = BilateralScenario::new(1.0, PI).unwrap();
    let lambda = eigen_roots(&sc, 10.0).maximal.unwrap().lambda;
    let q = bilateral(1.0, PI, 800);
    let x = q.grid().unwrap().nodes().to_vec();
    let f = DVector::from_iterator(x.len(), x.iter().map(|&xi| eigenfunction_closed_form(&sc, lambda, xi).unwrap()));
    let residual = (q.t1().unwrap() * &f - &f * lambda).amax();
    assert!(residual <= 1e-3 * lambda * f.amax(), "{residual}");

    let q4 = bilateral(1.0, PI, 400);
    let s = principal_eigen(&q4).unwrap();
    let f4: Vec<f64> = s.nodes().iter().map(|&xi| eigenfunction_closed_form(&sc, lambda, xi).unwrap()).collect();
    let dot: f64 = f4.iter().zip(&s.g1).map(|(a, b)| a * b).sum();
    let na: f64 = f4.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nb: f64 = s.g1.iter().map(|b| b * b).sum::<f64>().sqrt();
    assert!(dot / (na * nb) >= 0.999, "{}", dot / (na * nb));
    assert!((operator_top_eigenvalue(&sc, 400).unwrap() - lambda).abs() <= 0.01 * lambda);
}
