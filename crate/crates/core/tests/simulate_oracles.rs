use proptest::prelude::*;
use qlab_core::discretize::Domain;
use qlab_core::quasipotential::quasipotential_for;
use qlab_core::simulate::{
    fit_decay_rate, mean_exit_time, simulate_paths, survival_curve, uniform_time_grid, zero_jump_check, FitWindow,
};
use qlab_core::{Atom, Density, LevyMeasure};

/// `P(N_t ≤ k)` for a Poisson process of rate `omega`.
fn poisson_cdf(k: u32, omega: f64, t: f64) -> f64 {
    let mu = omega * t;
    let mut term = (-mu).exp();
    let mut total = term;
    for j in 1..=k {
        term *= mu / j as f64;
        total += term;
    }
    total
}

#[test]
fn atom_ladder_survival_is_poisson() {
    // four unit steps of 0.3 stay in [0, 1]; the fourth jump lands at 1.2
    let m = LevyMeasure::atoms(vec![Atom::new(0.3, 1.0)]).unwrap();
    let d = Domain::interval(0.0, 1.0).unwrap();
    let recs = simulate_paths(&m, &d, 0.0, 20.0, 3, 0..200_000).unwrap();
    assert!(recs.iter().filter_map(|r| r.exit_time.map(|_| r.n_jumps)).all(|n| n == 4));
    let times = [0.5, 1.0, 2.0, 4.0, 8.0];
    let est = survival_curve(&recs, 20.0, &times).unwrap();
    for (k, &t) in times.iter().enumerate() {
        let exact = poisson_cdf(3, 1.0, t);
        let sigma = (exact * (1.0 - exact) / est.n_paths as f64).sqrt();
        assert!((est.survival[k] - exact).abs() <= 3.0 * sigma, "t={t}: {} vs {exact}", est.survival[k]);
    }
    let mom = mean_exit_time(&recs).unwrap();
    assert!((mom.mean - 4.0).abs() <= 3.0 * mom.stderr + 1e-3);
}

#[test]
fn zero_jump_law() {
    let d = Domain::interval(0.0, 2.0).unwrap();
    for &p in &[0.5, 1.0, 2.0] {
        let m = LevyMeasure::bilateral_exponential(p).unwrap();
        let recs = simulate_paths(&m, &d, 1.0, 5.0, 17, 0..100_000).unwrap();
        for &t in &[0.5, 1.0] {
            let z = zero_jump_check(&recs, 5.0, t, m.total_mass()).unwrap();
            assert!(z.z_score().abs() <= 3.0, "p={p} t={t}: {z:?}");
        }
    }
}

#[test]
fn immediate_exit_fits_the_jump_rate() {
    let m = LevyMeasure::atoms(vec![Atom::new(2.0, 1.5)]).unwrap();
    let d = Domain::interval(0.0, 1.0).unwrap();
    let horizon = 6.0;
    let recs = simulate_paths(&m, &d, 0.5, horizon, 8, 0..200_000).unwrap();
    let est = survival_curve(&recs, horizon, &uniform_time_grid(horizon, 200)).unwrap();
    let fit = fit_decay_rate(&est, FitWindow::Auto).unwrap();
    assert!((fit.rate - 1.5).abs() <= 3.0 * fit.stderr + 0.01, "{fit:?}");
}

#[test]
fn mixture_mean_exit_matches_quasipotential() {
    let m = LevyMeasure::mixture(Density::BilateralExponential { p: 2.0 }, vec![Atom::new(-0.4, 0.5)]).unwrap();
    let d = Domain::interval(0.0, 2.0).unwrap();
    let q = quasipotential_for(&m, &d, 400).unwrap();
    let start = 1.0;
    let recs = simulate_paths(&m, &d, start, 200.0, 23, 0..200_000).unwrap();
    let mom = mean_exit_time(&recs).unwrap();
    assert_eq!(mom.censored, 0);
    let exact = q.mean_exit_time(start).unwrap();
    assert!((mom.mean - exact).abs() <= 0.02 * exact, "{} vs {exact}", mom.mean);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn paths_depend_only_on_seed_and_index(seed in any::<u64>(), lo in 0u64..50, len in 1u64..30) {
        let m = LevyMeasure::bilateral_exponential(1.0).unwrap();
        let d = Domain::interval(0.0, 1.0).unwrap();
        let all = simulate_paths(&m, &d, 0.2, 10.0, seed, 0..lo + len).unwrap();
        let part = simulate_paths(&m, &d, 0.2, 10.0, seed, lo..lo + len).unwrap();
        prop_assert_eq!(&all[lo as usize..], &part[..]);
    }

    #[test]
    fn survival_is_monotone(seed in any::<u64>()) {
        let m = LevyMeasure::bilateral_exponential(1.0).unwrap();
        let d = Domain::interval(0.0, 1.5).unwrap();
        let recs = simulate_paths(&m, &d, 0.0, 10.0, seed, 0..2000).unwrap();
        let est = survival_curve(&recs, 10.0, &uniform_time_grid(10.0, 50)).unwrap();
        prop_assert!(est.survival.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(est.survival.iter().all(|&s| (0.0..=1.0).contains(&s)));
    }
}
