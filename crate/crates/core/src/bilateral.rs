//! Closed forms for `ν'(x) = p² e^{-p|x|}` on `Δ = [0, ω]`.
//!
//! The resolvent kernel is piecewise bilinear,
//! `γ(x, t) = (1 + pt)(α₁ + β₁x)` for `t ≤ x` and symmetric otherwise, and
//! the eigenvalues of `T₁` solve `tan(pω/√λ) = 2√λ/(1 − λ)`.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};
#[allow(unused_imports)] // shadowed by inherent methods whenever std is linked
use num_traits::Float;

use crate::discretize::{assemble_t, build_grid, Domain};
use crate::error::{Error, Result};
use crate::measure::LevyMeasure;
use crate::quasipotential::build_b;
use crate::spectral::dominant_lambda;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BilateralScenario {
    pub p: f64,
    pub omega_len: f64,
}

impl BilateralScenario {
    pub fn new(p: f64, omega_len: f64) -> Result<Self> {
        if !(p > 0.0 && p.is_finite()) || !(omega_len > 0.0 && omega_len.is_finite()) {
            return Err(Error::Config(format!("need p > 0 and ω > 0, got p={p}, ω={omega_len}")));
        }
        Ok(Self { p, omega_len })
    }

    /// `pω`.
    pub fn product(&self) -> f64 {
        self.p * self.omega_len
    }

    /// `Ω = 2p`.
    pub fn total_mass(&self) -> f64 {
        2.0 * self.p
    }

    pub fn domain(&self) -> Domain {
        Domain::interval(0.0, self.omega_len).expect("validated length")
    }

    pub fn measure(&self) -> LevyMeasure {
        LevyMeasure::bilateral_exponential(self.p).expect("validated rate")
    }

    pub fn alpha1(&self) -> f64 {
        self.p * (1.0 + self.product()) / (2.0 + self.product())
    }

    pub fn beta1(&self) -> f64 {
        -self.p * self.p / (2.0 + self.product())
    }

    pub fn alpha2(&self) -> f64 {
        self.p * self.alpha1()
    }

    pub fn beta2(&self) -> f64 {
        self.p * self.beta1()
    }

    /// Coefficient `a(λ)` of the sine/cosine system.
    pub fn a(&self, lambda: f64) -> f64 {
        let (s, r) = (lambda.sqrt(), self.product() / lambda.sqrt());
        (-s * r.cos() - lambda * r.sin() + (1.0 + self.product()) * s) / (2.0 + self.product())
    }

    /// Coefficient `b(λ)` of the sine/cosine system.
    pub fn b(&self, lambda: f64) -> f64 {
        let (s, r) = (lambda.sqrt(), self.product() / lambda.sqrt());
        (s * r.sin() - lambda * r.cos() + lambda) / (2.0 + self.product())
    }

    fn check(&self, x: f64) -> Result<()> {
        if !(0.0..=self.omega_len).contains(&x) {
            return Err(Error::Domain(format!("{x} lies outside [0, {}]", self.omega_len)));
        }
        Ok(())
    }

    fn gamma_unchecked(&self, x: f64, t: f64) -> f64 {
        let (lo, hi) = if t <= x { (t, x) } else { (x, t) };
        (self.alpha1() + self.alpha2() * lo) + (self.beta1() + self.beta2() * lo) * hi
    }
}

/// Resolvent kernel `γ(x, t)` of `T₁`.
pub fn gamma_closed_form(sc: &BilateralScenario, x: f64, t: f64) -> Result<f64> {
    sc.check(x)?;
    sc.check(t)?;
    Ok(sc.gamma_unchecked(x, t))
}

/// `γ(x,t) − (p/2)e^{−p|x−t|} − (p/2)∫₀^ω e^{−p|x−y|} γ(y,t) dy` with a
/// `quad_n`-point composite midpoint rule.
pub fn integral_equation_residual(sc: &BilateralScenario, x: f64, t: f64, quad_n: usize) -> Result<f64> {
    sc.check(x)?;
    sc.check(t)?;
    if quad_n == 0 {
        return Err(Error::Config("quad_n must be positive".into()));
    }
    let p = sc.p;
    let h = sc.omega_len / quad_n as f64;
    let integral: f64 = (0..quad_n)
        .map(|j| {
            let y = (j as f64 + 0.5) * h;
            (-p * (x - y).abs()).exp() * sc.gamma_unchecked(y, t)
        })
        .sum::<f64>()
        * h;
    Ok(sc.gamma_unchecked(x, t) - 0.5 * p * (-p * (x - t).abs()).exp() - 0.5 * p * integral)
}

/// `|tan(pω/√λ)(1 − λ) − 2√λ|`.
pub fn characteristic_residual(sc: &BilateralScenario, lambda: f64) -> f64 {
    ((sc.product() / lambda.sqrt()).tan() * (1.0 - lambda) - 2.0 * lambda.sqrt()).abs()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenRoot {
    pub lambda: f64,
    /// `k` for `θ = pω/√λ ∈ ((k − ½)π, (k + ½)π)`.
    pub branch: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootReport {
    /// Roots in `(0, lambda_max]`, by decreasing `λ`.
    pub roots: Vec<EigenRoot>,
    /// Largest regular root.
    pub maximal: Option<EigenRoot>,
    /// `λ = 1` when `pω` sits on a pole of `tan`, where both sides diverge.
    pub degenerate: Option<f64>,
}

/// Tan branches scanned past the first admissible one. Roots accumulate at
/// `λ = 0`, so the list is truncated.
pub const MAX_BRANCHES: usize = 64;
const ROOT_TOL: f64 = 1e-15;

/// Roots of `tan θ = 2cθ/(θ² − c²)`, `θ = c/√λ`, `c = pω`. The right side has a
/// pole at `θ = c`, so every tan branch is split there; on each piece
/// `tan θ − 2cθ/(θ² − c²)` is strictly increasing and has at most one root.
pub fn eigen_roots(sc: &BilateralScenario, lambda_max: f64) -> RootReport {
    let c = sc.product();
    let theta_min = c / lambda_max.sqrt();
    let phi = |th: f64| th.tan() - 2.0 * c * th / (th * th - c * c);

    let degenerate = {
        let k = (c / PI - 0.5).round();
        let pole = (k + 0.5) * PI;
        (k >= 0.0 && (c - pole).abs() <= 1e-12 * c && lambda_max >= 1.0).then_some(1.0)
    };

    let first = ((theta_min / PI) + 0.5).floor().max(0.0) as usize;
    let mut roots = Vec::new();
    for k in first..first + MAX_BRANCHES {
        let lo = if k == 0 { 0.0 } else { (k as f64 - 0.5) * PI };
        let hi = (k as f64 + 0.5) * PI;
        let mut cuts = Vec::with_capacity(3);
        cuts.push(lo.max(theta_min));
        if c > cuts[0] && c < hi && (c - hi).abs() > 1e-12 * c {
            cuts.push(c);
        }
        cuts.push(hi);
        for w in cuts.windows(2) {
            if let Some(th) = bracket(&phi, w[0], w[1]) {
                let lambda = (c / th) * (c / th);
                if lambda > 0.0 && lambda <= lambda_max {
                    roots.push(EigenRoot { lambda, branch: k });
                }
            }
        }
    }
    roots.sort_by(|a, b| b.lambda.partial_cmp(&a.lambda).unwrap());
    let maximal = roots.first().copied();
    RootReport { roots, maximal, degenerate }
}

/// Bisection for the sign change of an increasing function on `(a, b)`.
fn bracket<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Option<f64> {
    let eps = 1e-13 * b.max(1.0);
    let (mut lo, mut hi) = (a + eps, b - eps);
    if !(lo < hi) || !(f(lo) < 0.0) || !(f(hi) > 0.0) {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= ROOT_TOL * hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// `√λ sin(xp/√λ) + cos(xp/√λ)`.
pub fn eigenfunction_closed_form(sc: &BilateralScenario, lambda: f64, x: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("eigenvalue must be positive, got {lambda}")));
    }
    let s = lambda.sqrt();
    let r = x * sc.p / s;
    Ok(s * r.sin() + r.cos())
}

/// The five `pω` values of the published root table with the printed roots.
pub const PUBLISHED_TABLE: [(f64, f64); 5] =
    [(PI / 4.0, 0.445), (PI / 3.0, 0.617), (FRAC_PI_2, 0.162), (2.0 * PI / 3.0, 1.433), (PI, 2.454)];
pub const TABLE_ROOT_TOL: f64 = 0.005;
pub const TABLE_OPERATOR_RTOL: f64 = 0.01;
pub const TABLE_GRID_N: usize = 400;

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub product: f64,
    pub published: f64,
    /// Largest regular root of the characteristic equation.
    pub equation_root: f64,
    /// `λ = 1` when the characteristic equation degenerates.
    pub degenerate: Option<f64>,
    /// Top eigenvalue of the discretized `T₁`.
    pub operator: f64,
    pub root_matches_published: bool,
    pub operator_matches_root: bool,
    pub operator_matches_published: bool,
    pub operator_matches_degenerate: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableReport {
    pub rows: Vec<TableRow>,
    /// Operator column strictly increasing in `ω`.
    pub operator_monotone: bool,
    pub published_monotone: bool,
}

fn rel_close(a: f64, b: f64, rtol: f64) -> bool {
    (a - b).abs() <= rtol * b.abs()
}

/// Top eigenvalue of the discretized `T₁` for the scenario.
pub fn operator_top_eigenvalue(sc: &BilateralScenario, n: usize) -> Result<f64> {
    let g = build_grid(&sc.domain(), n)?;
    let q = build_b(&assemble_t(&sc.measure(), &g)?)?;
    dominant_lambda(&q)
}

/// One table row at `p = 1`, `ω = pω`.
pub fn table_row(product: f64, published: f64, n: usize) -> Result<TableRow> {
    let sc = BilateralScenario::new(1.0, product)?;
    let report = eigen_roots(&sc, 1e3);
    let equation_root = report.maximal.map_or(f64::NAN, |r| r.lambda);
    let operator = operator_top_eigenvalue(&sc, n)?;
    Ok(TableRow {
        product,
        published,
        equation_root,
        degenerate: report.degenerate,
        operator,
        root_matches_published: (equation_root - published).abs() <= TABLE_ROOT_TOL,
        operator_matches_root: rel_close(operator, equation_root, TABLE_OPERATOR_RTOL),
        operator_matches_published: rel_close(operator, published, TABLE_OPERATOR_RTOL),
        operator_matches_degenerate: report.degenerate.map(|d| rel_close(operator, d, TABLE_OPERATOR_RTOL)),
    })
}

fn strictly_increasing(v: impl Iterator<Item = f64>) -> bool {
    let v: Vec<f64> = v.collect();
    v.windows(2).all(|w| w[1] > w[0])
}

/// Assemble the report from precomputed rows (rows may be computed in parallel).
pub fn table_report(rows: Vec<TableRow>) -> TableReport {
    let operator_monotone = strictly_increasing(rows.iter().map(|r| r.operator));
    let published_monotone = strictly_increasing(rows.iter().map(|r| r.published));
    TableReport { rows, operator_monotone, published_monotone }
}

/// Recompute the published root table next to the discretized operator.
pub fn reproduce_table(n: usize) -> Result<TableReport> {
    let rows = PUBLISHED_TABLE.iter().map(|&(c, published)| table_row(c, published, n)).collect::<Result<Vec<_>>>()?;
    Ok(table_report(rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> BilateralScenario {
        BilateralScenario::new(1.0, 1.0).unwrap()
    }

    #[test]
    fn gamma_examples() {
        let sc = unit();
        assert!((gamma_closed_form(&sc, 0.0, 0.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((gamma_closed_form(&sc, 1.0, 0.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(gamma_closed_form(&sc, 0.0, 1.0), gamma_closed_form(&sc, 1.0, 0.0));
        assert!(gamma_closed_form(&sc, 1.2, 0.0).is_err());
    }

    #[test]
    fn residual_is_small() {
        let sc = unit();
        for &(x, t) in &[(0.0, 0.0), (0.3, 0.7), (0.9, 0.1), (1.0, 1.0)] {
            assert!(integral_equation_residual(&sc, x, t, 2000).unwrap().abs() <= 1e-5);
        }
    }

    #[test]
    fn roots_satisfy_the_equation() {
        for &(c, _) in &PUBLISHED_TABLE {
            let sc = BilateralScenario::new(1.0, c).unwrap();
            let rep = eigen_roots(&sc, 10.0);
            assert!(!rep.roots.is_empty());
            for r in &rep.roots {
                let l = r.lambda;
                assert!(characteristic_residual(&sc, l) <= 1e-8 * (1.0 + (1.0 - l).abs()), "{c} {l}");
            }
        }
    }

    #[test]
    fn degenerate_case_is_reported() {
        let sc = BilateralScenario::new(1.0, FRAC_PI_2).unwrap();
        let rep = eigen_roots(&sc, 10.0);
        assert_eq!(rep.degenerate, Some(1.0));
        let max = rep.maximal.unwrap().lambda;
        assert!((max - 0.162).abs() < 0.005, "{max}");
        assert_eq!(eigen_roots(&unit(), 10.0).degenerate, None);
    }

    #[test]
    fn eigenfunction_at_zero() {
        assert_eq!(eigenfunction_closed_form(&unit(), 0.7, 0.0).unwrap(), 1.0);
        assert!(eigenfunction_closed_form(&unit(), 0.0, 0.5).is_err());
    }
}
