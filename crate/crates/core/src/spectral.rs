//! Principal eigenpair of the quasi-potential and the decay law built on it.
//!
//! The survival probability behaves like `q·e^{-t/μ₁}` where `μ₁` is the top
//! eigenvalue of `B`, `μ₁ = (1 + λ₁)/Ω` with `λ₁` the top eigenvalue of `T₁`.
//! Power iteration on `B` and `Bᵀ` extracts the right eigenfunction `g₁` and
//! the increments of the left one `h₁`; one dense eigendecomposition supplies
//! the subdominant spectrum, multiplicity and clustering diagnostics.

use alloc::format;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by inherent methods whenever std is linked
use num_traits::Float;

use crate::discretize::Grid;
use crate::error::{Error, Result};
use crate::quasipotential::Quasipotential;

pub const POWER_TOL: f64 = 1e-12;
pub const POWER_MAX_ITERS: usize = 100_000;
/// Relative distance below which eigenvalues count as copies of `μ₁`.
const CLUSTER_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct SpectralSummary {
    pub omega: f64,
    /// Top eigenvalue of `B`.
    pub mu1: f64,
    /// Top eigenvalue of `T₁`.
    pub lambda1: f64,
    /// Right eigenfunction on the grid nodes, nonnegative, max-normalized.
    pub g1: Vec<f64>,
    /// Increments of the left eigenfunction, scaled so that `Σ g₁ h₁ = 1`.
    pub h1: Vec<f64>,
    /// Algebraic multiplicity `r` of `μ₁` in the dense decomposition.
    pub multiplicity: usize,
    pub geometric_multiplicity: usize,
    /// `Σ_k g_k(x_i) Σ_j h_k(x_j)` for every node: the spectral projector applied to `1`.
    pub projected_one: Vec<f64>,
    /// `|μ₂| / μ₁`, absent when every eigenvalue equals `μ₁`.
    pub gap: Option<f64>,
    /// Eigenvalues of `B` by decreasing modulus.
    pub eigenvalues: Vec<Complex64>,
    pub iterations: usize,
    grid: Option<Grid>,
}

impl SpectralSummary {
    /// No Jordan block at `μ₁`.
    pub fn index_one(&self) -> bool {
        self.multiplicity == self.geometric_multiplicity
    }

    pub fn nodes(&self) -> &[f64] {
        self.grid.as_ref().map_or(&[], |g| g.nodes())
    }

    fn node(&self, start: f64) -> Result<usize> {
        match &self.grid {
            Some(g) => g.nearest_node(start),
            None => Ok(0),
        }
    }

    /// `‖B g₁ - μ₁ g₁‖_∞` and the same for the left pair.
    pub fn residuals(&self, q: &Quasipotential) -> Option<(f64, f64)> {
        let b = &q.b()?.entries;
        let g = DVector::from_column_slice(&self.g1);
        let h = DVector::from_column_slice(&self.h1);
        let right = (b * &g - &g * self.mu1).amax();
        let left = (b.tr_mul(&h) - &h * self.mu1).amax();
        Some((right, left))
    }
}

/// `1/μ₁`.
pub fn decay_rate(s: &SpectralSummary) -> f64 {
    1.0 / s.mu1
}

/// `q = Σ_k g_k(start) ∫_Δ dh_k`, with `g₁` read at the node nearest to `start`.
pub fn prefactor_q(s: &SpectralSummary, start: f64) -> Result<f64> {
    let q = s.projected_one[s.node(start)?];
    let scale = s.projected_one.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if q < -1e-10 * scale.max(1.0) {
        return Err(Error::Numerical(format!("prefactor q = {q} is negative")));
    }
    Ok(q.max(0.0))
}

fn power_iteration(b: &DMatrix<f64>, transpose: bool) -> Result<(f64, DVector<f64>, usize)> {
    let n = b.nrows();
    let mut v = DVector::from_element(n, 1.0);
    let mut rho_prev = f64::NAN;
    for k in 1..=POWER_MAX_ITERS {
        let mut w = if transpose { b.tr_mul(&v) } else { b * &v };
        let rho = w.dot(&v) / v.dot(&v);
        let sign = if w.sum() < 0.0 { -1.0 } else { 1.0 };
        let scale = w.amax();
        if scale == 0.0 {
            return Err(Error::Numerical("power iteration hit the zero vector".into()));
        }
        w *= sign / scale;
        let settled = (rho - rho_prev).abs() <= POWER_TOL * rho.abs() && (&w - &v).amax() <= POWER_TOL;
        v = w;
        rho_prev = rho;
        if settled {
            return Ok((rho, v, k));
        }
    }
    Err(Error::NoRealDominant { iterations: POWER_MAX_ITERS })
}

/// Eigenvalues of `B` sorted by decreasing modulus.
pub fn spectrum(q: &Quasipotential) -> Vec<Complex64> {
    match q.b() {
        Some(b) => {
            let mut ev: Vec<Complex64> = Schur::new(b.entries.clone()).complex_eigenvalues().iter().copied().collect();
            ev.sort_by(|a, b| b.norm().partial_cmp(&a.norm()).unwrap());
            ev
        }
        None => alloc::vec![Complex64::new(1.0 / q.omega, 0.0)],
    }
}

fn quasi_nilpotent_check(q: &Quasipotential) -> Result<()> {
    match q.nilpotency_index() {
        Some(m) if m >= 2 => Err(Error::QuasiNilpotent { index: m }),
        _ => Ok(()),
    }
}

/// Principal eigenpair of `B` with its Krein–Rutman normalization.
pub fn principal_eigen(q: &Quasipotential) -> Result<SpectralSummary> {
    quasi_nilpotent_check(q)?;
    let omega = q.omega;
    let Some(bop) = q.b() else {
        // exact engine with index 1: every jump exits, B = I/Ω
        let mu1 = 1.0 / omega;
        return Ok(SpectralSummary {
            omega,
            mu1,
            lambda1: 0.0,
            g1: alloc::vec![1.0],
            h1: alloc::vec![1.0],
            multiplicity: 1,
            geometric_multiplicity: 1,
            projected_one: alloc::vec![1.0],
            gap: None,
            eigenvalues: alloc::vec![Complex64::new(mu1, 0.0)],
            iterations: 0,
            grid: None,
        });
    };
    let b = &bop.entries;
    let (mu1, g, it_r) = power_iteration(b, false)?;
    let (_, h, it_l) = power_iteration(b, true)?;
    let pairing = g.dot(&h);
    if !(pairing > 0.0) {
        return Err(Error::Numerical(format!("left/right eigenvectors pair to {pairing}")));
    }
    let h = h / pairing;

    let eigenvalues = spectrum(q);
    let multiplicity =
        eigenvalues.iter().filter(|z| (**z - Complex64::new(mu1, 0.0)).norm() <= CLUSTER_TOL * mu1).count().max(1);
    let gap = eigenvalues.get(multiplicity).map(|z| z.norm() / mu1);

    let (geometric_multiplicity, projected_one) = if multiplicity == 1 {
        let mass = h.sum();
        (1, g.iter().map(|gi| gi * mass).collect())
    } else {
        dominant_projector_on_one(b, mu1, multiplicity)?
    };

    Ok(SpectralSummary {
        omega,
        mu1,
        lambda1: omega * mu1 - 1.0,
        g1: g.iter().copied().collect(),
        h1: h.iter().copied().collect(),
        multiplicity,
        geometric_multiplicity,
        projected_one,
        gap,
        eigenvalues,
        iterations: it_r.max(it_l),
        grid: Some(bop.grid.clone()),
    })
}

/// Geometric multiplicity of `μ₁` and `P·1` for the spectral projector
/// `P = G (HᵀG)⁻¹ Hᵀ` built from the null spaces of `B - μ₁ I`.
fn dominant_projector_on_one(b: &DMatrix<f64>, mu1: f64, r: usize) -> Result<(usize, Vec<f64>)> {
    let n = b.nrows();
    let shifted = b - DMatrix::<f64>::identity(n, n) * mu1;
    let svd = shifted.svd(true, true);
    let u = svd.u.as_ref().unwrap();
    let vt = svd.v_t.as_ref().unwrap();
    let tol = CLUSTER_TOL * mu1 * (n as f64).sqrt();
    let null: Vec<usize> = (0..n).filter(|&k| svd.singular_values[k] <= tol).collect();
    let geo = null.len();
    if geo < r {
        // Jordan block: the projector is not built from eigenvectors alone
        return Ok((geo, alloc::vec![f64::NAN; n]));
    }
    let gmat = DMatrix::from_fn(n, geo, |i, k| vt[(null[k], i)]);
    let hmat = DMatrix::from_fn(n, geo, |i, k| u[(i, null[k])]);
    let pairing = hmat.tr_mul(&gmat);
    let inv =
        pairing.try_inverse().ok_or_else(|| Error::Numerical("degenerate pairing of dominant eigenvectors".into()))?;
    let ones = DVector::from_element(n, 1.0);
    let p1 = &gmat * (inv * hmat.tr_mul(&ones));
    Ok((geo, p1.iter().copied().collect()))
}

/// Top eigenvalue of `T₁` by power iteration only.
pub fn dominant_lambda(q: &Quasipotential) -> Result<f64> {
    quasi_nilpotent_check(q)?;
    match q.b() {
        Some(b) => {
            let (mu1, _, _) = power_iteration(&b.entries, false)?;
            Ok(q.omega * mu1 - 1.0)
        }
        None => Ok(0.0),
    }
}

/// Number of eigenvalues of `B` farther than `epsilon` from `1/Ω`; fails if
/// any eigenvalue has nonpositive real part.
pub fn eigen_clustering(q: &Quasipotential, epsilon: f64) -> Result<usize> {
    if q.b().is_none() {
        return Ok(0);
    }
    count_outside(&spectrum(q), q.omega, epsilon)
}

pub fn count_outside(eigenvalues: &[Complex64], omega: f64, epsilon: f64) -> Result<usize> {
    let min_re = eigenvalues.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    if !(min_re > 0.0) {
        return Err(Error::SpectrumNotRightHalfPlane(min_re));
    }
    let centre = Complex64::new(1.0 / omega, 0.0);
    Ok(eigenvalues.iter().filter(|z| (**z - centre).norm() > epsilon).count())
}
