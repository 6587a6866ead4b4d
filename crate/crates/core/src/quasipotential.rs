//! The quasi-potential `B = -L_Δ⁻¹ = (1/Ω)(I + T₁)` and the exit-time
//! quantities it generates: mean exit times, the Laplace transform of the
//! survival probability, the killed semigroup itself, the cumulative kernel
//! `Φ` of `T₁` and the Radon compactness modulus.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by inherent methods whenever std is linked
use num_traits::Float;

use crate::atoms::ExactAtomOperator;
use crate::discretize::{assemble_t_unchecked, build_grid, t_norm, Domain, Grid, OperatorMatrix, OperatorRole};
use crate::error::{Error, Result};
use crate::measure::LevyMeasure;

/// Largest tolerated `max |B(ΩI - T) - I|`.
pub const INVERSE_RESIDUAL_TOL: f64 = 1e-10;

/// Why `L_Δ` is invertible.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    /// `‖T‖ < Ω`: the Neumann series of `T/Ω` converges.
    Neumann,
    /// `T^m = 0`: the Neumann series is a finite sum.
    Nilpotent,
}

#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)] // one per quasi-potential
pub enum Representation {
    Grid {
        /// Jump operator on the grid.
        t: OperatorMatrix,
        /// `B = (ΩI - T)⁻¹`, role `B`.
        b: OperatorMatrix,
        /// `T₁ = ΩB - I`; entry `(i, j)` is the increment of `Φ(x_i, ·)` over cell `j`.
        t1: DMatrix<f64>,
        residual: f64,
        /// `Some(m)` when `T` is nilpotent with index `m`.
        nilpotency_index: Option<usize>,
    },
    Exact(ExactAtomOperator),
}

/// Inverse of the truncated generator, on a grid or exact for positive atoms.
#[derive(Debug, Clone)]
pub struct Quasipotential {
    pub omega: f64,
    pub condition: Condition,
    pub repr: Representation,
}

/// Nilpotency index of a nonnegative matrix from its support graph:
/// `Some(longest path + 1)` when the graph is acyclic.
pub fn matrix_nilpotency_index(t: &DMatrix<f64>) -> Option<usize> {
    let n = t.nrows();
    let mut indeg = vec![0usize; n];
    for i in 0..n {
        for j in 0..n {
            if t[(i, j)] != 0.0 {
                indeg[j] += 1;
            }
        }
    }
    let mut depth = vec![0usize; n];
    let mut queue: Vec<usize> = (0..n).filter(|&j| indeg[j] == 0).collect();
    let mut seen = 0;
    while let Some(i) = queue.pop() {
        seen += 1;
        for j in 0..n {
            if t[(i, j)] != 0.0 {
                depth[j] = depth[j].max(depth[i] + 1);
                indeg[j] -= 1;
                if indeg[j] == 0 {
                    queue.push(j);
                }
            }
        }
    }
    if seen < n {
        None
    } else {
        Some(depth.iter().copied().max().unwrap_or(0) + 1)
    }
}

/// `B = (ΩI - T)⁻¹` by dense LU; requires `‖T‖ < Ω`, a nilpotent `T`, or a
/// certified `ρ(T) < Ω`.
pub fn build_b(t: &OperatorMatrix) -> Result<Quasipotential> {
    let jump = t.jump_part()?;
    let omega = t.omega;
    let norm = row_sum_norm(&jump);
    let nil = matrix_nilpotency_index(&jump);
    let condition = if norm < omega {
        Condition::Neumann
    } else if nil.is_some() {
        Condition::Nilpotent
    } else if spectral_bound_below(&jump, omega) {
        Condition::Neumann
    } else {
        return Err(Error::ConditionViolated { norm, omega });
    };
    invert(t.grid.clone(), jump, omega, condition, nil)
}

/// Certifies `ρ(T) < Ω` for a nonnegative `T` through the Collatz–Wielandt
/// bound `ρ(T) ≤ max_i (Tv)_i / v_i`, valid for every positive `v`.
fn spectral_bound_below(t: &DMatrix<f64>, omega: f64) -> bool {
    if t.iter().any(|&v| v < 0.0) {
        return false;
    }
    let mut v = DVector::from_element(t.nrows(), 1.0);
    for _ in 0..200 {
        let w = t * &v;
        let bound = w.iter().zip(v.iter()).map(|(a, b)| a / b).fold(0.0, f64::max);
        if bound < omega {
            return true;
        }
        let scale = w.amax();
        if scale == 0.0 {
            return true;
        }
        v = w.map(|x| x / scale + 1e-12);
    }
    false
}

fn row_sum_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.nrows()).map(|i| m.row(i).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

fn invert(
    grid: Grid,
    jump: DMatrix<f64>,
    omega: f64,
    condition: Condition,
    nilpotency_index: Option<usize>,
) -> Result<Quasipotential> {
    let n = grid.len();
    let eye = DMatrix::<f64>::identity(n, n);
    let a = &eye * omega - &jump;
    let b = a.clone().lu().try_inverse().ok_or_else(|| {
        Error::Numerical(format!("singular system OmegaI - T (||A||_inf = {:.3e}, Omega = {omega})", row_sum_norm(&a)))
    })?;
    let residual = (&b * &a - &eye).amax();
    if !(residual <= INVERSE_RESIDUAL_TOL) {
        return Err(Error::Numerical(format!("inverse residual {residual:.3e} exceeds {INVERSE_RESIDUAL_TOL:e}")));
    }
    let t1 = &b * omega - &eye;
    let t = OperatorMatrix { entries: jump, grid: grid.clone(), role: OperatorRole::T, omega };
    let b = OperatorMatrix { entries: b, grid, role: OperatorRole::B, omega };
    Ok(Quasipotential { omega, condition, repr: Representation::Grid { t, b, t1, residual, nilpotency_index } })
}

/// Builds the quasi-potential straight from a measure and a domain, routing
/// positive atoms to the exact engine and checking `‖T‖ < Ω` with the exact
/// norm otherwise.
pub fn quasipotential_for(m: &LevyMeasure, d: &Domain, n: usize) -> Result<Quasipotential> {
    quasipotential_with(m, d, n, |g| assemble_t_unchecked(m, g))
}

/// As [`quasipotential_for`] with a caller-supplied assembler of `T` on the
/// grid, e.g. one that fills rows in parallel.
pub fn quasipotential_with<F>(m: &LevyMeasure, d: &Domain, n: usize, assemble: F) -> Result<Quasipotential>
where
    F: FnOnce(&Grid) -> OperatorMatrix,
{
    if m.is_pure_atoms() && m.atom_list().iter().all(|a| a.position > 0.0) {
        let e = ExactAtomOperator::new(m, d)?;
        return Ok(Quasipotential {
            omega: e.omega(),
            condition: Condition::Nilpotent,
            repr: Representation::Exact(e),
        });
    }
    let norm = t_norm(m, d);
    let omega = m.total_mass();
    if !(norm < omega) {
        return Err(Error::ConditionViolated { norm, omega });
    }
    let g = build_grid(d, n)?;
    let t = assemble(&g);
    let nil = matrix_nilpotency_index(&t.entries);
    invert(g, t.entries, omega, Condition::Neumann, nil)
}

/// `Σ_{k=1}^{K} (T/Ω)^k`, the truncated Neumann series of `T₁`.
pub fn neumann_partial_t1(t: &DMatrix<f64>, omega: f64, terms: usize) -> DMatrix<f64> {
    let n = t.nrows();
    let scaled = t / omega;
    let mut power = DMatrix::<f64>::identity(n, n);
    let mut acc = DMatrix::<f64>::zeros(n, n);
    for _ in 0..terms {
        power = &power * &scaled;
        acc += &power;
    }
    acc
}

impl Quasipotential {
    pub fn grid(&self) -> Option<&Grid> {
        match &self.repr {
            Representation::Grid { b, .. } => Some(&b.grid),
            Representation::Exact(_) => None,
        }
    }

    pub fn b(&self) -> Option<&OperatorMatrix> {
        match &self.repr {
            Representation::Grid { b, .. } => Some(b),
            Representation::Exact(_) => None,
        }
    }

    pub fn t(&self) -> Option<&OperatorMatrix> {
        match &self.repr {
            Representation::Grid { t, .. } => Some(t),
            Representation::Exact(_) => None,
        }
    }

    pub fn t1(&self) -> Option<&DMatrix<f64>> {
        match &self.repr {
            Representation::Grid { t1, .. } => Some(t1),
            Representation::Exact(_) => None,
        }
    }

    pub fn exact(&self) -> Option<&ExactAtomOperator> {
        match &self.repr {
            Representation::Exact(e) => Some(e),
            Representation::Grid { .. } => None,
        }
    }

    /// `max |B(ΩI - T) - I|` (zero for the exact engine).
    pub fn inverse_residual(&self) -> f64 {
        match &self.repr {
            Representation::Grid { residual, .. } => *residual,
            Representation::Exact(_) => 0.0,
        }
    }

    /// Nilpotency index of `T` when it is nilpotent.
    pub fn nilpotency_index(&self) -> Option<usize> {
        match &self.repr {
            Representation::Grid { nilpotency_index, .. } => *nilpotency_index,
            Representation::Exact(e) => Some(e.nilpotency_index()),
        }
    }

    fn node(&self, start: f64) -> Result<usize> {
        self.grid().expect("grid representation").nearest_node(start)
    }

    /// Expected exit time from `start`: `(B·1)(start) = (1/Ω)(1 + (T₁·1)(start))`.
    pub fn mean_exit_time(&self, start: f64) -> Result<f64> {
        match &self.repr {
            Representation::Grid { b, .. } => {
                let i = self.node(start)?;
                Ok(b.entries.row(i).sum())
            }
            Representation::Exact(e) => Ok((1.0 + e.neumann_t1(|_| 1.0, start)?) / self.omega),
        }
    }

    /// Mean exit time for every grid node (grid representation only).
    pub fn mean_exit_profile(&self) -> Option<DVector<f64>> {
        self.b().map(|b| &b.entries * DVector::from_element(b.dim(), 1.0))
    }

    /// `∫₀^∞ e^{-st} p(t, Δ) dt = ((I + sB)⁻¹ B·1)(start)`.
    pub fn laplace_survival(&self, s: f64, start: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(Error::Domain(format!("Laplace variable must be nonnegative, got {s}")));
        }
        match &self.repr {
            Representation::Grid { b, .. } => {
                let i = self.node(start)?;
                let n = b.dim();
                let rhs = &b.entries * DVector::from_element(n, 1.0);
                if s == 0.0 {
                    return Ok(rhs[i]);
                }
                let a = DMatrix::<f64>::identity(n, n) + &b.entries * s;
                let v = a.lu().solve(&rhs).ok_or_else(|| Error::Numerical(format!("I + sB is singular at s = {s}")))?;
                Ok(v[i])
            }
            Representation::Exact(e) => {
                let series = e.power_series(|_| 1.0, start)?;
                Ok(series.iter().enumerate().map(|(k, c)| c / (self.omega + s).powi(k as i32 + 1)).sum())
            }
        }
    }

    /// The Laplace transform at complex `s`, as `(((Ω + s)I - T)⁻¹ 1)(start)`,
    /// which equals `(I + sB)⁻¹ B 1`.
    pub fn laplace_survival_complex(&self, s: Complex64, start: f64) -> Result<Complex64> {
        match &self.repr {
            Representation::Grid { t, .. } => {
                let i = self.node(start)?;
                let n = t.dim();
                let a = DMatrix::<Complex64>::from_fn(n, n, |r, c| {
                    let d = if r == c { s + self.omega } else { Complex64::new(0.0, 0.0) };
                    d - Complex64::new(t.entries[(r, c)], 0.0)
                });
                let rhs = DVector::<Complex64>::from_element(n, Complex64::new(1.0, 0.0));
                let v = a.lu().solve(&rhs).ok_or_else(|| Error::Numerical(format!("singular resolvent at s = {s}")))?;
                Ok(v[i])
            }
            Representation::Exact(e) => {
                let series = e.power_series(|_| 1.0, start)?;
                let z = s + self.omega;
                let mut zk = z;
                let mut acc = Complex64::new(0.0, 0.0);
                for c in series {
                    acc += Complex64::new(c, 0.0) / zk;
                    zk *= z;
                }
                Ok(acc)
            }
        }
    }

    /// Survival probability `(e^{tL_Δ}·1)(start)`.
    pub fn survival(&self, t: f64, start: f64) -> Result<f64> {
        match &self.repr {
            Representation::Grid { t: jump, .. } => survival_semigroup(KilledGenerator::Grid(jump), t, start),
            Representation::Exact(e) => survival_semigroup(KilledGenerator::Exact(e), t, start),
        }
    }

    /// `Φ(x_i, y) = ∫_{a₁}^{y} γ(x_i, u) du`, accumulated over whole and partial grid cells.
    pub fn phi_kernel(&self, i: usize, y: f64) -> Result<f64> {
        let (Some(t1), Some(g)) = (self.t1(), self.grid()) else {
            return Err(Error::NotApplicable("Φ is defined for grid operators".into()));
        };
        if !g.domain().contains(y) {
            return Err(Error::Domain(format!("point {y} lies outside the domain closure")));
        }
        if i >= g.len() {
            return Err(Error::Domain(format!("node index {i} out of range")));
        }
        let mut acc = 0.0;
        for j in 0..g.len() {
            let lo = g.cell_lower(j);
            let frac = ((y - lo) / g.weights()[j]).clamp(0.0, 1.0);
            if frac == 0.0 {
                break;
            }
            acc += t1[(i, j)] * frac;
        }
        Ok(acc)
    }

    /// Radon compactness modulus: the largest total variation
    /// `Σ_j |ΔΦ(x, y_j) - ΔΦ(ξ, y_j)|` over node pairs with `|x - ξ| ≤ delta`.
    pub fn radon_modulus(&self, delta: f64) -> Result<f64> {
        let (Some(t1), Some(g)) = (self.t1(), self.grid()) else {
            return Err(Error::NotApplicable("the Radon modulus needs a grid kernel".into()));
        };
        let x = g.nodes();
        let n = x.len();
        let mut best = 0.0f64;
        for i in 0..n {
            for k in i + 1..n {
                if x[k] - x[i] > delta {
                    break;
                }
                let tv: f64 = (0..n).map(|j| (t1[(i, j)] - t1[(k, j)]).abs()).sum();
                best = best.max(tv);
            }
        }
        Ok(best)
    }
}

/// A killed generator `L_Δ = -Ω I + T` in either representation.
#[derive(Debug, Clone, Copy)]
pub enum KilledGenerator<'a> {
    /// Any `T` or `L` matrix.
    Grid(&'a OperatorMatrix),
    Exact(&'a ExactAtomOperator),
}

/// Relative truncation tolerance of the Taylor blocks in [`SemigroupStepper`].
const TAYLOR_TOL: f64 = 1e-17;
/// Upper bound for `τ‖T‖` in a single Taylor block.
const BLOCK_SCALE: f64 = 4.0;

/// Advances `v ↦ e^{τ L_Δ} v = e^{-Ωτ} e^{τT} v` on the grid.
///
/// The interval is cut into blocks with `τ‖T‖ ≤ 4`; each block sums the Taylor
/// series of `e^{τT}v`, whose terms are nonnegative for `v ≥ 0`, until the
/// geometric tail bound drops below `1e-17` of the partial sum.
pub struct SemigroupStepper {
    jump: DMatrix<f64>,
    omega: f64,
    norm: f64,
    state: DVector<f64>,
}

impl SemigroupStepper {
    pub fn new(op: &OperatorMatrix) -> Result<Self> {
        let jump = op.jump_part()?;
        let norm = row_sum_norm(&jump);
        let n = jump.nrows();
        Ok(Self { jump, omega: op.omega, norm, state: DVector::from_element(n, 1.0) })
    }

    pub fn state(&self) -> &DVector<f64> {
        &self.state
    }

    pub fn advance(&mut self, tau: f64) {
        if tau <= 0.0 {
            return;
        }
        let blocks = ((tau * self.norm) / BLOCK_SCALE).ceil().max(1.0) as usize;
        let h = tau / blocks as f64;
        let rho = h * self.norm;
        for _ in 0..blocks {
            let mut term = self.state.clone();
            let mut sum = term.clone();
            let mut k = 1usize;
            loop {
                term = &self.jump * term * (h / k as f64);
                sum += &term;
                let r = rho / (k + 1) as f64;
                let tail = if r < 1.0 { term.amax() * r / (1.0 - r) } else { f64::INFINITY };
                if tail <= TAYLOR_TOL * sum.amax() || term.amax() == 0.0 {
                    break;
                }
                k += 1;
            }
            self.state = sum * (-self.omega * h).exp();
        }
    }
}

/// `(e^{tL_Δ}·1)(start)`: Taylor blocks on a grid, or the finite series
/// `e^{-Ωt} Σ_{k<m} t^k (T^k 1)(start) / k!` for nilpotent atoms.
pub fn survival_semigroup(gen: KilledGenerator<'_>, t: f64, start: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("time must be nonnegative, got {t}")));
    }
    match gen {
        KilledGenerator::Grid(op) => {
            let i = op.grid.nearest_node(start)?;
            let mut stepper = SemigroupStepper::new(op)?;
            stepper.advance(t);
            Ok(stepper.state()[i].clamp(0.0, 1.0))
        }
        KilledGenerator::Exact(e) => {
            let series = e.power_series(|_| 1.0, start)?;
            let mut coeff = 1.0;
            let mut acc = 0.0;
            for (k, c) in series.iter().enumerate() {
                if k > 0 {
                    coeff *= t / k as f64;
                }
                acc += coeff * c;
            }
            Ok(((-e.omega() * t).exp() * acc).clamp(0.0, 1.0))
        }
    }
}

/// Fixed-Talbot inversion of a Laplace transform at time `t > 0` with `m` nodes.
pub fn invert_laplace_talbot<F>(f: F, t: f64, m: usize) -> Result<f64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let r = 2.0 * m as f64 / (5.0 * t);
    let mut acc = 0.5 * (f(Complex64::new(r, 0.0))?.re) * (r * t).exp();
    for k in 1..m {
        let theta = k as f64 * core::f64::consts::PI / m as f64;
        let cot = theta.cos() / theta.sin();
        let s = Complex64::new(r * theta * cot, r * theta);
        let sigma = theta + (theta * cot - 1.0) * cot;
        let w = Complex64::new(1.0, sigma);
        acc += ((s * t).exp() * f(s)? * w).re;
    }
    Ok(acc * r / m as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::{assemble_t, from_rows};
    use crate::measure::Atom;

    fn bilateral_qp(omega_len: f64, n: usize) -> Quasipotential {
        let m = LevyMeasure::bilateral_exponential(1.0).unwrap();
        let g = build_grid(&Domain::interval(0.0, omega_len).unwrap(), n).unwrap();
        build_b(&assemble_t(&m, &g).unwrap()).unwrap()
    }

    fn atom_qp(pos: f64) -> Quasipotential {
        let m = LevyMeasure::atoms(vec![Atom::new(pos, 1.0)]).unwrap();
        quasipotential_for(&m, &Domain::interval(0.0, 1.0).unwrap(), 10).unwrap()
    }

    #[test]
    fn zero_operator_gives_scaled_identity() {
        let g = build_grid(&Domain::interval(0.0, 1.0).unwrap(), 12).unwrap();
        let t = from_rows(vec![0.0; 144], &g, 2.5);
        let q = build_b(&t).unwrap();
        let b = &q.b().unwrap().entries;
        assert!((b - DMatrix::<f64>::identity(12, 12) * 0.4).amax() < 1e-15);
        assert_eq!(q.condition, Condition::Neumann);
        assert_eq!(q.nilpotency_index(), Some(1));
    }

    #[test]
    fn inverse_residual_and_positivity() {
        let q = bilateral_qp(1.0, 200);
        assert!(q.inverse_residual() <= INVERSE_RESIDUAL_TOL);
        assert!(q.b().unwrap().entries.iter().all(|&v| v >= 0.0));
        assert!(q.t1().unwrap().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn neumann_series_converges_geometrically() {
        let q = bilateral_qp(1.0, 120);
        let t = &q.t().unwrap().entries;
        let t1 = q.t1().unwrap();
        let ratio = row_sum_norm(t) / q.omega;
        let e10 = (neumann_partial_t1(t, q.omega, 10) - t1).amax();
        let e15 = (neumann_partial_t1(t, q.omega, 15) - t1).amax();
        assert!(e15 < e10);
        assert!(e15 / e10 <= ratio.powi(5) * 1.05, "{} vs {}", e15 / e10, ratio.powi(5));
    }

    #[test]
    fn condition_violation_is_reported() {
        let m = LevyMeasure::density_table(vec![-0.1, 0.1], vec![5.0, 5.0]).unwrap();
        let d = Domain::interval(0.0, 3.0).unwrap();
        assert!(matches!(quasipotential_for(&m, &d, 50), Err(Error::ConditionViolated { .. })));
        let mixed = LevyMeasure::atoms(vec![Atom::new(0.1, 1.0), Atom::new(-0.1, 1.0)]).unwrap();
        assert!(matches!(quasipotential_for(&mixed, &d, 50), Err(Error::ConditionViolated { .. })));
    }

    #[test]
    fn matrix_condition_uses_the_spectral_radius() {
        let g = build_grid(&Domain::interval(0.0, 1.0).unwrap(), 4).unwrap();
        // ρ = 4 = Ω: singular
        let full = crate::discretize::from_rows(vec![1.0; 16], &g, 4.0);
        assert!(matches!(build_b(&full), Err(Error::ConditionViolated { .. })));
        // the first row sums to 4.4 > Ω = 4.2, yet ρ ≈ 0.86
        let mut rows = vec![0.1; 16];
        rows[1] = 4.1;
        let skew = crate::discretize::from_rows(rows, &g, 4.2);
        let q = build_b(&skew).unwrap();
        assert_eq!(q.condition, Condition::Neumann);
        assert!(q.b().unwrap().entries.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn exact_engine_examples() {
        let q = atom_qp(0.3);
        assert_eq!(q.mean_exit_time(0.0).unwrap(), 4.0);
        assert!((q.laplace_survival(1.0, 0.0).unwrap() - 0.9375).abs() < 1e-15);
        assert_eq!(q.laplace_survival(0.0, 0.0).unwrap(), 4.0);
        let s1 = q.survival(1.0, 0.0).unwrap();
        assert!((s1 - (-1.0f64).exp() * 8.0 / 3.0).abs() < 1e-15);
        assert_eq!(q.survival(0.0, 0.0).unwrap(), 1.0);
        let exit = atom_qp(1.5);
        assert_eq!(exit.mean_exit_time(0.0).unwrap(), 1.0);
        assert!(q.mean_exit_time(1.2).is_err());
    }

    #[test]
    fn laplace_initial_value() {
        let q = bilateral_qp(core::f64::consts::PI, 100);
        let s = 1e3;
        let v = s * q.laplace_survival(s, 0.0).unwrap();
        assert!((v - 1.0).abs() < 0.01);
        assert_eq!(q.laplace_survival(0.0, 0.0).unwrap(), q.mean_exit_time(0.0).unwrap());
        let e = atom_qp(0.3);
        assert!((s * e.laplace_survival(s, 0.0).unwrap() - 1.0).abs() < 0.01);
        assert!(q.laplace_survival(-1.0, 0.0).is_err());
    }

    #[test]
    fn complex_laplace_matches_real_axis() {
        let q = bilateral_qp(1.0, 60);
        for &s in &[0.0, 0.5, 3.0] {
            let re = q.laplace_survival(s, 0.3).unwrap();
            let c = q.laplace_survival_complex(Complex64::new(s, 0.0), 0.3).unwrap();
            assert!((c.re - re).abs() < 1e-12 && c.im.abs() < 1e-14);
        }
    }

    #[test]
    fn aligned_grid_matches_exact_engine() {
        // spacing 0.1, atom 0.3 = three cells
        let m = LevyMeasure::atoms(vec![Atom::new(0.3, 1.0)]).unwrap();
        let d = Domain::interval(0.0, 1.0).unwrap();
        let g = build_grid(&d, 10).unwrap();
        let grid_q = build_b(&crate::discretize::embed_atoms(&m, &g)).unwrap();
        assert_eq!(grid_q.condition, Condition::Nilpotent);
        let exact = ExactAtomOperator::new(&m, &d).unwrap();
        let b = &grid_q.b().unwrap().entries;
        for (i, &x) in g.nodes().iter().enumerate() {
            for (j, &y) in g.nodes().iter().enumerate() {
                // (B δ_y)(x) = (δ(x, y) + T₁δ_y(x)) / Ω on the exact side
                let t1 = exact.neumann_t1(|z| if (z - y).abs() < 1e-9 { 1.0 } else { 0.0 }, x).unwrap();
                let e = (if i == j { 1.0 } else { 0.0 } + t1) / exact.omega();
                assert!((b[(i, j)] - e).abs() < 1e-12, "({i},{j}): {} vs {e}", b[(i, j)]);
            }
        }
    }

    #[test]
    fn stepper_matches_closed_form_for_constant_rows() {
        // T = c·I gives survival e^{-(Ω - c)t}
        let g = build_grid(&Domain::interval(0.0, 1.0).unwrap(), 5).unwrap();
        let mut rows = vec![0.0; 25];
        for i in 0..5 {
            rows[i * 6] = 0.7;
        }
        let t = from_rows(rows, &g, 2.0);
        let s = survival_semigroup(KilledGenerator::Grid(&t), 12.0, 0.5).unwrap();
        assert!((s / (-1.3f64 * 12.0).exp() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn talbot_inverts_nilpotent_transform() {
        let q = atom_qp(0.3);
        for &t in &[1.0, 2.0] {
            let inv = invert_laplace_talbot(|s| q.laplace_survival_complex(s, 0.0), t, 20).unwrap();
            let direct = q.survival(t, 0.0).unwrap();
            assert!((inv - direct).abs() < 1e-4, "t={t}: {inv} vs {direct}");
        }
    }

    #[test]
    fn phi_kernel_normalization() {
        let q = bilateral_qp(1.0, 50);
        let t1 = q.t1().unwrap();
        assert_eq!(q.phi_kernel(7, 0.0).unwrap(), 0.0);
        let total: f64 = t1.row(7).sum();
        assert!((q.phi_kernel(7, 1.0).unwrap() - total).abs() < 1e-14);
        assert!(q.phi_kernel(7, 1.1).is_err());
    }

    #[test]
    fn radon_modulus_zero_delta() {
        let q = bilateral_qp(1.0, 50);
        assert_eq!(q.radon_modulus(0.0).unwrap(), 0.0);
        assert!(atom_qp(0.3).radon_modulus(0.1).is_err());
    }
}
