//! Summable Lévy measures and their scalar functionals.
//!
//! A [`LevyMeasure`] is the sum of an optional continuous part (a density
//! family or a piecewise-linear table) and a finite list of atoms. Its total
//! mass `Ω` is finite and positive, so the process it drives is compound
//! Poisson: jumps arrive at rate `Ω` and are distributed as `ν / Ω`.

use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)] // shadowed by inherent methods whenever std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_split};

/// A point mass `weight · δ(position)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub position: f64,
    pub weight: f64,
}

impl Atom {
    pub fn new(position: f64, weight: f64) -> Self {
        Self { position, weight }
    }
}

/// Piecewise-linear density, zero outside `[x[0], x[n-1]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityTable {
    x: Vec<f64>,
    f: Vec<f64>,
    /// Cumulative mass at each breakpoint.
    cum: Vec<f64>,
}

impl DensityTable {
    pub fn new(x: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        if x.len() < 2 || x.len() != f.len() {
            return Err(Error::InvalidMeasure(format!(
                "density table needs matching breakpoints and values, at least two (got {} and {})",
                x.len(),
                f.len()
            )));
        }
        if x.iter().chain(f.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidMeasure("density table entries must be finite".into()));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidMeasure("breakpoints must be strictly increasing".into()));
        }
        if f.iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidMeasure("density values must be nonnegative".into()));
        }
        let mut cum = Vec::with_capacity(x.len());
        cum.push(0.0);
        for i in 0..x.len() - 1 {
            let piece = 0.5 * (f[i] + f[i + 1]) * (x[i + 1] - x[i]);
            cum.push(cum[i] + piece);
        }
        Ok(Self { x, f, cum })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.f
    }

    fn piece(&self, y: f64) -> usize {
        // index i with x[i] <= y < x[i+1], clamped to valid pieces
        match self.x.binary_search_by(|v| v.partial_cmp(&y).unwrap()) {
            Ok(i) => i.min(self.x.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.x.len() - 2),
        }
    }

    fn slope(&self, i: usize) -> f64 {
        (self.f[i + 1] - self.f[i]) / (self.x[i + 1] - self.x[i])
    }

    pub fn density(&self, y: f64) -> f64 {
        let n = self.x.len();
        if y < self.x[0] || y > self.x[n - 1] {
            return 0.0;
        }
        let i = self.piece(y);
        self.f[i] + self.slope(i) * (y - self.x[i])
    }

    pub fn mass(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    pub fn cdf(&self, y: f64) -> f64 {
        let n = self.x.len();
        if y <= self.x[0] {
            return 0.0;
        }
        if y >= self.x[n - 1] {
            return self.mass();
        }
        let i = self.piece(y);
        let t = y - self.x[i];
        self.cum[i] + self.f[i] * t + 0.5 * self.slope(i) * t * t
    }

    /// Smallest `y` with `cdf(y) = c`, for `c` in `(0, mass]`.
    fn inverse_cdf(&self, c: f64) -> f64 {
        let n = self.x.len();
        let i = match self.cum.binary_search_by(|v| v.partial_cmp(&c).unwrap()) {
            Ok(i) => return self.first_positive_at(i),
            Err(i) => i.saturating_sub(1).min(n - 2),
        };
        let d = c - self.cum[i];
        let fi = self.f[i];
        let s = self.slope(i);
        let disc = (fi * fi + 2.0 * s * d).max(0.0);
        let denom = fi + disc.sqrt();
        let tau = if denom > 0.0 { 2.0 * d / denom } else { 0.0 };
        (self.x[i] + tau).min(self.x[i + 1])
    }

    /// Breakpoint `x[i]` where cumulative mass equals `cum[i]` exactly; skip flat zero pieces
    /// to the left so the generalized inverse stays the infimum.
    fn first_positive_at(&self, i: usize) -> f64 {
        let mut j = i;
        while j > 0 && self.cum[j - 1] == self.cum[i] {
            j -= 1;
        }
        self.x[j]
    }

    /// Exact `∫ y f(y) dy` over `[lo, hi]`.
    fn first_moment(&self, lo: f64, hi: f64) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.x.len() - 1 {
            let a = self.x[i].max(lo);
            let b = self.x[i + 1].min(hi);
            if b <= a {
                continue;
            }
            let m = 0.5 * (a + b);
            // Simpson is exact for the quadratic y f(y)
            let g = |y: f64| y * self.density_on_piece(i, y);
            acc += (b - a) / 6.0 * (g(a) + 4.0 * g(m) + g(b));
        }
        acc
    }

    fn density_on_piece(&self, i: usize, y: f64) -> f64 {
        self.f[i] + self.slope(i) * (y - self.x[i])
    }
}

/// Continuous part of a Lévy measure.
#[derive(Debug, Clone, PartialEq)]
pub enum Density {
    /// `p² e^{-p|x|}`, total mass `2p`.
    BilateralExponential {
        p: f64,
    },
    Table(DensityTable),
}

impl Density {
    pub fn value(&self, y: f64) -> f64 {
        match self {
            Density::BilateralExponential { p } => p * p * (-p * y.abs()).exp(),
            Density::Table(t) => t.density(y),
        }
    }

    pub fn mass(&self) -> f64 {
        match self {
            Density::BilateralExponential { p } => 2.0 * p,
            Density::Table(t) => t.mass(),
        }
    }

    /// `∫_{-∞}^{y}` of the density.
    pub fn cdf(&self, y: f64) -> f64 {
        match self {
            Density::BilateralExponential { p } => {
                if y < 0.0 {
                    p * (p * y).exp()
                } else {
                    2.0 * p - p * (-p * y).exp()
                }
            }
            Density::Table(t) => t.cdf(y),
        }
    }

    /// Upper tail `∫_{y}^{∞}`, computed without cancellation for the family.
    fn upper_tail(&self, y: f64) -> f64 {
        match self {
            Density::BilateralExponential { p } if y > 0.0 => p * (-p * y).exp(),
            _ => self.mass() - self.cdf(y),
        }
    }

    fn inverse_cdf(&self, c: f64) -> f64 {
        match self {
            Density::BilateralExponential { p } => {
                if c <= *p {
                    (c / p).ln() / p
                } else {
                    -((2.0 * p - c) / p).ln() / p
                }
            }
            Density::Table(t) => t.inverse_cdf(c),
        }
    }

    /// Points where the density is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Density::BilateralExponential { .. } => alloc::vec![0.0],
            Density::Table(t) => {
                let mut b = t.x.clone();
                b.push(0.0);
                b
            }
        }
    }

    /// Whether the density lives on a bounded interval.
    pub fn bounded_support(&self) -> Option<(f64, f64)> {
        match self {
            Density::BilateralExponential { .. } => None,
            Density::Table(t) => Some((t.x[0], *t.x.last().unwrap())),
        }
    }
}

/// A summable Lévy measure: optional density plus atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct LevyMeasure {
    density: Option<Density>,
    atoms: Vec<Atom>,
    omega: f64,
}

impl LevyMeasure {
    pub fn bilateral_exponential(p: f64) -> Result<Self> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::InvalidMeasure(format!("rate p must be positive, got {p}")));
        }
        Self::build(Some(Density::BilateralExponential { p }), Vec::new())
    }

    pub fn density_table(x: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        Self::build(Some(Density::Table(DensityTable::new(x, f)?)), Vec::new())
    }

    pub fn atoms(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::NotTypeI(0.0));
        }
        Self::build(None, atoms)
    }

    pub fn mixture(continuous: Density, atoms: Vec<Atom>) -> Result<Self> {
        Self::build(Some(continuous), atoms)
    }

    fn build(density: Option<Density>, mut atoms: Vec<Atom>) -> Result<Self> {
        for a in &atoms {
            if !a.position.is_finite() || a.position == 0.0 {
                return Err(Error::InvalidMeasure(format!(
                    "atom positions must be finite and nonzero, got {}",
                    a.position
                )));
            }
            if !(a.weight > 0.0 && a.weight.is_finite()) {
                return Err(Error::InvalidMeasure(format!("atom weights must be positive, got {}", a.weight)));
            }
        }
        atoms.sort_by(|a, b| a.position.partial_cmp(&b.position).unwrap());
        if atoms.windows(2).any(|w| w[0].position == w[1].position) {
            return Err(Error::InvalidMeasure("atom positions must be distinct".into()));
        }
        let omega = density.as_ref().map_or(0.0, Density::mass) + atoms.iter().map(|a| a.weight).sum::<f64>();
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::NotTypeI(omega));
        }
        Ok(Self { density, atoms, omega })
    }

    pub fn density(&self) -> Option<&Density> {
        self.density.as_ref()
    }

    /// Atoms sorted by position.
    pub fn atom_list(&self) -> &[Atom] {
        &self.atoms
    }

    /// The continuous (`I_c`) component as a measure of its own.
    pub fn continuous_part(&self) -> Option<LevyMeasure> {
        let d = self.density.clone()?;
        Self::build(Some(d), Vec::new()).ok()
    }

    /// The discrete (`I_d`) component as a measure of its own.
    pub fn atom_part(&self) -> Option<LevyMeasure> {
        if self.atoms.is_empty() {
            None
        } else {
            Self::build(None, self.atoms.clone()).ok()
        }
    }

    pub fn is_pure_atoms(&self) -> bool {
        self.density.is_none()
    }

    /// Density of the continuous part at `y` (zero when absent).
    pub fn density_at(&self, y: f64) -> f64 {
        self.density.as_ref().map_or(0.0, |d| d.value(y))
    }

    /// Total mass `Ω = ∫ ν(dx)`.
    pub fn total_mass(&self) -> f64 {
        self.omega
    }

    /// Drift `γ = ∫_{|y|<1} y ν(dy)` that centers the process.
    pub fn centering_gamma(&self) -> f64 {
        let cont = match &self.density {
            None | Some(Density::BilateralExponential { .. }) => 0.0,
            Some(Density::Table(t)) => t.first_moment(-1.0, 1.0),
        };
        cont + self.atoms.iter().filter(|a| a.position.abs() < 1.0).map(|a| a.position * a.weight).sum::<f64>()
    }

    /// `ν([lo, hi])`, atoms at the endpoints included.
    pub fn mass_in(&self, lo: f64, hi: f64) -> f64 {
        if hi < lo {
            return 0.0;
        }
        let cont = self.density.as_ref().map_or(0.0, |d| {
            if lo > 0.0 {
                // stay in the upper tail to avoid cancellation far from the origin
                (d.upper_tail(lo) - d.upper_tail(hi)).max(0.0)
            } else {
                (d.cdf(hi) - d.cdf(lo)).max(0.0)
            }
        });
        cont + self.atoms.iter().filter(|a| a.position >= lo && a.position <= hi).map(|a| a.weight).sum::<f64>()
    }

    /// Tail functions: `μ₋(x) = ν((-∞, x])` for `x < 0`, `μ₊(x) = -ν([x, ∞))` for `x > 0`.
    pub fn mu_tails(&self, x: f64) -> Result<f64> {
        if x == 0.0 || x.is_nan() {
            return Err(Error::Domain(format!("tail functions are undefined at x = {x}")));
        }
        let cont = self.density.as_ref().map_or(0.0, |d| if x < 0.0 { d.cdf(x) } else { -d.upper_tail(x) });
        let atoms: f64 = if x < 0.0 {
            self.atoms.iter().filter(|a| a.position <= x).map(|a| a.weight).sum()
        } else {
            -self.atoms.iter().filter(|a| a.position >= x).map(|a| a.weight).sum::<f64>()
        };
        Ok(cont + atoms)
    }

    fn tail_breaks(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.atoms.iter().map(|a| a.position).collect();
        if let Some(d) = &self.density {
            b.extend(d.breakpoints());
        }
        b
    }

    /// Convolution kernel `k(x)` anchored at `a`:
    /// `k₋(x) = ∫_{-a}^{x} μ₋`, `k₊(x) = -∫_{x}^{a} μ₊`.
    pub fn kernel_k(&self, x: f64, a: f64) -> Result<f64> {
        if x == 0.0 || !x.is_finite() {
            return Err(Error::Domain(format!("kernel k is undefined at x = {x}")));
        }
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::Domain(format!("anchor a must be positive, got {a}")));
        }
        let breaks = self.tail_breaks();
        let mu = |t: f64| self.mu_tails(t).unwrap_or(0.0);
        if x < 0.0 {
            Ok(integrate_split(mu, -a, x, &breaks))
        } else {
            Ok(-integrate_split(mu, x, a, &breaks))
        }
    }

    /// `Lf(x) = -Ω f(x) + ∫ f(x + y) ν(dy)`.
    pub fn apply_generator_direct<F: CompactFn + ?Sized>(&self, f: &F, x: f64) -> f64 {
        let mut acc = -self.omega * f.value(x);
        for a in &self.atoms {
            acc += a.weight * f.value(x + a.position);
        }
        if let Some(d) = &self.density {
            let (lo, hi) = f.support();
            let mut breaks: Vec<f64> = d.breakpoints().into_iter().map(|b| b + x).collect();
            breaks.extend(f.breakpoints());
            acc += integrate_split(|z| f.value(z) * d.value(z - x), lo, hi, &breaks);
        }
        acc
    }

    /// `Lf(x) = -∫_{-∞}^{x} μ₋(y-x) f'(y) dy - ∫_{x}^{∞} μ₊(y-x) f'(y) dy`.
    pub fn apply_generator_convolution<F: CompactFn + ?Sized>(&self, f: &F, x: f64) -> Result<f64> {
        if self.density.is_none() {
            return Err(Error::UseDirectForm);
        }
        let (lo, hi) = f.support();
        let mut breaks: Vec<f64> = self.tail_breaks().into_iter().map(|b| b + x).collect();
        breaks.extend(f.breakpoints());
        let tail = |y: f64| {
            let u = y - x;
            if u == 0.0 {
                0.0
            } else {
                self.mu_tails(u).unwrap_or(0.0) * f.derivative(y)
            }
        };
        let left = if lo < x { integrate_split(tail, lo, x.min(hi), &breaks) } else { 0.0 };
        let right = if hi > x { integrate_split(tail, x.max(lo), hi, &breaks) } else { 0.0 };
        Ok(-left - right)
    }

    /// Unimodality with mode 0: density nondecreasing on `x < 0`, nonincreasing on `x > 0`.
    pub fn is_unimodal(&self) -> Result<bool> {
        if !self.atoms.is_empty() {
            return Err(Error::NotApplicable("unimodality is checked on densities; this measure has atoms".into()));
        }
        match self.density.as_ref() {
            Some(Density::BilateralExponential { .. }) => Ok(true),
            Some(Density::Table(t)) => Ok(table_is_unimodal(t)),
            None => Err(Error::NotApplicable("pure atom measure".into())),
        }
    }

    /// Inverse CDF of the normalized jump law `ν / Ω`.
    pub fn sample_jump(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::Domain(format!("uniform draw must lie in (0,1), got {u}")));
        }
        Ok(self.sample_jump_unchecked(u))
    }

    pub(crate) fn sample_jump_unchecked(&self, u: f64) -> f64 {
        let target = u * self.omega;
        let Some(d) = &self.density else {
            let mut acc = 0.0;
            for a in &self.atoms {
                acc += a.weight;
                if acc >= target {
                    return a.position;
                }
            }
            return self.atoms.last().unwrap().position;
        };
        let mut acc = 0.0;
        for a in &self.atoms {
            let before = d.cdf(a.position);
            if target - acc <= before {
                return d.inverse_cdf(target - acc);
            }
            if before + acc + a.weight >= target {
                return a.position;
            }
            acc += a.weight;
        }
        d.inverse_cdf((target - acc).min(d.mass()))
    }
}

fn table_is_unimodal(t: &DensityTable) -> bool {
    // Walk the zero-extended density as a polyline, inserting the value at 0.
    let n = t.x.len();
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(n + 3);
    pts.push((t.x[0], 0.0));
    for i in 0..n {
        pts.push((t.x[i], t.f[i]));
    }
    pts.push((t.x[n - 1], 0.0));
    if t.x[0] > 0.0 {
        pts.insert(0, (0.0, 0.0));
    } else if t.x[n - 1] < 0.0 {
        pts.push((0.0, 0.0));
    } else if let Err(pos) = t.x.binary_search_by(|v| v.partial_cmp(&0.0).unwrap()) {
        // pos counts breakpoints below zero; account for the leading zero-extension point
        pts.insert(pos + 1, (0.0, t.density(0.0)));
    }
    pts.windows(2).all(|w| {
        let ((x0, f0), (x1, f1)) = (w[0], w[1]);
        if x1 <= 0.0 && x0 < 0.0 {
            f1 >= f0
        } else if x0 >= 0.0 && x1 > 0.0 {
            f1 <= f0
        } else {
            true
        }
    })
}

/// A compactly supported, piecewise-smooth test function.
pub trait CompactFn {
    fn value(&self, x: f64) -> f64;
    fn derivative(&self, x: f64) -> f64;
    /// Closed interval outside which the function vanishes.
    fn support(&self) -> (f64, f64);
    /// Interior points where the function or its derivative is not smooth.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// `height · exp(1 - 1/(1 - r²))` with `r = (x - center)/radius`, a C^∞ bump.
#[derive(Debug, Clone, Copy)]
pub struct Bump {
    pub center: f64,
    pub radius: f64,
    pub height: f64,
}

impl CompactFn for Bump {
    fn value(&self, x: f64) -> f64 {
        let r = (x - self.center) / self.radius;
        if r.abs() >= 1.0 {
            0.0
        } else {
            self.height * (1.0 - 1.0 / (1.0 - r * r)).exp()
        }
    }

    fn derivative(&self, x: f64) -> f64 {
        let r = (x - self.center) / self.radius;
        if r.abs() >= 1.0 {
            return 0.0;
        }
        let s = 1.0 - r * r;
        self.value(x) * (-2.0 * r / (s * s)) / self.radius
    }

    fn support(&self) -> (f64, f64) {
        (self.center - self.radius, self.center + self.radius)
    }
}

/// Constant `level` on `[lo, hi]`, zero elsewhere.
#[derive(Debug, Clone, Copy)]
pub struct Plateau {
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
}

impl CompactFn for Plateau {
    fn value(&self, x: f64) -> f64 {
        if x >= self.lo && x <= self.hi {
            self.level
        } else {
            0.0
        }
    }

    fn derivative(&self, _x: f64) -> f64 {
        0.0
    }

    fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }
}

/// Mass of the continuous part by adaptive quadrature; cross-checks the closed forms.
pub fn quadrature_mass(m: &LevyMeasure) -> f64 {
    let Some(d) = m.density() else { return 0.0 };
    match d.bounded_support() {
        Some((lo, hi)) => integrate_split(|y| d.value(y), lo, hi, &d.breakpoints()),
        None => {
            // exponential family: integrate on a range where the remaining tail is below 1e-17 of the mass
            let Density::BilateralExponential { p } = d else { unreachable!() };
            let r = 40.0 / p;
            integrate(|y| d.value(y), -r, 0.0) + integrate(|y| d.value(y), 0.0, r)
        }
    }
}
