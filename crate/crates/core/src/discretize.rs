//! Domains, midpoint grids and dense Nyström matrices for the jump operator
//! `Tf(x) = ∫_Δ f(y) ν(dy - x)` and the truncated generator `L_Δ = -Ω I + T`.

use alloc::format;
use alloc::vec::Vec;
use nalgebra::DMatrix;
#[allow(unused_imports)] // shadowed by inherent methods whenever std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::measure::{Atom, LevyMeasure};

/// Finite union of disjoint closed segments `[a_k, b_k]`, strictly ordered.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    segments: Vec<(f64, f64)>,
}

impl Domain {
    pub fn new(segments: Vec<(f64, f64)>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::Config("domain needs at least one segment".into()));
        }
        let mut prev = f64::NEG_INFINITY;
        for &(a, b) in &segments {
            if !(a.is_finite() && b.is_finite()) || !(a < b) || !(prev < a) {
                return Err(Error::Config(format!(
                    "segments must satisfy a1 < b1 < a2 < b2 < ...; offending segment [{a}, {b}]"
                )));
            }
            prev = b;
        }
        Ok(Self { segments })
    }

    pub fn interval(a: f64, b: f64) -> Result<Self> {
        Self::new(alloc::vec![(a, b)])
    }

    pub fn segments(&self) -> &[(f64, f64)] {
        &self.segments
    }

    pub fn total_length(&self) -> f64 {
        self.segments.iter().map(|(a, b)| b - a).sum()
    }

    pub fn lower(&self) -> f64 {
        self.segments[0].0
    }

    pub fn upper(&self) -> f64 {
        self.segments[self.segments.len() - 1].1
    }

    pub fn span(&self) -> f64 {
        self.upper() - self.lower()
    }

    /// Index of the closed segment containing `x`.
    pub fn segment_of(&self, x: f64) -> Option<usize> {
        let i = self.segments.partition_point(|&(_, b)| b < x);
        match self.segments.get(i) {
            Some(&(a, b)) if a <= x && x <= b => Some(i),
            _ => None,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.segment_of(x).is_some()
    }

    /// `ν(Δ - x)`: the jump mass that lands back inside `Δ` from `x`.
    pub fn return_mass(&self, m: &LevyMeasure, x: f64) -> f64 {
        self.segments.iter().map(|&(a, b)| m.mass_in(a - x, b - x)).sum()
    }
}

/// Composite midpoint grid over a [`Domain`].
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    domain: Domain,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    segment_index: Vec<usize>,
    /// `(first node, node count)` per segment.
    layout: Vec<(usize, usize)>,
}

impl Grid {
    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn segment_index(&self) -> &[usize] {
        &self.segment_index
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Left edge of the quadrature cell around node `i`.
    pub fn cell_lower(&self, i: usize) -> f64 {
        self.nodes[i] - 0.5 * self.weights[i]
    }

    /// Node nearest to `x`, restricted to the segment containing `x`.
    pub fn nearest_node(&self, x: f64) -> Result<usize> {
        let s = self.domain.segment_of(x).ok_or_else(|| Error::Domain(format!("point {x} lies outside the domain")))?;
        let (first, count) = self.layout[s];
        let (a, _) = self.domain.segments[s];
        let k = ((x - a) / self.weights[first]).floor() as isize;
        Ok(first + k.clamp(0, count as isize - 1) as usize)
    }

    /// Linear-interpolation weights that evaluate a grid function at `z`;
    /// empty when `z` lies outside the domain. Constant extension over the
    /// outer half cells of each segment.
    pub fn interpolation(&self, z: f64) -> Vec<(usize, f64)> {
        let Some(s) = self.domain.segment_of(z) else {
            return Vec::new();
        };
        let (first, count) = self.layout[s];
        let last = first + count - 1;
        if z <= self.nodes[first] {
            return alloc::vec![(first, 1.0)];
        }
        if z >= self.nodes[last] {
            return alloc::vec![(last, 1.0)];
        }
        let h = self.weights[first];
        let k = (((z - self.nodes[first]) / h).floor() as usize).min(count - 2);
        let j = first + k;
        let theta = ((z - self.nodes[j]) / h).clamp(0.0, 1.0);
        if theta == 0.0 {
            alloc::vec![(j, 1.0)]
        } else if theta == 1.0 {
            alloc::vec![(j + 1, 1.0)]
        } else {
            alloc::vec![(j, 1.0 - theta), (j + 1, theta)]
        }
    }
}

/// Midpoint nodes, allocated to segments in proportion to their length.
pub fn build_grid(d: &Domain, n_total: usize) -> Result<Grid> {
    let k = d.segments.len();
    if n_total < k {
        return Err(Error::Config(format!("grid needs at least one node per segment ({k}), got {n_total}")));
    }
    let total = d.total_length();
    let quotas: Vec<f64> = d.segments.iter().map(|(a, b)| n_total as f64 * (b - a) / total).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| (q.floor() as usize).max(1)).collect();
    // largest remainder, then trim segments that were bumped up to one node
    while counts.iter().sum::<usize>() < n_total {
        let i = (0..k)
            .max_by(|&i, &j| {
                let ri = quotas[i] - counts[i] as f64;
                let rj = quotas[j] - counts[j] as f64;
                ri.partial_cmp(&rj).unwrap().then(j.cmp(&i))
            })
            .unwrap();
        counts[i] += 1;
    }
    while counts.iter().sum::<usize>() > n_total {
        let i = (0..k)
            .filter(|&i| counts[i] > 1)
            .min_by(|&i, &j| {
                let ri = quotas[i] - counts[i] as f64;
                let rj = quotas[j] - counts[j] as f64;
                ri.partial_cmp(&rj).unwrap().then(i.cmp(&j))
            })
            .unwrap();
        counts[i] -= 1;
    }

    let mut nodes = Vec::with_capacity(n_total);
    let mut weights = Vec::with_capacity(n_total);
    let mut segment_index = Vec::with_capacity(n_total);
    let mut layout = Vec::with_capacity(k);
    for (s, (&(a, b), &c)) in d.segments.iter().zip(&counts).enumerate() {
        layout.push((nodes.len(), c));
        let h = (b - a) / c as f64;
        for j in 0..c {
            nodes.push(a + (j as f64 + 0.5) * h);
            weights.push(h);
            segment_index.push(s);
        }
    }
    Ok(Grid { domain: d.clone(), nodes, weights, segment_index, layout })
}

/// Default probe count for [`t_norm`].
pub const DEFAULT_NORM_PROBES: usize = 4000;

/// `sup_{x∈Δ} ν(Δ - x)`, the operator norm of `T` on bounded functions.
pub fn t_norm(m: &LevyMeasure, d: &Domain) -> f64 {
    t_norm_with_probes(m, d, DEFAULT_NORM_PROBES)
}

/// [`t_norm`] with an explicit probe count; per-probe masses are exact and the
/// best probe is refined by golden-section search on its bracket.
pub fn t_norm_with_probes(m: &LevyMeasure, d: &Domain, probes: usize) -> f64 {
    let total = d.total_length();
    let mut best = 0.0f64;
    for &(a, b) in &d.segments {
        let count = (((b - a) / total) * probes as f64).ceil().max(1.0) as usize;
        let h = (b - a) / count as f64;
        let mut best_here = (0.0f64, a);
        for j in 0..=count {
            let x = if j == count { b } else { a + j as f64 * h };
            let v = d.return_mass(m, x);
            if v > best_here.0 {
                best_here = (v, x);
            }
        }
        let (v0, x0) = best_here;
        let refined = golden_max(|x| d.return_mass(m, x), (x0 - h).max(a), (x0 + h).min(b));
        best = best.max(v0).max(refined);
    }
    best.min(m.total_mass())
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let g = 0.5 * (5.0f64.sqrt() - 1.0);
    let mut c = hi - g * (hi - lo);
    let mut e = lo + g * (hi - lo);
    let (mut fc, mut fe) = (f(c), f(e));
    let mut best = fc.max(fe);
    for _ in 0..80 {
        if fc >= fe {
            hi = e;
            e = c;
            fe = fc;
            c = hi - g * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = e;
            fc = fe;
            e = lo + g * (hi - lo);
            fe = f(e);
        }
        best = best.max(fc).max(fe);
    }
    best
}

/// Which operator an [`OperatorMatrix`] represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorRole {
    /// Jump operator `T`.
    T,
    /// Truncated generator `L_Δ = -Ω I + T`.
    L,
    /// Quasi-potential `B = -L_Δ⁻¹`.
    B,
}

/// Dense operator on a grid.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub entries: DMatrix<f64>,
    pub grid: Grid,
    pub role: OperatorRole,
    pub omega: f64,
}

impl OperatorMatrix {
    pub fn dim(&self) -> usize {
        self.grid.len()
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.entries.nrows()).map(|i| self.entries.row(i).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// The jump part `T`, whatever the role of `self` (only `T` and `L` are accepted).
    pub fn jump_part(&self) -> Result<DMatrix<f64>> {
        match self.role {
            OperatorRole::T => Ok(self.entries.clone()),
            OperatorRole::L => {
                let n = self.dim();
                Ok(&self.entries + DMatrix::<f64>::identity(n, n) * self.omega)
            }
            OperatorRole::B => Err(Error::Config("expected a T or L operator, got B".into())),
        }
    }
}

/// One row of the continuous part: `out[j] = w_j ν'(y_j - x_i)`.
pub fn assemble_t_row(m: &LevyMeasure, g: &Grid, i: usize, out: &mut [f64]) {
    let xi = g.nodes[i];
    match m.density() {
        Some(d) => {
            for ((o, &y), &w) in out.iter_mut().zip(&g.nodes).zip(&g.weights) {
                *o = w * d.value(y - xi);
            }
        }
        None => out.iter_mut().for_each(|o| *o = 0.0),
    }
    add_atom_row(m.atom_list(), g, i, out);
}

fn add_atom_row(atoms: &[Atom], g: &Grid, i: usize, out: &mut [f64]) {
    let xi = g.nodes[i];
    for a in atoms {
        for (j, w) in g.interpolation(xi + a.position) {
            out[j] += a.weight * w;
        }
    }
}

/// Nyström matrix of `T`. Atoms of a mixture act on grid functions through
/// linear interpolation; pure atom measures go to the exact atom engine.
pub fn assemble_t(m: &LevyMeasure, g: &Grid) -> Result<OperatorMatrix> {
    if m.is_pure_atoms() {
        return Err(Error::UseExactAtomEngine);
    }
    Ok(assemble_t_unchecked(m, g))
}

pub(crate) fn assemble_t_unchecked(m: &LevyMeasure, g: &Grid) -> OperatorMatrix {
    let n = g.len();
    let mut rows = alloc::vec![0.0; n * n];
    for (i, row) in rows.chunks_mut(n).enumerate() {
        assemble_t_row(m, g, i, row);
    }
    from_rows(rows, g, m.total_mass())
}

/// Builds a `T` matrix from row-major data produced by [`assemble_t_row`].
pub fn from_rows(rows: Vec<f64>, g: &Grid, omega: f64) -> OperatorMatrix {
    let n = g.len();
    OperatorMatrix { entries: DMatrix::from_row_slice(n, n, &rows), grid: g.clone(), role: OperatorRole::T, omega }
}

/// Embeds an atom measure on a grid by linear interpolation of the shifted
/// evaluation points. Exact on grids aligned with the atom positions.
pub fn embed_atoms(m: &LevyMeasure, g: &Grid) -> OperatorMatrix {
    let n = g.len();
    let mut rows = alloc::vec![0.0; n * n];
    for (i, row) in rows.chunks_mut(n).enumerate() {
        add_atom_row(m.atom_list(), g, i, row);
    }
    from_rows(rows, g, m.total_mass())
}

/// `L_Δ = -Ω I + T`.
pub fn assemble_l(m: &LevyMeasure, g: &Grid) -> Result<OperatorMatrix> {
    Ok(to_generator(assemble_t(m, g)?))
}

/// Turns a `T` matrix into `L_Δ = -Ω I + T`.
pub fn to_generator(mut t: OperatorMatrix) -> OperatorMatrix {
    debug_assert_eq!(t.role, OperatorRole::T);
    for i in 0..t.dim() {
        t.entries[(i, i)] -= t.omega;
    }
    t.role = OperatorRole::L;
    t
}
