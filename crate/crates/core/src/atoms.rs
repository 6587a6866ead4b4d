//! Exact engine for purely atomic measures with positive atoms.
//!
//! With every jump pointing right and `Δ` bounded, a path can make only
//! finitely many jumps before leaving, so `T^m = 0` and every series in `T`
//! is a finite sum over the reachable set. Evaluation is functional: no grid,
//! no interpolation.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // shadowed by inherent methods whenever std is linked
use num_traits::Float;

use crate::discretize::Domain;
use crate::error::{Error, Result};
use crate::measure::{Atom, LevyMeasure};

/// Closed intervals, sorted and disjoint.
type IntervalSet = Vec<(f64, f64)>;

fn intersect(a: &[(f64, f64)], b: &[(f64, f64)]) -> IntervalSet {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        let lo = a[i].0.max(b[j].0);
        let hi = a[i].1.min(b[j].1);
        if lo <= hi {
            out.push((lo, hi));
        }
        if a[i].1 < b[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

fn union(mut parts: IntervalSet) -> IntervalSet {
    parts.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let mut out: IntervalSet = Vec::with_capacity(parts.len());
    for (lo, hi) in parts {
        match out.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => out.push((lo, hi)),
        }
    }
    out
}

fn check_positive(atoms: &[Atom]) -> Result<()> {
    if atoms.is_empty() || atoms.iter().any(|a| !(a.position > 0.0)) {
        return Err(Error::NilpotencyNotGuaranteed);
    }
    Ok(())
}

fn shift_of(atoms: &[Atom], counts: &[u32]) -> f64 {
    atoms.iter().zip(counts).fold(0.0, |acc, (a, &c)| acc + c as f64 * a.position)
}

/// Smallest `m` with `T^m = 0` on `Δ`.
///
/// Starts from the bound `⌊span / min ν_k⌋ + 1` and refines it by tracking,
/// for each multiset of jumps, the set of starting points whose every
/// intermediate landing stays in `Δ`.
pub fn nilpotency_index(atoms: &[Atom], d: &Domain) -> Result<usize> {
    check_positive(atoms)?;
    let min_jump = atoms.iter().map(|a| a.position).fold(f64::INFINITY, f64::min);
    let bound = (d.span() / min_jump).floor() as usize + 1;
    let segs: IntervalSet = d.segments().to_vec();

    let mut level: BTreeMap<Vec<u32>, IntervalSet> = BTreeMap::new();
    level.insert(vec![0; atoms.len()], segs.clone());
    for depth in 1..=bound {
        let mut next: BTreeMap<Vec<u32>, IntervalSet> = BTreeMap::new();
        for (counts, feasible) in &level {
            for k in 0..atoms.len() {
                let mut c = counts.clone();
                c[k] += 1;
                next.entry(c).or_default().extend_from_slice(feasible);
            }
        }
        let mut alive: BTreeMap<Vec<u32>, IntervalSet> = BTreeMap::new();
        for (counts, parts) in next {
            let s = shift_of(atoms, &counts);
            let shifted: IntervalSet = segs.iter().map(|&(a, b)| (a - s, b - s)).collect();
            let feasible = intersect(&union(parts), &shifted);
            if !feasible.is_empty() {
                alive.insert(counts, feasible);
            }
        }
        if alive.is_empty() {
            return Ok(depth);
        }
        level = alive;
    }
    Ok(bound)
}

/// Jump operator `Tf(x) = Σ σ_k f(x + ν_k)` for positive atoms, killed outside `Δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactAtomOperator {
    atoms: Vec<Atom>,
    domain: Domain,
    omega: f64,
    nilpotency_index: usize,
}

impl ExactAtomOperator {
    pub fn new(m: &LevyMeasure, d: &Domain) -> Result<Self> {
        if !m.is_pure_atoms() {
            return Err(Error::NotApplicable("the exact engine needs a purely atomic measure".into()));
        }
        let atoms = m.atom_list().to_vec();
        let nilpotency_index = nilpotency_index(&atoms, d)?;
        Ok(Self { atoms, domain: d.clone(), omega: m.total_mass(), nilpotency_index })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn nilpotency_index(&self) -> usize {
        self.nilpotency_index
    }

    /// `[(T^k f)(x) for k in 0..m]`; every higher power vanishes.
    pub fn power_series<F: Fn(f64) -> f64>(&self, f: F, x: f64) -> Result<Vec<f64>> {
        if !self.domain.contains(x) {
            return Err(Error::Domain(format!("point {x} lies outside the domain")));
        }
        let m = self.nilpotency_index;
        let mut sums = Vec::with_capacity(m);
        sums.push(f(x));
        // weight of all in-domain paths reaching each multiset of jumps
        let mut level: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        level.insert(vec![0; self.atoms.len()], 1.0);
        for _ in 1..m {
            let mut next: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
            for (counts, &w) in &level {
                for (k, a) in self.atoms.iter().enumerate() {
                    let mut c = counts.clone();
                    c[k] += 1;
                    let pos = x + shift_of(&self.atoms, &c);
                    if self.domain.contains(pos) {
                        *next.entry(c).or_insert(0.0) += w * a.weight;
                    }
                }
            }
            let s = next.iter().map(|(c, &w)| w * f(x + shift_of(&self.atoms, c))).sum();
            sums.push(s);
            level = next;
        }
        Ok(sums)
    }

    /// `(T^k f)(x)`.
    pub fn apply_power<F: Fn(f64) -> f64>(&self, k: usize, f: F, x: f64) -> Result<f64> {
        let series = self.power_series(f, x)?;
        Ok(series.get(k).copied().unwrap_or(0.0))
    }

    /// `(T₁ f)(x)` with `T₁ = T/Ω + (T/Ω)² + … + (T/Ω)^{m-1}`.
    pub fn neumann_t1<F: Fn(f64) -> f64>(&self, f: F, x: f64) -> Result<f64> {
        let series = self.power_series(f, x)?;
        Ok(series.iter().enumerate().skip(1).map(|(k, v)| v / self.omega.powi(k as i32)).sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(pos: f64, w: f64) -> LevyMeasure {
        LevyMeasure::atoms(vec![Atom::new(pos, w)]).unwrap()
    }

    #[test]
    fn nilpotency_examples() {
        let d = Domain::interval(0.0, 1.0).unwrap();
        assert_eq!(nilpotency_index(&[Atom::new(0.3, 1.0)], &d).unwrap(), 4);
        assert_eq!(nilpotency_index(&[Atom::new(0.6, 1.0)], &d).unwrap(), 2);
        assert_eq!(nilpotency_index(&[Atom::new(1.5, 1.0)], &d).unwrap(), 1);
        assert_eq!(
            nilpotency_index(&[Atom::new(0.3, 1.0), Atom::new(-0.1, 1.0)], &d),
            Err(Error::NilpotencyNotGuaranteed)
        );
    }

    #[test]
    fn gaps_shorten_the_chain() {
        // span 3 allows 6 jumps of 0.5, but the gap (1, 2.6) cannot be crossed by 0.5
        let d = Domain::new(vec![(0.0, 1.0), (2.6, 3.0)]).unwrap();
        assert_eq!(nilpotency_index(&[Atom::new(0.5, 1.0)], &d).unwrap(), 3);
        // a long atom can hop the gap
        let two = [Atom::new(0.5, 1.0), Atom::new(1.8, 1.0)];
        assert_eq!(nilpotency_index(&two, &d).unwrap(), 4);
    }

    #[test]
    fn reachable_set_enumeration_matches_index() {
        // brute force over jump sequences from a fine set of starts
        let d = Domain::new(vec![(0.0, 1.0), (1.4, 2.2)]).unwrap();
        let atoms = [Atom::new(0.35, 1.0), Atom::new(0.5, 1.0)];
        fn longest(x: f64, atoms: &[Atom], d: &Domain) -> usize {
            atoms
                .iter()
                .filter(|a| d.contains(x + a.position))
                .map(|a| 1 + longest(x + a.position, atoms, d))
                .max()
                .unwrap_or(0)
        }
        let mut best = 0;
        for i in 0..=2200 {
            let x = i as f64 * 0.001;
            if d.contains(x) {
                best = best.max(longest(x, &atoms, &d));
            }
        }
        assert_eq!(nilpotency_index(&atoms, &d).unwrap(), best + 1);
    }

    #[test]
    fn t1_examples() {
        let d = Domain::interval(0.0, 1.0).unwrap();
        let e = ExactAtomOperator::new(&single(0.3, 1.0), &d).unwrap();
        assert_eq!(e.neumann_t1(|_| 1.0, 0.0).unwrap(), 3.0);
        let exit = ExactAtomOperator::new(&single(1.5, 1.0), &d).unwrap();
        assert_eq!(exit.nilpotency_index(), 1);
        assert_eq!(exit.neumann_t1(|x| x * x + 1.0, 0.2).unwrap(), 0.0);
        let f = |x: f64| (3.0 * x).sin() + 2.0;
        let g = |x: f64| x * x;
        let lhs = e.neumann_t1(|x| 2.0 * f(x) - 0.5 * g(x), 0.05).unwrap();
        let rhs = 2.0 * e.neumann_t1(f, 0.05).unwrap() - 0.5 * e.neumann_t1(g, 0.05).unwrap();
        assert!((lhs - rhs).abs() < 1e-14);
        assert!(e.neumann_t1(|_| 1.0, 1.5).is_err());
    }

    #[test]
    fn powers_vanish_at_the_index_and_not_before() {
        let d = Domain::interval(0.0, 1.0).unwrap();
        let e = ExactAtomOperator::new(&single(0.3, 1.0), &d).unwrap();
        let m = e.nilpotency_index();
        assert_eq!(e.apply_power(m, |_| 1.0, 0.0).unwrap(), 0.0);
        assert!(e.apply_power(m - 1, |_| 1.0, 0.0).unwrap() > 0.0);
    }

    #[test]
    fn boundedness_of_t() {
        let d = Domain::interval(0.0, 2.0).unwrap();
        let m = LevyMeasure::atoms(vec![Atom::new(0.3, 0.7), Atom::new(0.45, 1.1)]).unwrap();
        let e = ExactAtomOperator::new(&m, &d).unwrap();
        let f = |x: f64| (5.0 * x).cos();
        for i in 0..=40 {
            let x = i as f64 * 0.05;
            let tf = e.apply_power(1, f, x).unwrap();
            assert!(tf.abs() <= 1.8 + 1e-12);
            assert!(e.apply_power(1, |_| 1.0, x).unwrap() >= 0.0);
        }
    }
}
