//! Monte Carlo oracle: exit times of the compound Poisson path from `Δ`.
//!
//! Between jumps the path is constant, so exit can only happen at a jump
//! epoch. Each path owns a ChaCha8 stream selected by its index, so results
//! do not depend on how paths are split across workers.

use alloc::format;
use alloc::vec::Vec;
use core::ops::Range;
#[allow(unused_imports)] // shadowed by inherent methods whenever std is linked
use num_traits::Float;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::discretize::Domain;
use crate::error::{Error, Result};
use crate::measure::LevyMeasure;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExitRecord {
    /// `None` when the path was still inside `Δ` at the horizon.
    pub exit_time: Option<f64>,
    pub n_jumps: u32,
    pub exit_position: Option<f64>,
    /// Epoch of the first jump, `None` if it falls after the horizon.
    pub first_jump: Option<f64>,
}

impl ExitRecord {
    pub fn censored(&self) -> bool {
        self.exit_time.is_none()
    }
}

/// Stream `index` of the generator keyed by `seed`.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform draw in the open interval `(0, 1)`.
fn open01<R: RngCore>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

pub fn simulate_exit<R: RngCore>(
    m: &LevyMeasure,
    d: &Domain,
    start: f64,
    horizon: f64,
    rng: &mut R,
) -> Result<ExitRecord> {
    if !d.contains(start) {
        return Err(Error::Domain(format!("start {start} lies outside the domain")));
    }
    if !(horizon > 0.0) {
        return Err(Error::Config(format!("horizon must be positive, got {horizon}")));
    }
    let omega = m.total_mass();
    let (mut t, mut x, mut n) = (0.0, start, 0u32);
    let mut first_jump = None;
    loop {
        t += -open01(rng).ln() / omega;
        if t > horizon {
            return Ok(ExitRecord { exit_time: None, n_jumps: n, exit_position: None, first_jump });
        }
        first_jump.get_or_insert(t);
        x += m.sample_jump_unchecked(open01(rng));
        n += 1;
        if !d.contains(x) {
            return Ok(ExitRecord { exit_time: Some(t), n_jumps: n, exit_position: Some(x), first_jump });
        }
    }
}

/// Paths `range` of the experiment keyed by `seed`, in index order.
pub fn simulate_paths(
    m: &LevyMeasure,
    d: &Domain,
    start: f64,
    horizon: f64,
    seed: u64,
    range: Range<u64>,
) -> Result<Vec<ExitRecord>> {
    range.map(|i| simulate_exit(m, d, start, horizon, &mut path_rng(seed, i))).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalEstimate {
    pub time_grid: Vec<f64>,
    pub survival: Vec<f64>,
    pub stderr: Vec<f64>,
    pub n_paths: usize,
}

/// Empirical `P(T_Δ > t)` with binomial standard errors.
pub fn survival_curve(records: &[ExitRecord], horizon: f64, time_grid: &[f64]) -> Result<SurvivalEstimate> {
    if records.is_empty() {
        return Err(Error::Config("no records".into()));
    }
    if time_grid.windows(2).any(|w| !(w[1] >= w[0])) || time_grid.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::Config("time grid must be sorted and nonnegative".into()));
    }
    if let Some(&t) = time_grid.last() {
        if t > horizon {
            return Err(Error::Config(format!("time {t} exceeds the simulation horizon {horizon}")));
        }
    }
    let mut exits: Vec<f64> = records.iter().filter_map(|r| r.exit_time).collect();
    exits.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = records.len() as f64;
    let mut survival = Vec::with_capacity(time_grid.len());
    let mut stderr = Vec::with_capacity(time_grid.len());
    for &t in time_grid {
        let gone = exits.partition_point(|&e| e <= t);
        let s = (records.len() - gone) as f64 / n;
        survival.push(s);
        stderr.push((s * (1.0 - s) / n).sqrt());
    }
    Ok(SurvivalEstimate { time_grid: time_grid.to_vec(), survival, stderr, n_paths: records.len() })
}

/// `points + 1` equally spaced times on `[0, horizon]`.
pub fn uniform_time_grid(horizon: f64, points: usize) -> Vec<f64> {
    (0..=points).map(|k| horizon * k as f64 / points as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitWindow {
    /// Times where the survival lies in `[AUTO_LOW, AUTO_HIGH]`.
    Auto,
    Range(f64, f64),
}

pub const AUTO_LOW: f64 = 1e-3;
pub const AUTO_HIGH: f64 = 1e-1;
pub const MIN_FIT_POINTS: usize = 5;
pub const MIN_FIT_COUNT: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub rate: f64,
    pub stderr: f64,
    /// Log-survival intercept; `exp(intercept)` estimates the prefactor `q`.
    pub intercept: f64,
    pub window: (f64, f64),
    pub points: usize,
}

/// Weighted least squares of `log S(t)` on `t` with weights `N S/(1 − S)`.
pub fn fit_decay_rate(s: &SurvivalEstimate, window: FitWindow) -> Result<RateFit> {
    let n = s.n_paths as f64;
    let in_window = |t: f64, v: f64| match window {
        FitWindow::Auto => (AUTO_LOW..=AUTO_HIGH).contains(&v),
        FitWindow::Range(lo, hi) => (lo..=hi).contains(&t),
    };
    let pts: Vec<(f64, f64, f64)> = s
        .time_grid
        .iter()
        .zip(&s.survival)
        .filter(|&(&t, &v)| in_window(t, v) && v * n >= MIN_FIT_COUNT && v < 1.0)
        .map(|(&t, &v)| (t, v.ln(), n * v / (1.0 - v)))
        .collect();
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::WindowUnderpopulated(format!(
            "{} usable points (need {MIN_FIT_POINTS} with at least {MIN_FIT_COUNT} surviving paths)",
            pts.len()
        )));
    }
    let sw: f64 = pts.iter().map(|p| p.2).sum();
    let tm = pts.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
    let ym = pts.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
    let sxx: f64 = pts.iter().map(|p| p.2 * (p.0 - tm) * (p.0 - tm)).sum();
    let sxy: f64 = pts.iter().map(|p| p.2 * (p.0 - tm) * (p.1 - ym)).sum();
    if !(sxx > 0.0) {
        return Err(Error::WindowUnderpopulated("window spans a single time".into()));
    }
    let slope = sxy / sxx;
    Ok(RateFit {
        rate: -slope,
        stderr: (1.0 / sxx).sqrt(),
        intercept: ym - slope * tm,
        window: (pts[0].0, pts[pts.len() - 1].0),
        points: pts.len(),
    })
}

/// Fraction of paths without a jump in `[0, t]`; `t` may not exceed the horizon.
pub fn zero_jump_fraction(records: &[ExitRecord], horizon: f64, t: f64) -> Result<f64> {
    if t > horizon || t < 0.0 {
        return Err(Error::Config(format!("time {t} outside [0, {horizon}]")));
    }
    if records.is_empty() {
        return Err(Error::Config("no records".into()));
    }
    let quiet = records.iter().filter(|r| r.first_jump.is_none_or(|f| f > t)).count();
    Ok(quiet as f64 / records.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroJumpCheck {
    pub t: f64,
    pub empirical: f64,
    /// `e^{−tΩ}`.
    pub exact: f64,
    /// Binomial standard error at the exact value.
    pub sigma: f64,
}

impl ZeroJumpCheck {
    pub fn z_score(&self) -> f64 {
        (self.empirical - self.exact) / self.sigma
    }
}

pub fn zero_jump_check(records: &[ExitRecord], horizon: f64, t: f64, omega: f64) -> Result<ZeroJumpCheck> {
    let empirical = zero_jump_fraction(records, horizon, t)?;
    let exact = (-t * omega).exp();
    let sigma = (exact * (1.0 - exact) / records.len() as f64).sqrt();
    Ok(ZeroJumpCheck { t, empirical, exact, sigma })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExitMoments {
    pub mean: f64,
    pub stderr: f64,
    pub uncensored: usize,
    pub censored: usize,
}

/// Sample mean of the uncensored exit times.
pub fn mean_exit_time(records: &[ExitRecord]) -> Result<ExitMoments> {
    let times: Vec<f64> = records.iter().filter_map(|r| r.exit_time).collect();
    let k = times.len();
    if k < 2 {
        return Err(Error::WindowUnderpopulated("fewer than two uncensored paths".into()));
    }
    let mean = times.iter().sum::<f64>() / k as f64;
    let var = times.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / (k - 1) as f64;
    Ok(ExitMoments { mean, stderr: (var / k as f64).sqrt(), uncensored: k, censored: records.len() - k })
}
