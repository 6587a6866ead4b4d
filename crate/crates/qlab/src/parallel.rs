//! Rayon drivers. Each produces exactly the serial result: rows and paths
//! are computed independently and gathered in index order.

use qlab_core::bilateral::{table_report, table_row, TableReport, PUBLISHED_TABLE};
use qlab_core::discretize::{assemble_t_row, from_rows, Domain, Grid, OperatorMatrix};
use qlab_core::quasipotential::{quasipotential_with, Quasipotential};
use qlab_core::simulate::{path_rng, simulate_exit, ExitRecord};
use qlab_core::{LevyMeasure, Result};
use rayon::prelude::*;

/// Nyström matrix of `T` with rows filled in parallel.
pub fn assemble_t_par(m: &LevyMeasure, g: &Grid) -> OperatorMatrix {
    let n = g.len();
    let mut rows = vec![0.0; n * n];
    rows.par_chunks_mut(n).enumerate().for_each(|(i, row)| assemble_t_row(m, g, i, row));
    from_rows(rows, g, m.total_mass())
}

pub fn quasipotential_par(m: &LevyMeasure, d: &Domain, n: usize) -> Result<Quasipotential> {
    quasipotential_with(m, d, n, |g| assemble_t_par(m, g))
}

/// Paths `0..paths`, one stream per index.
pub fn simulate_par(
    m: &LevyMeasure,
    d: &Domain,
    start: f64,
    horizon: f64,
    seed: u64,
    paths: u64,
) -> Result<Vec<ExitRecord>> {
    (0..paths).into_par_iter().map(|i| simulate_exit(m, d, start, horizon, &mut path_rng(seed, i))).collect()
}

pub fn reproduce_table_par(n: usize) -> Result<TableReport> {
    let rows = PUBLISHED_TABLE.par_iter().map(|&(c, published)| table_row(c, published, n)).collect::<Result<Vec<_>>>()?;
    Ok(table_report(rows))
}
