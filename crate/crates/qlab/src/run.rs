//! Pipeline orchestration for one scenario.

use std::fs;
use std::path::{Path, PathBuf};

use qlab_core::discretize::{t_norm, Domain};
use qlab_core::quasipotential::{Condition, Quasipotential};
use qlab_core::simulate::{
    fit_decay_rate, mean_exit_time, survival_curve, zero_jump_check, FitWindow, SurvivalEstimate,
};
use qlab_core::spectral::{decay_rate, eigen_clustering, prefactor_q, principal_eigen};
use qlab_core::{Error, LevyMeasure};
use serde::Serialize;

use crate::config::{McSpec, Pipeline, Scenario};
use crate::error::RunError;
use crate::parallel::{quasipotential_par, reproduce_table_par, simulate_par};
use crate::report::{write_json, write_survival_csv, write_table_csv, TableJson};

pub const SEED_ENV: &str = "QLAB_SEED";
pub const CLUSTER_EPSILON: f64 = 0.05;
pub const RADON_DELTAS: [f64; 4] = [0.2, 0.1, 0.05, 0.025];
pub const TABLE_N: usize = qlab_core::bilateral::TABLE_GRID_N;
pub const RATE_RTOL: f64 = 0.05;
pub const Q_RTOL: f64 = 0.2;
pub const MEAN_EXIT_RTOL: f64 = 0.02;

#[derive(Debug, Clone, Default, Serialize)]
pub struct Summary {
    pub pipelines: Vec<&'static str>,
    pub omega: Option<f64>,
    pub t_norm: Option<f64>,
    pub condition: Option<&'static str>,
    pub start: Option<f64>,
    pub grid_n: Option<usize>,
    pub nilpotency_index: Option<usize>,
    pub mu1: Option<f64>,
    pub lambda1: Option<f64>,
    pub decay_rate: Option<f64>,
    pub q: Option<f64>,
    pub spectral_gap: Option<f64>,
    pub multiplicity: Option<usize>,
    pub index_one: Option<bool>,
    pub spectral_note: Option<String>,
    pub mean_exit_time_spectral: Option<f64>,
    pub mean_exit_time_mc: Option<f64>,
    pub mean_exit_time_mc_stderr: Option<f64>,
    pub n_paths: Option<u64>,
    pub horizon: Option<f64>,
    pub seed: Option<u64>,
    pub censored: Option<usize>,
    pub fitted_rate: Option<f64>,
    pub fitted_rate_stderr: Option<f64>,
    pub fit_window: Option<[f64; 2]>,
    pub plateau: Option<f64>,
    pub fit_note: Option<String>,
    pub zero_jump_check: Option<ZeroJumpJson>,
    pub clustering: Option<ClusteringJson>,
    pub radon_modulus: Option<Vec<RadonJson>>,
    pub validation: Option<ValidationJson>,
    pub table61: Option<TableJson>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ZeroJumpJson {
    pub t: f64,
    pub empirical: f64,
    pub exact: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClusteringJson {
    pub epsilon: f64,
    pub counts: Vec<ClusterCount>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClusterCount {
    pub n: usize,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RadonJson {
    pub delta: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationJson {
    pub rate_rel_diff: Option<f64>,
    pub rate_ok: bool,
    pub q_rel_diff: Option<f64>,
    pub q_ok: bool,
    pub mean_exit_rel_diff: Option<f64>,
    pub mean_exit_ok: bool,
}

/// Everything a run produced, kept for callers that inspect results in memory.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub summary: Summary,
    pub survival: Option<SurvivalEstimate>,
    pub out_dir: PathBuf,
}

/// `QLAB_SEED` if set, else the configured seed.
pub fn effective_seed(mc: &McSpec) -> Result<u64, RunError> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s.trim().parse().map_err(|_| RunError::Config(format!("{SEED_ENV}={s:?} is not an unsigned integer"))),
        Err(_) => Ok(mc.seed),
    }
}

struct Ctx<'a> {
    measure: &'a LevyMeasure,
    domain: &'a Domain,
    start: f64,
    n: usize,
}

fn condition_name(c: Condition) -> &'static str {
    match c {
        Condition::Neumann => "neumann",
        Condition::Nilpotent => "nilpotent",
    }
}

fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Runs the pipelines of a checked scenario and writes the report files.
pub fn run_scenario(sc: &Scenario, out_dir: &Path, seed: Option<u64>) -> Result<RunOutput, RunError> {
    fs::create_dir_all(out_dir)?;
    let has = |p: Pipeline| sc.pipelines.contains(&p);
    let validate = has(Pipeline::Validate);
    let mut s = Summary { pipelines: sc.pipelines.iter().map(|p| p.name()).collect(), ..Summary::default() };
    let mut survival = None;

    if let (Some(measure), Some(domain), Some(start)) = (&sc.measure, &sc.domain, sc.start) {
        let ctx = Ctx { measure, domain, start, n: sc.config.grid.n };
        s.omega = Some(measure.total_mass());
        s.t_norm = Some(t_norm(measure, domain));
        s.start = Some(start);

        let wants_q = validate || has(Pipeline::Spectral) || has(Pipeline::ExitTime);
        let q = if wants_q { Some(quasipotential_par(measure, domain, ctx.n)?) } else { None };
        if let Some(q) = &q {
            s.condition = Some(condition_name(q.condition));
            s.grid_n = q.grid().map(|g| g.len());
            s.nilpotency_index = q.nilpotency_index();
            s.mean_exit_time_spectral = Some(q.mean_exit_time(start)?);
        }
        if validate || has(Pipeline::Spectral) {
            spectral(&ctx, q.as_ref().expect("built above"), &mut s)?;
        }
        if validate || has(Pipeline::Simulate) || has(Pipeline::ExitTime) {
            let mc = sc.config.mc.as_ref().expect("checked with the config");
            let seed = match seed {
                Some(v) => v,
                None => effective_seed(mc)?,
            };
            let est = monte_carlo(&ctx, mc, seed, validate || has(Pipeline::Simulate), &mut s)?;
            if let Some(est) = &est {
                write_survival_csv(&out_dir.join("survival.csv"), est)?;
            }
            survival = est;
        }
        if validate {
            s.validation = Some(validation(&s)?);
        }
    }

    if has(Pipeline::Table61) {
        let table = TableJson::new(&reproduce_table_par(TABLE_N)?, TABLE_N);
        write_table_csv(&out_dir.join("table61.csv"), &table)?;
        write_json(&out_dir.join("table61.json"), &table)?;
        s.table61 = Some(table);
    }

    write_json(&out_dir.join("summary.json"), &s)?;
    Ok(RunOutput { summary: s, survival, out_dir: out_dir.to_path_buf() })
}

fn spectral(ctx: &Ctx<'_>, q: &Quasipotential, s: &mut Summary) -> Result<(), RunError> {
    match principal_eigen(q) {
        Ok(sum) => {
            s.mu1 = Some(sum.mu1);
            s.lambda1 = Some(sum.lambda1);
            s.decay_rate = Some(decay_rate(&sum));
            s.q = Some(prefactor_q(&sum, ctx.start)?);
            s.spectral_gap = sum.gap;
            s.multiplicity = Some(sum.multiplicity);
            s.index_one = Some(sum.index_one());
        }
        Err(e @ Error::QuasiNilpotent { .. }) => s.spectral_note = Some(e.to_string()),
        Err(e) => return Err(e.into()),
    }

    let mut counts = vec![ClusterCount { n: s.grid_n.unwrap_or(0), count: eigen_clustering(q, CLUSTER_EPSILON)? }];
    if q.grid().is_some() && ctx.n / 2 >= crate::config::MIN_GRID_N {
        let coarse = quasipotential_par(ctx.measure, ctx.domain, ctx.n / 2)?;
        let n = coarse.grid().map_or(0, |g| g.len());
        counts.push(ClusterCount { n, count: eigen_clustering(&coarse, CLUSTER_EPSILON)? });
    }
    s.clustering = Some(ClusteringJson { epsilon: CLUSTER_EPSILON, counts });

    if q.grid().is_some() {
        s.radon_modulus = Some(
            RADON_DELTAS
                .iter()
                .map(|&delta| Ok(RadonJson { delta, value: q.radon_modulus(delta)? }))
                .collect::<Result<_, Error>>()?,
        );
    }
    Ok(())
}

fn monte_carlo(
    ctx: &Ctx<'_>,
    mc: &McSpec,
    seed: u64,
    curve: bool,
    s: &mut Summary,
) -> Result<Option<SurvivalEstimate>, RunError> {
    let records = simulate_par(ctx.measure, ctx.domain, ctx.start, mc.horizon, seed, mc.paths)?;
    s.n_paths = Some(mc.paths);
    s.horizon = Some(mc.horizon);
    s.seed = Some(seed);
    let moments = mean_exit_time(&records);
    match moments {
        Ok(m) => {
            s.mean_exit_time_mc = Some(m.mean);
            s.mean_exit_time_mc_stderr = Some(m.stderr);
            s.censored = Some(m.censored);
        }
        Err(e) => s.fit_note = Some(e.to_string()),
    }
    if !curve {
        return Ok(None);
    }
    let zt = mc.zero_jump_t.unwrap_or(mc.horizon.min(1.0));
    let z = zero_jump_check(&records, mc.horizon, zt, ctx.measure.total_mass())?;
    s.zero_jump_check = Some(ZeroJumpJson { t: z.t, empirical: z.empirical, exact: z.exact, sigma: z.sigma });

    let est = survival_curve(&records, mc.horizon, &mc.time_grid.resolve(mc.horizon))?;
    match fit_decay_rate(&est, FitWindow::Auto) {
        Ok(fit) => {
            s.fitted_rate = Some(fit.rate);
            s.fitted_rate_stderr = Some(fit.stderr);
            s.fit_window = Some([fit.window.0, fit.window.1]);
            s.plateau = Some(fit.intercept.exp());
        }
        Err(e) => s.fit_note = Some(e.to_string()),
    }
    Ok(Some(est))
}

fn validation(s: &Summary) -> Result<ValidationJson, RunError> {
    let pair = |a: Option<f64>, b: Option<f64>| a.zip(b).map(|(a, b)| rel_diff(a, b));
    let (Some(_), Some(_)) = (s.decay_rate, s.fitted_rate) else {
        let why = s.spectral_note.clone().or(s.fit_note.clone()).unwrap_or_default();
        return Err(RunError::Numerical(format!("validation needs both decay rates: {why}")));
    };
    let rate = pair(s.fitted_rate, s.decay_rate);
    let q = pair(s.q, s.plateau);
    let mean = pair(s.mean_exit_time_mc, s.mean_exit_time_spectral);
    let ok = |d: Option<f64>, tol: f64| d.is_some_and(|d| d < tol);
    Ok(ValidationJson {
        rate_rel_diff: rate,
        rate_ok: ok(rate, RATE_RTOL),
        q_rel_diff: q,
        q_ok: ok(q, Q_RTOL),
        mean_exit_rel_diff: mean,
        mean_exit_ok: ok(mean, MEAN_EXIT_RTOL),
    })
}
