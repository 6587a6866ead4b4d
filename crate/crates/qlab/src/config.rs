//! Scenario files.

use std::fs;
use std::path::{Path, PathBuf};

use qlab_core::discretize::Domain;
use qlab_core::measure::{Density, DensityTable};
use qlab_core::{Atom, LevyMeasure};
use serde::{Deserialize, Serialize};

use crate::error::RunError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub measure: Option<MeasureSpec>,
    #[serde(default)]
    pub domain: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub mc: Option<McSpec>,
    /// Defaults to the left end of the domain.
    #[serde(default)]
    pub start: Option<f64>,
    #[serde(default)]
    pub run: Option<Vec<Pipeline>>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureSpec {
    BilateralExp {
        p: f64,
    },
    Atoms {
        atoms: Vec<AtomSpec>,
    },
    DensityTable {
        #[serde(default)]
        x: Option<Vec<f64>>,
        #[serde(default)]
        f: Option<Vec<f64>>,
        /// CSV with columns `x,f`, relative to the scenario file.
        #[serde(default)]
        file: Option<PathBuf>,
    },
    Mixture {
        continuous: Box<MeasureSpec>,
        atoms: Box<MeasureSpec>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    pub x: f64,
    pub w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { n: 400 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSpec {
    pub paths: u64,
    pub horizon: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub time_grid: TimeGridSpec,
    /// Time of the zero-jump check; defaults to `min(1, horizon)`.
    #[serde(default)]
    pub zero_jump_t: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(untagged)]
pub enum TimeGridSpec {
    #[default]
    #[serde(with = "auto_keyword")]
    Auto,
    Points(Vec<f64>),
}

mod auto_keyword {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("auto")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        match String::deserialize(d)?.as_str() {
            "auto" => Ok(()),
            other => Err(D::Error::custom(format!("unknown time grid keyword {other:?}"))),
        }
    }
}

/// Intervals of the automatic survival time grid.
pub const AUTO_TIME_STEPS: usize = 300;

impl TimeGridSpec {
    pub fn resolve(&self, horizon: f64) -> Vec<f64> {
        match self {
            Self::Auto => qlab_core::simulate::uniform_time_grid(horizon, AUTO_TIME_STEPS),
            Self::Points(p) => p.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pipeline {
    Spectral,
    Simulate,
    ExitTime,
    Table61,
    Validate,
}

impl Pipeline {
    pub fn name(self) -> &'static str {
        match self {
            Self::Spectral => "spectral",
            Self::Simulate => "simulate",
            Self::ExitTime => "exit-time",
            Self::Table61 => "table61",
            Self::Validate => "validate",
        }
    }

    fn needs_measure(self) -> bool {
        self != Self::Table61
    }

    fn needs_mc(self) -> bool {
        matches!(self, Self::Simulate | Self::ExitTime | Self::Validate)
    }
}

pub const MIN_GRID_N: usize = 10;
pub const MIN_PATHS: u64 = 1000;

/// A checked scenario: the measure and domain are built, files resolved.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub measure: Option<LevyMeasure>,
    pub domain: Option<Domain>,
    pub start: Option<f64>,
    pub pipelines: Vec<Pipeline>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, RunError> {
        serde_json::from_str(text).map_err(|e| RunError::Config(format!("scenario file: {e}")))
    }

    pub fn load(path: &Path) -> Result<(Self, PathBuf), RunError> {
        let text =
            fs::read_to_string(path).map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((Self::from_json(&text)?, base))
    }

    /// Validates the scenario for the pipelines `cfg.run ∪ extra`; `base`
    /// resolves relative file references.
    pub fn check(self, extra: Option<Pipeline>, base: &Path) -> Result<Scenario, RunError> {
        let mut pipelines = match (&self.run, extra) {
            (Some(r), _) if r.is_empty() => return Err(RunError::Config("`run` lists no pipelines".into())),
            (Some(r), e) => r.iter().copied().chain(e).collect::<Vec<_>>(),
            (None, Some(e)) => vec![e],
            (None, None) => return Err(RunError::Config("no pipeline requested".into())),
        };
        pipelines.sort();
        pipelines.dedup();

        if self.grid.n < MIN_GRID_N {
            return Err(RunError::Config(format!("grid.n must be at least {MIN_GRID_N}, got {}", self.grid.n)));
        }
        if let Some(mc) = &self.mc {
            if mc.paths < MIN_PATHS {
                return Err(RunError::Config(format!("mc.paths must be at least {MIN_PATHS}, got {}", mc.paths)));
            }
            if !(mc.horizon > 0.0 && mc.horizon.is_finite()) {
                return Err(RunError::Config(format!("mc.horizon must be positive, got {}", mc.horizon)));
            }
        }
        if pipelines.iter().any(|p| p.needs_mc()) && self.mc.is_none() {
            return Err(RunError::Config("the requested pipelines need an `mc` section".into()));
        }

        let needs_measure = pipelines.iter().any(|p| p.needs_measure());
        let measure = match &self.measure {
            Some(spec) => Some(build_measure(spec, base)?),
            None if needs_measure => return Err(RunError::Config("missing `measure`".into())),
            None => None,
        };
        let domain = match &self.domain {
            Some(segs) => Some(
                Domain::new(segs.iter().map(|s| (s[0], s[1])).collect())
                    .map_err(|e| RunError::Config(e.to_string()))?,
            ),
            None if needs_measure => return Err(RunError::Config("missing `domain`".into())),
            None => None,
        };
        let start = match (&domain, self.start) {
            (Some(d), Some(s)) if !d.contains(s) => {
                return Err(RunError::Config(format!("start {s} lies outside the domain")))
            }
            (Some(d), s) => Some(s.unwrap_or(d.lower())),
            (None, _) => None,
        };
        Ok(Scenario { config: self, measure, domain, start, pipelines })
    }
}

fn build_measure(spec: &MeasureSpec, base: &Path) -> Result<LevyMeasure, RunError> {
    let invalid = |e: qlab_core::Error| RunError::Config(e.to_string());
    match spec {
        MeasureSpec::BilateralExp { p } => LevyMeasure::bilateral_exponential(*p).map_err(invalid),
        MeasureSpec::Atoms { atoms } => LevyMeasure::atoms(atom_list(atoms)).map_err(invalid),
        MeasureSpec::DensityTable { .. } => {
            let (x, f) = table_columns(spec, base)?;
            LevyMeasure::density_table(x, f).map_err(invalid)
        }
        MeasureSpec::Mixture { continuous, atoms } => {
            let density = match continuous.as_ref() {
                MeasureSpec::BilateralExp { p } => Density::BilateralExponential { p: *p },
                t @ MeasureSpec::DensityTable { .. } => {
                    let (x, f) = table_columns(t, base)?;
                    Density::Table(DensityTable::new(x, f).map_err(invalid)?)
                }
                _ => return Err(RunError::Config("mixture.continuous must be a density".into())),
            };
            let MeasureSpec::Atoms { atoms } = atoms.as_ref() else {
                return Err(RunError::Config("mixture.atoms must be an atom list".into()));
            };
            LevyMeasure::mixture(density, atom_list(atoms)).map_err(invalid)
        }
    }
}

fn atom_list(atoms: &[AtomSpec]) -> Vec<Atom> {
    atoms.iter().map(|a| Atom::new(a.x, a.w)).collect()
}

fn table_columns(spec: &MeasureSpec, base: &Path) -> Result<(Vec<f64>, Vec<f64>), RunError> {
    let MeasureSpec::DensityTable { x, f, file } = spec else { unreachable!("called on density tables only") };
    match (x, f, file) {
        (Some(x), Some(f), None) => Ok((x.clone(), f.clone())),
        (None, None, Some(file)) => read_table(&base.join(file)),
        _ => Err(RunError::Config("density_table needs either `x` and `f` or `file`".into())),
    }
}

#[derive(Deserialize)]
struct TableRow {
    x: f64,
    f: f64,
}

fn read_table(path: &Path) -> Result<(Vec<f64>, Vec<f64>), RunError> {
    let bad = |e: csv::Error| RunError::Config(format!("{}: {e}", path.display()));
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(bad)?;
    let mut xs = Vec::new();
    let mut fs = Vec::new();
    for row in reader.deserialize::<TableRow>() {
        let row = row.map_err(bad)?;
        xs.push(row.x);
        fs.push(row.f);
    }
    Ok((xs, fs))
}
