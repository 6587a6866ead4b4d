//! Output files. Every float is rounded to 12 significant digits so that
//! reports compare byte for byte across runs and thread counts.

use std::fs;
use std::path::Path;

use qlab_core::bilateral::TableReport;
use qlab_core::simulate::SurvivalEstimate;
use serde::Serialize;
use serde_json::{Number, Value};

use crate::error::RunError;

pub const SIGNIFICANT_DIGITS: usize = 12;

pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().expect("formatted float parses")
}

pub fn fmt_sig(x: f64) -> String {
    if x.is_finite() {
        round_sig(x).to_string()
    } else {
        String::new()
    }
}

/// Rounds every float in the tree; non-finite floats become `null`.
fn round_tree(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            n.as_f64().and_then(|x| Number::from_f64(round_sig(x))).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_tree).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_tree(v))).collect()),
        other => other,
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let tree = round_tree(serde_json::to_value(value).expect("report types serialize"));
    let mut text = serde_json::to_string_pretty(&tree).expect("json tree serializes");
    text.push('\n');
    text
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), RunError> {
    fs::write(path, to_json(value))?;
    Ok(())
}

pub fn write_survival_csv(path: &Path, s: &SurvivalEstimate) -> Result<(), RunError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["t", "survival", "stderr"]).map_err(csv_err)?;
    for ((t, v), e) in s.time_grid.iter().zip(&s.survival).zip(&s.stderr) {
        w.write_record([fmt_sig(*t), fmt_sig(*v), fmt_sig(*e)]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct TableRowJson {
    pub p_omega: f64,
    pub published: f64,
    pub equation_root: f64,
    pub degenerate_candidate: Option<f64>,
    pub operator: f64,
    pub root_matches_published: bool,
    pub operator_matches_root: bool,
    pub operator_matches_published: bool,
    pub operator_matches_degenerate: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TableJson {
    pub grid_n: usize,
    pub operator_monotone: bool,
    pub published_monotone: bool,
    pub rows: Vec<TableRowJson>,
}

impl TableJson {
    pub fn new(report: &TableReport, grid_n: usize) -> Self {
        Self {
            grid_n,
            operator_monotone: report.operator_monotone,
            published_monotone: report.published_monotone,
            rows: report
                .rows
                .iter()
                .map(|r| TableRowJson {
                    p_omega: r.product,
                    published: r.published,
                    equation_root: r.equation_root,
                    degenerate_candidate: r.degenerate,
                    operator: r.operator,
                    root_matches_published: r.root_matches_published,
                    operator_matches_root: r.operator_matches_root,
                    operator_matches_published: r.operator_matches_published,
                    operator_matches_degenerate: r.operator_matches_degenerate,
                })
                .collect(),
        }
    }
}

pub fn write_table_csv(path: &Path, table: &TableJson) -> Result<(), RunError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record([
        "p_omega",
        "published",
        "equation_root",
        "degenerate_candidate",
        "operator",
        "root_matches_published",
        "operator_matches_root",
        "operator_matches_published",
        "operator_matches_degenerate",
    ])
    .map_err(csv_err)?;
    let opt = |b: Option<bool>| b.map_or(String::new(), |b| b.to_string());
    for r in &table.rows {
        w.write_record([
            fmt_sig(r.p_omega),
            fmt_sig(r.published),
            fmt_sig(r.equation_root),
            r.degenerate_candidate.map_or(String::new(), fmt_sig),
            fmt_sig(r.operator),
            r.root_matches_published.to_string(),
            r.operator_matches_root.to_string(),
            r.operator_matches_published.to_string(),
            opt(r.operator_matches_degenerate),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> RunError {
    RunError::Io(std::io::Error::other(e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding() {
        assert_eq!(round_sig(0.578983599655767_1), 0.578983599656);
        assert_eq!(round_sig(-1234567.891234567), -1234567.89123);
        assert_eq!(fmt_sig(2.0), "2");
        assert_eq!(to_json(&[f64::NAN, 1.0 / 3.0]), "[\n  null,\n  0.333333333333\n]\n");
    }
}
