//! Benchmark runner: executes every row of a manifest and prints one
//! result line per instance, flagging deviations from expected values.
//! Row failures are reported and the run continues.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::Deserialize;

use crate::{resolve_relative, run_check, value_to_f64, Arith, CheckConfig, CliError, Engine};

#[derive(Debug, Deserialize)]
pub struct ManifestRow {
    pub model: String,
    #[serde(default)]
    pub constants: BTreeMap<String, String>,
    pub property: String,
    #[serde(default)]
    pub engine: Option<String>,
    #[serde(default)]
    pub arith: Option<String>,
    #[serde(default)]
    pub epsilon: Option<String>,
    /// Expected value; rows without it are informational only.
    #[serde(default)]
    pub expect: Option<String>,
    /// Relative tolerance for the expected value.
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub note: Option<String>,
}

#[derive(Debug, PartialEq, Eq, Clone, Copy)]
pub enum RowStatus {
    Ok,
    Deviation,
    Error,
}

pub struct RowResult {
    pub label: String,
    pub value: String,
    pub seconds: f64,
    pub states_total: u64,
    pub peak_states: u64,
    pub peak_transitions: u64,
    pub status: RowStatus,
    pub detail: String,
}

/// Runs all rows of a manifest file. Returns the per-row outcomes.
pub fn run_bench(manifest_path: &Path) -> Result<Vec<RowResult>, CliError> {
    let text = std::fs::read_to_string(manifest_path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", manifest_path.display())))?;
    let rows: Vec<ManifestRow> = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("bad manifest: {e}")))?;
    let mut results = Vec::new();
    for row in &rows {
        results.push(run_row(manifest_path, row));
    }
    Ok(results)
}

fn run_row(manifest_path: &Path, row: &ManifestRow) -> RowResult {
    let consts = row
        .constants
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(",");
    let label = if consts.is_empty() {
        row.model.clone()
    } else {
        format!("{}[{}]", row.model, consts)
    };
    let build = || -> Result<CheckConfig, CliError> {
        let mut cfg = CheckConfig::new(
            resolve_relative(manifest_path, &row.model),
            row.property.clone(),
        );
        cfg.constants = row.constants.clone();
        if let Some(e) = &row.engine {
            cfg.engine = Engine::parse(e)?;
        }
        if let Some(a) = &row.arith {
            cfg.arith = Arith::parse(a)?;
        }
        if let Some(eps) = &row.epsilon {
            cfg.epsilon = eps.clone();
        }
        Ok(cfg)
    };
    let started = Instant::now();
    let outcome = build().and_then(|cfg| run_check(&cfg));
    let seconds = started.elapsed().as_secs_f64();
    match outcome {
        Err(e) => RowResult {
            label,
            value: "-".into(),
            seconds,
            states_total: 0,
            peak_states: 0,
            peak_transitions: 0,
            status: RowStatus::Error,
            detail: e.to_string(),
        },
        Ok(rec) => {
            let (status, detail) = match &row.expect {
                None => (RowStatus::Ok, String::new()),
                Some(expect) => check_expectation(&rec.value, expect, row.tolerance),
            };
            RowResult {
                label,
                value: rec.value,
                seconds,
                states_total: rec.states_total,
                peak_states: rec.peak_states,
                peak_transitions: rec.peak_transitions,
                status,
                detail,
            }
        }
    }
}

fn check_expectation(value: &str, expect: &str, tolerance: Option<f64>) -> (RowStatus, String) {
    let tol = tolerance.unwrap_or(1e-6);
    let (Some(got), Some(want)) = (value_to_f64(value), value_to_f64(expect)) else {
        return (
            RowStatus::Error,
            format!("cannot compare `{value}` with `{expect}`"),
        );
    };
    if got == want {
        return (RowStatus::Ok, String::new());
    }
    let rel = if want == 0.0 {
        got.abs()
    } else if want.is_infinite() {
        return if got.is_infinite() {
            (RowStatus::Ok, String::new())
        } else {
            (RowStatus::Deviation, format!("expected inf, got {got}"))
        };
    } else {
        ((got - want) / want).abs()
    };
    if rel <= tol {
        (RowStatus::Ok, String::new())
    } else {
        (
            RowStatus::Deviation,
            format!("expected {expect} within {tol:.0e} relative, got {value} (off by {rel:.2e})"),
        )
    }
}

/// Renders the result table.
pub fn format_table(results: &[RowResult]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<44} {:>14} {:>9} {:>12} {:>11} {:>11}  status\n",
        "instance", "value", "time[s]", "model states", "exp. states", "exp. trans"
    ));
    for r in results {
        let status = match r.status {
            RowStatus::Ok => "ok".to_string(),
            RowStatus::Deviation => format!("DEVIATION: {}", r.detail),
            RowStatus::Error => format!("ERROR: {}", r.detail),
        };
        let value = if r.value.len() > 14 {
            // Fractions with long digit strings are summarized.
            match value_to_f64(&r.value) {
                Some(v) => format!("{v:.6e}"),
                None => r.value.chars().take(14).collect(),
            }
        } else {
            r.value.clone()
        };
        out.push_str(&format!(
            "{:<44} {:>14} {:>9.2} {:>12} {:>11} {:>11}  {}\n",
            r.label, value, r.seconds, r.states_total, r.peak_states, r.peak_transitions, status
        ));
    }
    let bad = results
        .iter()
        .filter(|r| r.status != RowStatus::Ok)
        .count();
    out.push_str(&format!("{} rows, {} flagged\n", results.len(), bad));
    out
}
