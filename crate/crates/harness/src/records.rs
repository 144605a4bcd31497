use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{HarnessError, Result};

/// One attack run, as persisted to `records.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub image_id: u64,
    pub attack: String,
    pub success: bool,
    pub queries: u64,
    pub iterations: u64,
    pub seed: u64,
    pub config_fingerprint: String,
}

/// Aggregate attack statistics in the reporting layout of the result tables:
/// failure rate over all runs, mean/median queries over successful runs only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub failure_rate: f64,
    pub mean_queries: Option<f64>,
    pub median_queries: Option<f64>,
    pub runs: usize,
}

/// Failure rate plus mean/median queries of successful runs; mean/median are
/// absent when nothing succeeded.
pub fn compute_metrics(records: &[RunRecord]) -> Result<Metrics> {
    if records.is_empty() {
        return Err(HarnessError::Records("no records to aggregate".into()));
    }
    let mut successes: Vec<u64> = records
        .iter()
        .filter(|r| r.success)
        .map(|r| r.queries)
        .collect();
    successes.sort_unstable();
    let failures = records.len() - successes.len();
    let mean = if successes.is_empty() {
        None
    } else {
        Some(successes.iter().sum::<u64>() as f64 / successes.len() as f64)
    };
    let median = if successes.is_empty() {
        None
    } else if successes.len() % 2 == 1 {
        Some(successes[successes.len() / 2] as f64)
    } else {
        let hi = successes.len() / 2;
        Some((successes[hi - 1] + successes[hi]) as f64 / 2.0)
    };
    Ok(Metrics {
        failure_rate: failures as f64 / records.len() as f64,
        mean_queries: mean,
        median_queries: median,
        runs: records.len(),
    })
}

const CSV_HEADER: &str = "image_id,attack,success,queries,iterations,seed,config_fingerprint";

/// Writes `records.csv` with the fixed column order. Callers pass records in
/// their final deterministic order.
pub fn write_records_csv(path: &Path, records: &[RunRecord]) -> Result<()> {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.image_id, r.attack, r.success, r.queries, r.iterations, r.seed, r.config_fingerprint
        ));
    }
    fs::write(path, out).map_err(|e| HarnessError::io(path, e))
}

/// Parses a `records.csv` back into run records.
pub fn read_records_csv(path: &Path) -> Result<Vec<RunRecord>> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => {
            return Err(HarnessError::Records(format!(
                "bad header {other:?}, expected {CSV_HEADER:?}"
            )))
        }
    }
    let mut records = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(HarnessError::Records(format!(
                "line {}: {} fields",
                lineno + 2,
                fields.len()
            )));
        }
        let parse_u64 = |s: &str, what: &str| {
            s.parse::<u64>()
                .map_err(|_| HarnessError::Records(format!("line {}: bad {what} `{s}`", lineno + 2)))
        };
        records.push(RunRecord {
            image_id: parse_u64(fields[0], "image_id")?,
            attack: fields[1].to_string(),
            success: match fields[2] {
                "true" => true,
                "false" => false,
                other => {
                    return Err(HarnessError::Records(format!(
                        "line {}: bad success `{other}`",
                        lineno + 2
                    )))
                }
            },
            queries: parse_u64(fields[3], "queries")?,
            iterations: parse_u64(fields[4], "iterations")?,
            seed: parse_u64(fields[5], "seed")?,
            config_fingerprint: fields[6].to_string(),
        });
    }
    Ok(records)
}

/// Writes per-attack metrics as JSON (keys sorted, stable bytes).
pub fn write_metrics_json(path: &Path, metrics: &[(String, Metrics)]) -> Result<()> {
    let map: std::collections::BTreeMap<&str, &Metrics> =
        metrics.iter().map(|(k, v)| (k.as_str(), v)).collect();
    let body = serde_json::json!({ "attacks": map });
    let text = serde_json::to_string_pretty(&body)?;
    fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}
