use crate::plan::{AttackKind, AttackPlanEntry, ExperimentPlan};
use crate::records::Metrics;
use crate::{run_batch, HarnessError, Result};

/// One (delta, tau, eta_g) grid cell.
#[derive(Debug, Clone)]
pub struct GridRow {
    pub delta: f32,
    pub tau: f32,
    pub eta_g: f32,
    pub metrics: Metrics,
}

/// Cartesian sweep of the estimator step sizes for the subspace attack; the
/// plan supplies everything else. This is the calibration tool behind the
/// exposed finite-difference hyper-parameters.
pub fn grid_sweep(
    plan: &ExperimentPlan,
    deltas: &[f32],
    taus: &[f32],
    eta_gs: &[f32],
    workers: usize,
) -> Result<Vec<GridRow>> {
    if deltas.is_empty() || taus.is_empty() || eta_gs.is_empty() {
        return Err(HarnessError::Plan("empty grid axis".into()));
    }
    let template = plan
        .attacks
        .iter()
        .find_map(|e| match &e.kind {
            AttackKind::Subspace { config, .. } => Some(*config),
            _ => None,
        })
        .ok_or_else(|| HarnessError::Plan("plan has no subspace attack to sweep".into()))?;

    let mut rows = Vec::with_capacity(deltas.len() * taus.len() * eta_gs.len());
    for &delta in deltas {
        for &tau in taus {
            for &eta_g in eta_gs {
                let config = attack::AttackConfig {
                    delta,
                    tau,
                    eta_g,
                    ..template
                };
                let mut sub = plan.clone();
                sub.attacks = vec![AttackPlanEntry {
                    name: "subspace".to_string(),
                    kind: AttackKind::Subspace { config, refs: None },
                }];
                sub.out_dir = plan
                    .out_dir
                    .join(format!("grid_d{delta}_t{tau}_e{eta_g}"));
                let output = run_batch(&sub, workers)?;
                let (_, metrics) = output.metrics.into_iter().next().expect("one attack");
                rows.push(GridRow {
                    delta,
                    tau,
                    eta_g,
                    metrics,
                });
            }
        }
    }
    Ok(rows)
}

/// Writes the grid table as CSV.
pub fn write_grid_csv(path: &std::path::Path, rows: &[GridRow]) -> Result<()> {
    let mut out = String::from("delta,tau,eta_g,failure_rate,mean_queries,median_queries,runs\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.delta,
            r.tau,
            r.eta_g,
            r.metrics.failure_rate,
            r.metrics.mean_queries.map(|v| v.to_string()).unwrap_or_default(),
            r.metrics.median_queries.map(|v| v.to_string()).unwrap_or_default(),
            r.metrics.runs
        ));
    }
    std::fs::write(path, out).map_err(|e| HarnessError::io(path, e))
}
