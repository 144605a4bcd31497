use std::path::Path;

use attack::AttackConfig;
use baselines::{bandit_gaussian_attack, random_orthonormal_basis, random_subspace_attack};
use oracle::{Budget, VictimOracle};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::batch::{pool, select_attackable};
use crate::plan::ExperimentPlan;
use crate::records::{compute_metrics, Metrics, RunRecord};
use crate::seeding::derive_seed;
use crate::{HarnessError, Result};

/// One sweep row: a random-subspace dimension (or the full-dimension bandit
/// baseline, `m = None`) with its aggregate metrics.
#[derive(Debug, Clone)]
pub struct DimensionSweepRow {
    pub label: String,
    pub m: Option<usize>,
    pub metrics: Metrics,
}

/// Failure rate and query statistics of the fixed-random-subspace attack as
/// the subspace dimension grows, plus the full-dimension bandit baseline row.
///
/// Bases are nested per image (one max-dimension basis, prefix-sliced per m)
/// and every m reuses the same per-image seed, so adjacent grid points are
/// strongly coupled.
pub fn dimension_sweep(
    plan: &ExperimentPlan,
    m_grid: &[usize],
    cfg: &AttackConfig,
    workers: usize,
) -> Result<Vec<DimensionSweepRow>> {
    if m_grid.is_empty() {
        return Err(HarnessError::Plan("empty m grid".into()));
    }
    plan.validate()?;
    let splits = plan.load_splits()?;
    let (vspec, vparams, _) = models::load_model(&plan.victim)?;
    let vspec = std::sync::Arc::new(vspec);
    let vparams = std::sync::Arc::new(vparams);
    let n = vspec.input_dim();
    let mut grid: Vec<usize> = m_grid.to_vec();
    grid.sort_unstable();
    grid.dedup();
    if grid.iter().any(|&m| m == 0 || m > n) {
        return Err(HarnessError::Plan(format!(
            "m grid {grid:?} outside 1..={n}"
        )));
    }
    let m_max = *grid.last().expect("non-empty grid");

    let images = select_attackable(
        &vspec,
        &vparams,
        &splits.attack_eval,
        plan.image_count,
        plan.seed,
    )?;
    let eval = &splits.attack_eval;

    // Per image: one basis at m_max, every grid point uses its prefix and the
    // same seed; plus one bandit-baseline run.
    let per_image: Vec<Result<Vec<(String, RunRecord)>>> = pool(workers).install(|| {
        images
            .par_iter()
            .map(|&image| {
                let image_id = eval.ids[image];
                let seed = derive_seed(plan.seed, image_id, "dimension-sweep");
                let x = &eval.images[image];
                let y = eval.labels[image];
                let mut rows = Vec::with_capacity(grid.len() + 1);

                let mut basis_rng = ChaCha8Rng::seed_from_u64(seed);
                let basis = random_orthonormal_basis(n, m_max, &mut basis_rng)?;

                for &m in &grid {
                    let sub = basis.prefix(m);
                    let mut victim = VictimOracle::new(
                        vspec.clone(),
                        vparams.clone(),
                        cfg.score_kind,
                        Budget::Limited(cfg.budget),
                    )?;
                    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
                    let r = random_subspace_attack(x, y, &mut victim, &sub, cfg, &mut rng)?;
                    rows.push((
                        format!("random-subspace-m{m}"),
                        RunRecord {
                            image_id,
                            attack: format!("random-subspace-m{m}"),
                            success: r.success,
                            queries: r.queries_used,
                            iterations: r.iterations,
                            seed,
                            config_fingerprint: String::new(),
                        },
                    ));
                }

                let mut victim = VictimOracle::new(
                    vspec.clone(),
                    vparams.clone(),
                    cfg.score_kind,
                    Budget::Limited(cfg.budget),
                )?;
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
                let r = bandit_gaussian_attack(x, y, &mut victim, cfg, &mut rng)?;
                rows.push((
                    "gaussian-bandit".to_string(),
                    RunRecord {
                        image_id,
                        attack: "gaussian-bandit".to_string(),
                        success: r.success,
                        queries: r.queries_used,
                        iterations: r.iterations,
                        seed,
                        config_fingerprint: String::new(),
                    },
                ));
                Ok(rows)
            })
            .collect()
    });

    let mut by_label: std::collections::BTreeMap<String, Vec<RunRecord>> = Default::default();
    for rows in per_image {
        for (label, record) in rows? {
            by_label.entry(label).or_default().push(record);
        }
    }

    let mut out = Vec::with_capacity(grid.len() + 1);
    for &m in &grid {
        let label = format!("random-subspace-m{m}");
        let records = &by_label[&label];
        out.push(DimensionSweepRow {
            label,
            m: Some(m),
            metrics: compute_metrics(records)?,
        });
    }
    out.push(DimensionSweepRow {
        label: "gaussian-bandit".to_string(),
        m: None,
        metrics: compute_metrics(&by_label["gaussian-bandit"])?,
    });
    Ok(out)
}

/// Writes the sweep table as CSV.
pub fn write_sweep_csv(path: &Path, rows: &[DimensionSweepRow]) -> Result<()> {
    let mut out = String::from("label,m,failure_rate,mean_queries,median_queries,runs\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.label,
            r.m.map(|m| m.to_string()).unwrap_or_else(|| "full".into()),
            r.metrics.failure_rate,
            r.metrics.mean_queries.map(|v| v.to_string()).unwrap_or_default(),
            r.metrics.median_queries.map(|v| v.to_string()).unwrap_or_default(),
            r.metrics.runs
        ));
    }
    std::fs::write(path, out).map_err(|e| HarnessError::io(path, e))
}
