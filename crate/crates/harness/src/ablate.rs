use std::path::PathBuf;

use attack::Mode;

use crate::plan::{AttackKind, AttackPlanEntry, ExperimentPlan};
use crate::records::Metrics;
use crate::{run_batch, HarnessError, Result};

/// One cell of the dropout-ratio x training-scale table.
#[derive(Debug, Clone)]
pub struct DropoutAblationRow {
    pub ref_group: String,
    pub p_max: f64,
    pub metrics: Metrics,
}

fn subspace_template(plan: &ExperimentPlan) -> Result<attack::AttackConfig> {
    plan.attacks
        .iter()
        .find_map(|e| match &e.kind {
            AttackKind::Subspace { config, .. } => Some(*config),
            _ => None,
        })
        .ok_or_else(|| HarnessError::Plan("plan has no subspace attack to ablate".into()))
}

/// Reruns the subspace attack per (reference group, p_max) cell. A `p_max`
/// of zero disables drop sampling entirely (deterministic priors); other
/// cells keep the standard climb schedule capped at `p_max`.
pub fn ablation_dropout(
    plan: &ExperimentPlan,
    ref_groups: &[(String, Vec<PathBuf>)],
    p_grid: &[f64],
    workers: usize,
) -> Result<Vec<DropoutAblationRow>> {
    if p_grid.is_empty() {
        return Err(HarnessError::Plan("empty p_max grid".into()));
    }
    let template = subspace_template(plan)?;
    let groups: Vec<(String, Vec<PathBuf>)> = if ref_groups.is_empty() {
        vec![("default".to_string(), plan.references.clone())]
    } else {
        ref_groups.to_vec()
    };

    let mut rows = Vec::with_capacity(groups.len() * p_grid.len());
    for (group_name, refs) in &groups {
        for &p_max in p_grid {
            let mut config = template;
            if p_max == 0.0 {
                config.p0 = 0.0;
                config.p_step = 0.0;
                config.p_max = 0.0;
            } else {
                config.p_max = p_max;
                config.p0 = config.p0.min(p_max);
            }
            let mut sub = plan.clone();
            sub.references = refs.clone();
            sub.attacks = vec![AttackPlanEntry {
                name: "subspace".to_string(),
                kind: AttackKind::Subspace { config, refs: None },
            }];
            sub.out_dir = plan
                .out_dir
                .join(format!("ablate_dropout_{group_name}_p{p_max}"));
            let output = run_batch(&sub, workers)?;
            let (_, metrics) = output
                .metrics
                .into_iter()
                .next()
                .expect("one attack configured");
            rows.push(DropoutAblationRow {
                ref_group: group_name.clone(),
                p_max,
                metrics,
            });
        }
    }
    Ok(rows)
}

/// One row of the reference-set ablation.
#[derive(Debug, Clone)]
pub struct ReferenceAblationRow {
    pub subset: String,
    pub mode: Mode,
    pub metrics: Metrics,
}

/// Reruns the subspace attack per reference subset (coordinate mode), then
/// once more with the full set in full-subspace mode for the
/// gradient-descent-vs-coordinate-descent comparison.
pub fn ablation_references(
    plan: &ExperimentPlan,
    subsets: &[Vec<usize>],
    workers: usize,
) -> Result<Vec<ReferenceAblationRow>> {
    if subsets.is_empty() {
        return Err(HarnessError::Plan("no reference subsets".into()));
    }
    let template = subspace_template(plan)?;
    for subset in subsets {
        if subset.is_empty() || subset.iter().any(|&i| i >= plan.references.len()) {
            return Err(HarnessError::Plan(format!(
                "bad reference subset {subset:?}"
            )));
        }
    }

    let mut rows = Vec::new();
    let mut run_with = |label: String, refs: Option<Vec<usize>>, mode: Mode| -> Result<()> {
        let mut config = template;
        config.mode = mode;
        let mut sub = plan.clone();
        sub.attacks = vec![AttackPlanEntry {
            name: "subspace".to_string(),
            kind: AttackKind::Subspace { config, refs },
        }];
        sub.out_dir = plan.out_dir.join(format!(
            "ablate_refs_{}_{}",
            label.replace([' ', ','], "-"),
            match mode {
                Mode::Coordinate => "coordinate",
                Mode::FullSubspace => "full-subspace",
            }
        ));
        let output = run_batch(&sub, workers)?;
        let (_, metrics) = output.metrics.into_iter().next().expect("one attack");
        rows.push(ReferenceAblationRow {
            subset: label,
            mode,
            metrics,
        });
        Ok(())
    };

    for subset in subsets {
        let label = subset
            .iter()
            .map(|i| i.to_string())
            .collect::<Vec<_>>()
            .join("+");
        run_with(label, Some(subset.clone()), Mode::Coordinate)?;
    }
    let all: Vec<usize> = (0..plan.references.len()).collect();
    let label = all
        .iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join("+");
    run_with(label, None, Mode::FullSubspace)?;
    Ok(rows)
}
