use std::path::PathBuf;
use std::sync::Arc;

use attack::subspace_attack;
use baselines::{
    bandit_gaussian_attack, nes_attack, random_orthonormal_basis, random_subspace_attack,
    transfer_attack,
};
use micronet::{NetworkSpec, ParameterSet};
use models::Dataset;
use oracle::{Budget, ReferenceOracle, VictimOracle};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::plan::{AttackKind, ExperimentPlan};
use crate::records::{compute_metrics, write_metrics_json, write_records_csv, Metrics, RunRecord};
use crate::seeding::derive_seed;
use crate::{HarnessError, Result};

type Model = (Arc<NetworkSpec>, Arc<ParameterSet<f32>>);

#[derive(Debug)]
pub struct BatchOutput {
    pub records: Vec<RunRecord>,
    pub metrics: Vec<(String, Metrics)>,
    pub records_path: PathBuf,
    pub metrics_path: PathBuf,
    /// Eval-split positions of the attacked images.
    pub attacked_images: Vec<usize>,
}

fn load(path: &std::path::Path) -> Result<Model> {
    let (spec, params, _) = models::load_model(path)?;
    Ok((Arc::new(spec), Arc::new(params)))
}

/// Builds a worker pool honoring `workers` (0 = library default).
pub(crate) fn pool(workers: usize) -> rayon::ThreadPool {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if workers > 0 {
        builder = builder.num_threads(workers);
    }
    builder.build().expect("worker pool")
}

/// Selects up to `count` correctly classified eval images, plan-seeded.
pub(crate) fn select_attackable(
    spec: &NetworkSpec,
    params: &ParameterSet<f32>,
    eval: &Dataset,
    count: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    let (_, mut correct) = models::evaluate(spec, params, eval)?;
    if correct.is_empty() {
        return Err(HarnessError::NoAttackableImages);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_1a6e);
    correct.shuffle(&mut rng);
    correct.truncate(count);
    correct.sort_unstable();
    Ok(correct)
}

pub(crate) fn run_one(
    kind: &AttackKind,
    victim: &Model,
    refs: &[ReferenceOracle],
    eval: &Dataset,
    image: usize,
    seed: u64,
) -> Result<attack::AttackResult> {
    let cfg = kind.attack_config();
    let mut oracle = VictimOracle::new(
        victim.0.clone(),
        victim.1.clone(),
        cfg.score_kind,
        Budget::Limited(cfg.budget),
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = &eval.images[image];
    let y = eval.labels[image];
    let result = match kind {
        AttackKind::Subspace { config, refs: sel } => {
            let chosen: Vec<ReferenceOracle> = match sel {
                None => refs.to_vec(),
                Some(indices) => indices.iter().map(|&i| refs[i].clone()).collect(),
            };
            subspace_attack(x, y, &mut oracle, &chosen, config, &mut rng)?
        }
        AttackKind::RandomSubspace { m, config } => {
            let basis = random_orthonormal_basis(x.numel(), *m, &mut rng)?;
            random_subspace_attack(x, y, &mut oracle, &basis, config, &mut rng)?
        }
        AttackKind::GaussianBandit { config } => {
            bandit_gaussian_attack(x, y, &mut oracle, config, &mut rng)?
        }
        AttackKind::Nes { config } => nes_attack(x, y, &mut oracle, config, &mut rng)?,
        AttackKind::Transfer { steps, config } => {
            transfer_attack(x, y, refs, &mut oracle, config, *steps, &mut rng)?
        }
    };
    debug_assert_eq!(result.queries_used, oracle.query_count());
    Ok(result)
}

/// Runs every configured attack over the plan's image batch, in parallel,
/// and emits `records.csv` + `metrics.json` into the plan's output directory.
/// Deterministic given the plan (per-image seeds are hashed, output ordering
/// is by attack then image id). On a failed run, everything recorded so far
/// is still flushed to disk.
pub fn run_batch(plan: &ExperimentPlan, workers: usize) -> Result<BatchOutput> {
    plan.validate()?;
    let splits = plan.load_splits()?;
    let victim = load(&plan.victim)?;
    let mut refs = Vec::with_capacity(plan.references.len());
    for (i, path) in plan.references.iter().enumerate() {
        let (spec, params) = load(path)?;
        refs.push(ReferenceOracle::new(spec, params, i)?);
    }
    for entry in &plan.attacks {
        if let AttackKind::Subspace { refs: Some(sel), .. } = &entry.kind {
            if sel.iter().any(|&i| i >= refs.len()) {
                return Err(HarnessError::Plan(format!(
                    "attack `{}` selects a reference out of range",
                    entry.name
                )));
            }
        }
    }

    let images = select_attackable(
        &victim.0,
        &victim.1,
        &splits.attack_eval,
        plan.image_count,
        plan.seed,
    )?;

    let mut tasks = Vec::with_capacity(plan.attacks.len() * images.len());
    for (attack_index, entry) in plan.attacks.iter().enumerate() {
        let fingerprint = entry.kind.fingerprint();
        for &image in &images {
            tasks.push((attack_index, entry, fingerprint.clone(), image));
        }
    }

    let eval = &splits.attack_eval;
    let outcomes: Vec<(usize, u64, Result<RunRecord>)> = pool(workers).install(|| {
        tasks
            .par_iter()
            .map(|(attack_index, entry, fingerprint, image)| {
                let image_id = eval.ids[*image];
                let seed = derive_seed(plan.seed, image_id, &entry.name);
                let record = run_one(&entry.kind, &victim, &refs, eval, *image, seed).map(|r| {
                    RunRecord {
                        image_id,
                        attack: entry.name.clone(),
                        success: r.success,
                        queries: r.queries_used,
                        iterations: r.iterations,
                        seed,
                        config_fingerprint: fingerprint.clone(),
                    }
                });
                (*attack_index, image_id, record)
            })
            .collect()
    });

    let mut records = Vec::with_capacity(outcomes.len());
    let mut first_error: Option<HarnessError> = None;
    let mut keyed: Vec<(usize, u64, RunRecord)> = Vec::with_capacity(outcomes.len());
    for (attack_index, image_id, outcome) in outcomes {
        match outcome {
            Ok(record) => keyed.push((attack_index, image_id, record)),
            Err(e) if first_error.is_none() => first_error = Some(e),
            Err(_) => {}
        }
    }
    keyed.sort_by_key(|a| (a.0, a.1));
    records.extend(keyed.into_iter().map(|(_, _, r)| r));

    std::fs::create_dir_all(&plan.out_dir).map_err(|e| HarnessError::io(&plan.out_dir, e))?;
    let records_path = plan.out_dir.join("records.csv");
    write_records_csv(&records_path, &records)?;

    if let Some(e) = first_error {
        return Err(e);
    }

    let mut metrics = Vec::new();
    for entry in &plan.attacks {
        let subset: Vec<RunRecord> = records
            .iter()
            .filter(|r| r.attack == entry.name)
            .cloned()
            .collect();
        metrics.push((entry.name.clone(), compute_metrics(&subset)?));
    }
    let metrics_path = plan.out_dir.join("metrics.json");
    write_metrics_json(&metrics_path, &metrics)?;

    Ok(BatchOutput {
        records,
        metrics,
        records_path,
        metrics_path,
        attacked_images: images,
    })
}
