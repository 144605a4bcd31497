use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use harness::{
    ablation_dropout, ablation_references, dimension_sweep, grid_sweep, residual_sweep, run_batch,
    ExperimentPlan,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "sublab", about = "Query-efficiency laboratory for score-based black-box attacks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Per-run victim query budget override.
    #[arg(long)]
    budget: Option<u64>,
    /// L-infinity radius override.
    #[arg(long)]
    epsilon: Option<f32>,
    /// Output directory override.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Worker threads (0 = automatic).
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Train a zoo model on a named split of the plan's dataset.
    Train {
        /// Plan file naming the dataset and splits.
        plan: PathBuf,
        /// Architecture id (mlp-small | mlp-wide | conv-small | conv-deep | resnet-tiny).
        #[arg(long)]
        arch: String,
        /// Training split: victim-train | reference-train.
        #[arg(long, default_value = "victim-train")]
        split: String,
        /// Output model base path.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        epochs: usize,
        #[arg(long, default_value_t = 0.08)]
        learning_rate: f32,
        #[arg(long, default_value_t = 0.0)]
        dropout: f64,
        #[arg(long, default_value_t = 0)]
        init_seed: u64,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Run every attack in the plan over the eval batch.
    Attack {
        plan: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Failure rate vs random-subspace dimension, plus the bandit baseline.
    SweepDim {
        plan: PathBuf,
        /// Comma-separated subspace dimensions.
        #[arg(long, value_delimiter = ',')]
        grid: Vec<usize>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Projection residuals of the true victim gradient against prior-gradient
    /// and random subspaces.
    Residual {
        plan: PathBuf,
        /// Drop ratio for the prior gradients.
        #[arg(long, default_value_t = 0.0)]
        drop_ratio: f64,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Dropout-ratio ablation over reference groups.
    AblateDropout {
        plan: PathBuf,
        /// Comma-separated p_max grid.
        #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.2, 0.5])]
        p_grid: Vec<f64>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Reference-subset ablation plus the full-subspace comparison.
    AblateRefs {
        plan: PathBuf,
        /// Subsets as semicolon-separated comma lists, e.g. "0;0,1;0,1,2".
        #[arg(long)]
        subsets: String,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Estimator step-size grid sweep (delta, tau, eta_g).
    Grid {
        plan: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = [0.01f32, 0.1])]
        deltas: Vec<f32>,
        #[arg(long, value_delimiter = ',', default_values_t = [0.1f32, 0.3, 1.0])]
        taus: Vec<f32>,
        #[arg(long, value_delimiter = ',', default_values_t = [0.003f32, 0.01, 0.03])]
        eta_gs: Vec<f32>,
        #[command(flatten)]
        common: CommonOpts,
    },
}

fn apply_overrides(plan: &mut ExperimentPlan, common: &CommonOpts) {
    if let Some(seed) = common.seed {
        plan.seed = seed;
    }
    if let Some(out) = &common.out_dir {
        plan.out_dir = out.clone();
    }
    for entry in &mut plan.attacks {
        let cfg = entry.kind.attack_config_mut();
        if let Some(budget) = common.budget {
            cfg.budget = budget;
        }
        if let Some(eps) = common.epsilon {
            cfg.epsilon = eps;
        }
    }
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn run() -> Result<(), Box<dyn std::error::Error>> {
    match Cli::parse().command {
        Command::Train {
            plan,
            arch,
            split,
            out,
            epochs,
            learning_rate,
            dropout,
            init_seed,
            common,
        } => {
            let mut plan = ExperimentPlan::from_file_unchecked(&plan)?;
            apply_overrides(&mut plan, &common);
            let splits = plan.load_splits()?;
            let dataset = match split.as_str() {
                "victim-train" => &splits.victim_train,
                "reference-train" => &splits.reference_train,
                other => return Err(format!("unknown split `{other}`").into()),
            };
            let spec = models::build_architecture(&arch, dataset.image_shape(), dataset.class_count)?;
            let cfg = models::TrainConfig {
                epochs,
                learning_rate,
                dropout,
                init_seed,
                decay_every: (epochs / 3).max(1),
                ..models::TrainConfig::default()
            };
            let mut rng = ChaCha8Rng::seed_from_u64(plan.seed ^ init_seed);
            let (params, report) = models::train(&spec, dataset, &cfg, &mut rng)?;
            let (eval_acc, _) = models::evaluate(&spec, &params, &splits.attack_eval)?;
            let manifest = models::ModelManifest::new(
                &arch,
                dataset.image_shape().to_vec(),
                dataset.class_count,
                &dataset.split_id,
                eval_acc,
            );
            models::save_model(&spec, &params, &manifest, &out)?;
            println!(
                "trained {arch} on {split} ({} images, {} epochs): eval accuracy {eval_acc:.3}, final loss {:.4}",
                dataset.len(),
                epochs,
                report.epoch_losses.last().copied().unwrap_or(f32::NAN)
            );
            println!("saved to {}.manifest.json / .weights.bin", out.display());
        }
        Command::Attack { plan, common } => {
            let mut plan = ExperimentPlan::from_file(&plan)?;
            apply_overrides(&mut plan, &common);
            let output = run_batch(&plan, common.workers)?;
            println!(
                "{} runs over {} images -> {}",
                output.records.len(),
                output.attacked_images.len(),
                output.records_path.display()
            );
            for (name, m) in &output.metrics {
                println!(
                    "  {name}: failure {:.3}, mean {:?}, median {:?} over {} runs",
                    m.failure_rate, m.mean_queries, m.median_queries, m.runs
                );
            }
            println!("metrics -> {}", output.metrics_path.display());
        }
        Command::SweepDim { plan, grid, common } => {
            let mut plan = ExperimentPlan::from_file(&plan)?;
            apply_overrides(&mut plan, &common);
            let cfg = plan
                .attacks
                .first()
                .map(|e| *e.kind.attack_config())
                .unwrap_or_default();
            let rows = dimension_sweep(&plan, &grid, &cfg, common.workers)?;
            std::fs::create_dir_all(&plan.out_dir)?;
            let path = plan.out_dir.join("sweep_dim.csv");
            harness::write_sweep_csv(&path, &rows)?;
            for r in &rows {
                println!(
                    "{}: failure {:.3}, mean {:?}, median {:?}",
                    r.label, r.metrics.failure_rate, r.metrics.mean_queries, r.metrics.median_queries
                );
            }
            println!("table -> {}", path.display());
        }
        Command::Residual {
            plan,
            drop_ratio,
            common,
        } => {
            let mut plan = ExperimentPlan::from_file(&plan)?;
            apply_overrides(&mut plan, &common);
            let splits = plan.load_splits()?;
            let (vspec, vparams, _) = models::load_model(&plan.victim)?;
            let mut refs = Vec::new();
            for (i, path) in plan.references.iter().enumerate() {
                let (spec, params, _) = models::load_model(path)?;
                refs.push(oracle::ReferenceOracle::new(
                    std::sync::Arc::new(spec),
                    std::sync::Arc::new(params),
                    i,
                )?);
            }
            let images = harness::select_attackable_images(
                &vspec,
                &vparams,
                &splits.attack_eval,
                plan.image_count,
                plan.seed,
            )?;
            let mut rng = ChaCha8Rng::seed_from_u64(plan.seed ^ 0x0e51d);
            let rows = residual_sweep(
                &vspec,
                &vparams,
                &refs,
                &splits.attack_eval,
                &images,
                drop_ratio,
                &mut rng,
            )?;
            std::fs::create_dir_all(&plan.out_dir)?;
            let path = plan.out_dir.join("residuals.csv");
            let mut out = String::from("k,prior_residual,random_residual\n");
            for r in &rows {
                println!(
                    "k={}: prior residual {:.4}, random residual {:.4}",
                    r.k, r.prior_residual, r.random_residual
                );
                out.push_str(&format!("{},{},{}\n", r.k, r.prior_residual, r.random_residual));
            }
            std::fs::write(&path, out)?;
            println!("table -> {}", path.display());
        }
        Command::AblateDropout {
            plan,
            p_grid,
            common,
        } => {
            let mut plan = ExperimentPlan::from_file(&plan)?;
            apply_overrides(&mut plan, &common);
            let rows = ablation_dropout(&plan, &[], &p_grid, common.workers)?;
            std::fs::create_dir_all(&plan.out_dir)?;
            let path = plan.out_dir.join("ablate_dropout.csv");
            let mut out = String::from("ref_group,p_max,failure_rate,mean_queries,median_queries,runs\n");
            for r in &rows {
                println!(
                    "{} p_max {}: failure {:.3}, mean {:?}, median {:?}",
                    r.ref_group, r.p_max, r.metrics.failure_rate, r.metrics.mean_queries, r.metrics.median_queries
                );
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    r.ref_group,
                    r.p_max,
                    r.metrics.failure_rate,
                    r.metrics.mean_queries.map(|v| v.to_string()).unwrap_or_default(),
                    r.metrics.median_queries.map(|v| v.to_string()).unwrap_or_default(),
                    r.metrics.runs
                ));
            }
            std::fs::write(&path, out)?;
            println!("table -> {}", path.display());
        }
        Command::AblateRefs {
            plan,
            subsets,
            common,
        } => {
            let mut plan = ExperimentPlan::from_file(&plan)?;
            apply_overrides(&mut plan, &common);
            let parsed: Vec<Vec<usize>> = subsets
                .split(';')
                .map(|group| {
                    group
                        .split(',')
                        .filter(|s| !s.is_empty())
                        .map(|s| s.trim().parse::<usize>())
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<Vec<_>, _>>()?;
            let rows = ablation_references(&plan, &parsed, common.workers)?;
            std::fs::create_dir_all(&plan.out_dir)?;
            let path = plan.out_dir.join("ablate_refs.csv");
            let mut out = String::from("subset,mode,failure_rate,mean_queries,median_queries,runs\n");
            for r in &rows {
                let mode = match r.mode {
                    attack::Mode::Coordinate => "coordinate",
                    attack::Mode::FullSubspace => "full-subspace",
                };
                println!(
                    "refs {} ({mode}): failure {:.3}, mean {:?}, median {:?}",
                    r.subset, r.metrics.failure_rate, r.metrics.mean_queries, r.metrics.median_queries
                );
                out.push_str(&format!(
                    "{},{mode},{},{},{},{}\n",
                    r.subset,
                    r.metrics.failure_rate,
                    r.metrics.mean_queries.map(|v| v.to_string()).unwrap_or_default(),
                    r.metrics.median_queries.map(|v| v.to_string()).unwrap_or_default(),
                    r.metrics.runs
                ));
            }
            std::fs::write(&path, out)?;
            println!("table -> {}", path.display());
        }
        Command::Grid {
            plan,
            deltas,
            taus,
            eta_gs,
            common,
        } => {
            let mut plan = ExperimentPlan::from_file(&plan)?;
            apply_overrides(&mut plan, &common);
            let rows = grid_sweep(&plan, &deltas, &taus, &eta_gs, common.workers)?;
            std::fs::create_dir_all(&plan.out_dir)?;
            let path = plan.out_dir.join("sweep_grid.csv");
            harness::write_grid_csv(&path, &rows)?;
            for r in &rows {
                println!(
                    "delta {} tau {} eta_g {}: failure {:.3}, mean {:?}, median {:?}",
                    r.delta, r.tau, r.eta_g, r.metrics.failure_rate, r.metrics.mean_queries, r.metrics.median_queries
                );
            }
            println!("table -> {}", path.display());
        }
    }
    Ok(())
}
