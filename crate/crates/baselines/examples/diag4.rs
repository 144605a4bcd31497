// Scratch: estimator-scale grid for the prior-guided attack at the
// acceptance scale, plus reference-count and epsilon variations.

use std::sync::Arc;
use std::time::Instant;

use attack::AttackConfig;
use baselines::bandit_gaussian_attack;
use oracle::{Budget, ReferenceOracle, ScoreKind, VictimOracle};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn median(v: &mut Vec<u64>) -> Option<u64> {
    v.sort_unstable();
    v.get(v.len() / 2).copied()
}

fn main() {
    let t0 = Instant::now();
    let data = models::synthetic_dataset(&models::SyntheticSpec::new(10, 28, 2600, 1234)).unwrap();
    let plan = models::standard_splits(&data, 1600, 240, 600, 99).unwrap();

    let vspec = models::build_architecture("conv-deep", &[28, 28, 1], 10).unwrap();
    let vcfg = models::TrainConfig {
        epochs: 8,
        learning_rate: 0.08,
        decay_every: 3,
        ..models::TrainConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (vparams, _) = models::train(&vspec, &plan.victim_train, &vcfg, &mut rng).unwrap();
    let vspec = Arc::new(vspec);
    let vparams = Arc::new(vparams);
    let (vacc, correct) = models::evaluate(&vspec, &vparams, &plan.attack_eval).unwrap();
    println!("victim acc {vacc:.3} ({:?})", t0.elapsed());

    let train_ref = |arch: &str, seed: u64, rng: &mut ChaCha8Rng| -> ReferenceOracle {
        let rspec = models::build_architecture(arch, &[28, 28, 1], 10).unwrap();
        let rcfg = models::TrainConfig {
            epochs: 50,
            learning_rate: 0.08,
            decay_every: 16,
            init_seed: seed,
            dropout: 0.1,
            ..models::TrainConfig::default()
        };
        let (rparams, _) = models::train(&rspec, &plan.reference_train, &rcfg, rng).unwrap();
        ReferenceOracle::new(Arc::new(rspec), Arc::new(rparams), seed as usize).unwrap()
    };
    let refs3 = vec![
        train_ref("mlp-small", 8, &mut rng),
        train_ref("conv-small", 9, &mut rng),
        train_ref("resnet-tiny", 10, &mut rng),
    ];
    let mut refs4 = refs3.clone();
    refs4.push(train_ref("mlp-wide", 11, &mut rng));
    println!("zoo ready at {:?}", t0.elapsed());

    let images: Vec<usize> = correct.into_iter().take(40).collect();

    let run_subspace = |refs: &[ReferenceOracle], cfg: &AttackConfig| -> (usize, Option<u64>) {
        let mut wins = 0;
        let mut qs = Vec::new();
        for (k, &i) in images.iter().enumerate() {
            let mut victim = VictimOracle::new(
                vspec.clone(),
                vparams.clone(),
                ScoreKind::Logits,
                Budget::Limited(cfg.budget),
            )
            .unwrap();
            let mut arng = ChaCha8Rng::seed_from_u64(5000 + k as u64);
            let r = attack::subspace_attack(
                &plan.attack_eval.images[i],
                plan.attack_eval.labels[i],
                &mut victim,
                refs,
                cfg,
                &mut arng,
            )
            .unwrap();
            wins += r.success as usize;
            if r.success {
                qs.push(r.queries_used);
            }
        }
        (wins, median(&mut qs))
    };

    for tau in [0.1f32, 0.3] {
        for eta_g in [0.003f32, 0.01, 0.03] {
            let cfg = AttackConfig {
                epsilon: 0.05,
                eta: 1.0 / 255.0,
                budget: 2000,
                eta_g,
                tau,
                ..AttackConfig::default()
            };
            let (w3, m3) = run_subspace(&refs3, &cfg);
            println!("eps .05 tau {tau} eta_g {eta_g}: refs3 {w3}/40 med {m3:?}");
        }
    }

    // Reference count and epsilon variations at the incumbent scales.
    let base = AttackConfig {
        epsilon: 0.05,
        eta: 1.0 / 255.0,
        budget: 2000,
        eta_g: 0.01,
        tau: 0.3,
        ..AttackConfig::default()
    };
    let (w4, m4) = run_subspace(&refs4, &base);
    println!("eps .05 refs4: {w4}/40 med {m4:?}");
    let eta2 = AttackConfig {
        eta: 2.0 / 255.0,
        ..base
    };
    let (we, me) = run_subspace(&refs3, &eta2);
    println!("eps .05 eta 2/255: {we}/40 med {me:?}");

    for eps in [0.06f32] {
        let cfg = AttackConfig {
            epsilon: eps,
            ..base
        };
        let (ws, ms) = run_subspace(&refs3, &cfg);
        let mut b_wins = 0;
        let mut b_q = Vec::new();
        for (k, &i) in images.iter().enumerate() {
            let mut victim = VictimOracle::new(
                vspec.clone(),
                vparams.clone(),
                ScoreKind::Logits,
                Budget::Limited(2000),
            )
            .unwrap();
            let mut arng = ChaCha8Rng::seed_from_u64(3000 + k as u64);
            let r = bandit_gaussian_attack(
                &plan.attack_eval.images[i],
                plan.attack_eval.labels[i],
                &mut victim,
                &cfg,
                &mut arng,
            )
            .unwrap();
            b_wins += r.success as usize;
            if r.success {
                b_q.push(r.queries_used);
            }
        }
        println!(
            "eps {eps}: subspace {ws}/40 med {ms:?} vs bandit {b_wins}/40 med {:?}",
            median(&mut b_q)
        );
    }
}
