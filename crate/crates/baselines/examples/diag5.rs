// Scratch: regularized victim + larger reference pools; margin trajectory of
// failing runs.

use std::sync::Arc;
use std::time::Instant;

use attack::AttackConfig;
use baselines::bandit_gaussian_attack;
use micronet::LossKind;
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
        epochs: 12,
        learning_rate: 0.08,
        decay_every: 4,
        dropout: 0.1,
        ..models::TrainConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (vparams, _) = models::train(&vspec, &plan.victim_train, &vcfg, &mut rng).unwrap();
    let vspec = Arc::new(vspec);
    let vparams = Arc::new(vparams);
    let (vacc, correct) = models::evaluate(&vspec, &vparams, &plan.attack_eval).unwrap();
    println!("victim (dropout-trained) acc {vacc:.3} ({:?})", t0.elapsed());

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
    let mut refs6 = refs3.clone();
    refs6.push(train_ref("mlp-small", 18, &mut rng));
    refs6.push(train_ref("conv-small", 19, &mut rng));
    refs6.push(train_ref("resnet-tiny", 20, &mut rng));
    println!("zoo ready at {:?}", t0.elapsed());

    let images: Vec<usize> = correct.into_iter().take(40).collect();
    let base = AttackConfig {
        epsilon: 0.05,
        eta: 1.0 / 255.0,
        budget: 2000,
        eta_g: 0.01,
        tau: 0.3,
        ..AttackConfig::default()
    };

    for (name, refs) in [("refs3", &refs3), ("refs6", &refs6)] {
        let mut wins = 0;
        let mut qs = Vec::new();
        for (k, &i) in images.iter().enumerate() {
            let mut victim = VictimOracle::new(
                vspec.clone(),
                vparams.clone(),
                ScoreKind::Logits,
                Budget::Limited(2000),
            )
            .unwrap();
            let mut arng = ChaCha8Rng::seed_from_u64(5000 + k as u64);
            let r = attack::subspace_attack(
                &plan.attack_eval.images[i],
                plan.attack_eval.labels[i],
                &mut victim,
                refs,
                &base,
                &mut arng,
            )
            .unwrap();
            wins += r.success as usize;
            if r.success {
                qs.push(r.queries_used);
            }
        }
        println!("subspace {name}: {wins}/40 med {:?}", median(&mut qs));
    }

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
            &base,
            &mut arng,
        )
        .unwrap();
        b_wins += r.success as usize;
        if r.success {
            b_q.push(r.queries_used);
        }
    }
    println!("bandit: {b_wins}/40 med {:?}", median(&mut b_q));

    // Margin trajectory of the first failing subspace run.
    for (k, &i) in images.iter().enumerate() {
        let x = &plan.attack_eval.images[i];
        let y = plan.attack_eval.labels[i];
        let mut victim = VictimOracle::new(
            vspec.clone(),
            vparams.clone(),
            ScoreKind::Logits,
            Budget::Limited(2000),
        )
        .unwrap();
        let mut arng = ChaCha8Rng::seed_from_u64(5000 + k as u64);
        let mut margins = Vec::new();
        let mut g_norms = Vec::new();
        let mut u_norms = Vec::new();
        let r = attack::subspace_attack_observed(
            x,
            y,
            &mut victim,
            &refs3,
            &base,
            &mut arng,
            |trace| {
                if trace.t % 100 == 1 || trace.t == 50 {
                    let g_norm =
                        trace.g.iter().map(|&v| (v as f64).powi(2)).sum::<f64>().sqrt();
                    let u_norm = trace
                        .u
                        .data()
                        .iter()
                        .map(|&v| (v as f64).powi(2))
                        .sum::<f64>()
                        .sqrt();
                    g_norms.push(g_norm);
                    u_norms.push(u_norm);
                }
            },
        )
        .unwrap();
        if !r.success {
            // Recompute margins along a replay of the same run.
            let mut victim2 = VictimOracle::new(
                vspec.clone(),
                vparams.clone(),
                ScoreKind::Logits,
                Budget::Limited(2000),
            )
            .unwrap();
            let mut arng2 = ChaCha8Rng::seed_from_u64(5000 + k as u64);
            let mut t = 0u64;
            let _ = attack::subspace_attack_observed(
                x,
                y,
                &mut victim2,
                &refs3,
                &base,
                &mut arng2,
                |trace| {
                    t = trace.t;
                },
            );
            let logits = micronet::forward(&vspec, &vparams, &r.x_adv, None).unwrap();
            let final_margin =
                micronet::loss_value(logits.data(), y, LossKind::MarginUntargeted).unwrap();
            let logits0 = micronet::forward(&vspec, &vparams, x, None).unwrap();
            let margin0 =
                micronet::loss_value(logits0.data(), y, LossKind::MarginUntargeted).unwrap();
            margins.push(margin0);
            margins.push(final_margin);
            println!(
                "failing run img {k}: margin {margin0:+.3} -> {final_margin:+.3} after {t} iters; |g| {:?}; tau|u| {:?}",
                g_norms.iter().map(|v| format!("{v:.2e}")).collect::<Vec<_>>(),
                u_norms.iter().map(|v| format!("{:.2e}", v * base.tau as f64)).collect::<Vec<_>>()
            );
            break;
        }
    }
}
