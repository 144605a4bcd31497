// Scratch: reference-width and victim-quality levers for the ordering.

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
        let (racc, _) = models::evaluate(&rspec, &rparams, &plan.attack_eval).unwrap();
        println!("  ref {arch}: acc {racc:.3}");
        ReferenceOracle::new(Arc::new(rspec), Arc::new(rparams), seed as usize).unwrap()
    };
    let small = train_ref("mlp-small", 8, &mut rng);
    let conv = train_ref("conv-small", 9, &mut rng);
    let resnet = train_ref("resnet-tiny", 10, &mut rng);
    println!("zoo ready at {:?}", t0.elapsed());

    let images: Vec<usize> = correct.into_iter().take(40).collect();

    let sets: Vec<(&str, Vec<ReferenceOracle>)> = vec![
        ("small+conv+res", vec![small.clone(), conv.clone(), resnet.clone()]),
    ];

    for eps in [0.05f32] {
        for (sname, refs) in &sets {
            for (pname, p0, p_step, p_max) in [("p0", 0.0f64, 0.0f64, 0.0f64), ("p.5", 0.05, 0.01, 0.5)] {
                let cfg = AttackConfig {
                    epsilon: eps,
                    eta: 1.0 / 255.0,
                    budget: 2000,
                    eta_g: 0.01,
                    tau: 0.3,
                    p0,
                    p_step,
                    p_max,
                    ..AttackConfig::default()
                };
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
                        &cfg,
                        &mut arng,
                    )
                    .unwrap();
                    wins += r.success as usize;
                    if r.success {
                        qs.push(r.queries_used);
                    }
                }
                println!(
                    "eps {eps}: subspace {sname} {pname}: {wins}/40 med {:?}",
                    median(&mut qs)
                );
            }
        }
        let cfg = AttackConfig {
            epsilon: eps,
            eta: 1.0 / 255.0,
            budget: 2000,
            eta_g: 0.01,
            tau: 0.3,
            ..AttackConfig::default()
        };
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
            let mut arng = ChaCha8Rng::seed_from_u64(3000 + k as u64);
            let r = bandit_gaussian_attack(
                &plan.attack_eval.images[i],
                plan.attack_eval.labels[i],
                &mut victim,
                &cfg,
                &mut arng,
            )
            .unwrap();
            wins += r.success as usize;
            if r.success {
                qs.push(r.queries_used);
            }
        }
        println!("eps {eps}: bandit: {wins}/40 med {:?}", median(&mut qs));

        let nes_cfg = baselines::NesConfig {
            samples: 25,
            sigma: 0.01,
            antithetic: true,
            attack: AttackConfig {
                epsilon: eps,
                eta: 1.0 / 255.0,
                budget: 2000,
                ..AttackConfig::default()
            },
        };
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
            let mut arng = ChaCha8Rng::seed_from_u64(4000 + k as u64);
            let r = baselines::nes_attack(
                &plan.attack_eval.images[i],
                plan.attack_eval.labels[i],
                &mut victim,
                &nes_cfg,
                &mut arng,
            )
            .unwrap();
            wins += r.success as usize;
            if r.success {
                qs.push(r.queries_used);
            }
        }
        println!("eps {eps}: nes: {wins}/40 med {:?}", median(&mut qs));

        let tcfg = AttackConfig {
            epsilon: eps,
            eta: 1.0 / 255.0,
            budget: 2000,
            ..AttackConfig::default()
        };
        let mut wins = 0;
        for (k, &i) in images.iter().enumerate() {
            let mut victim = VictimOracle::new(
                vspec.clone(),
                vparams.clone(),
                ScoreKind::Logits,
                Budget::Limited(2000),
            )
            .unwrap();
            let mut arng = ChaCha8Rng::seed_from_u64(4500 + k as u64);
            let r = baselines::transfer_attack(
                &plan.attack_eval.images[i],
                plan.attack_eval.labels[i],
                &sets[0].1,
                &mut victim,
                &tcfg,
                100,
                &mut arng,
            )
            .unwrap();
            wins += r.success as usize;
        }
        println!("eps {eps}: transfer: {wins}/40");
    }
}
