// Scratch: hyperparameter balance for the bandit attacks on the toy task.

use std::sync::Arc;

use attack::AttackConfig;
use baselines::bandit_gaussian_attack;
use oracle::{Budget, ReferenceOracle, ScoreKind, VictimOracle};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let data = models::synthetic_dataset(&models::SyntheticSpec::new(4, 8, 320, 21)).unwrap();
    let plan = models::standard_splits(&data, 220, 40, 60, 22).unwrap();
    let spec = models::build_architecture("mlp-small", &[8, 8, 1], 4).unwrap();
    let tcfg = models::TrainConfig {
        epochs: 12,
        learning_rate: 0.15,
        ..models::TrainConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let (vparams, _) = models::train(&spec, &plan.victim_train, &tcfg, &mut rng).unwrap();
    let spec = Arc::new(spec);
    let vparams = Arc::new(vparams);

    // Three references: two mlp-small inits + one conv-small, all on the
    // small reference split.
    let mut refs: Vec<ReferenceOracle> = Vec::new();
    for (i, (arch, seed)) in [("mlp-small", 77u64), ("mlp-small", 78), ("conv-small", 79)]
        .iter()
        .enumerate()
    {
        let rspec = models::build_architecture(arch, &[8, 8, 1], 4).unwrap();
        let (rparams, _) = models::train(
            &rspec,
            &plan.reference_train,
            &models::TrainConfig {
                epochs: 25,
                init_seed: *seed,
                ..tcfg
            },
            &mut rng,
        )
        .unwrap();
        refs.push(ReferenceOracle::new(Arc::new(rspec), Arc::new(rparams), i).unwrap());
    }

    let (_, correct) = models::evaluate(&spec, &vparams, &plan.attack_eval).unwrap();
    let easy: Vec<usize> = correct
        .into_iter()
        .filter(|&i| {
            let x = &plan.attack_eval.images[i];
            let y = plan.attack_eval.labels[i];
            let mut adv = x.clone();
            for _ in 0..60 {
                let g = micronet::input_gradient(
                    &spec,
                    &vparams,
                    &adv,
                    y,
                    micronet::LossKind::MarginUntargeted,
                    None,
                )
                .unwrap();
                for ((v, &gv), &xv) in adv.data_mut().iter_mut().zip(g.data()).zip(x.data()) {
                    let s = if gv > 0.0 { 1.0 } else if gv < 0.0 { -1.0 } else { 0.0 };
                    *v = (*v + 0.01 * s).clamp(xv - 0.06, xv + 0.06).clamp(0.0, 1.0);
                }
                let l = micronet::forward(&spec, &vparams, &adv, None).unwrap();
                if micronet::argmax(l.data()) != y {
                    return true;
                }
            }
            false
        })
        .collect();
    println!("{} easy instances; refs: mlp/mlp/conv on 40 images", easy.len());

    let run = |cfg: &AttackConfig, use_refs: bool, p_max: f64, seed_base: u64| -> (usize, Vec<u64>) {
        let mut wins = 0;
        let mut queries = Vec::new();
        for (k, &i) in easy.iter().enumerate() {
            let x = &plan.attack_eval.images[i];
            let y = plan.attack_eval.labels[i];
            let mut victim = VictimOracle::new(
                spec.clone(),
                vparams.clone(),
                ScoreKind::Logits,
                Budget::Limited(cfg.budget),
            )
            .unwrap();
            let mut arng = ChaCha8Rng::seed_from_u64(seed_base + k as u64);
            let cfg = AttackConfig {
                p_max,
                p0: if p_max == 0.0 { 0.0 } else { 0.05 },
                p_step: if p_max == 0.0 { 0.0 } else { 0.01 },
                ..*cfg
            };
            let r = if use_refs {
                attack::subspace_attack(x, y, &mut victim, &refs, &cfg, &mut arng).unwrap()
            } else {
                bandit_gaussian_attack(x, y, &mut victim, &cfg, &mut arng).unwrap()
            };
            if r.success {
                wins += 1;
                queries.push(r.queries_used);
            }
        }
        queries.sort_unstable();
        (wins, queries)
    };

    for eta_g in [0.01f32] {
        for (tau, delta) in [(0.3f32, 0.1f32), (0.3, 0.03), (0.3, 0.01), (1.0, 0.03), (1.0, 0.01)] {
            let cfg = AttackConfig {
                epsilon: 0.06,
                eta: 0.01,
                budget: 600,
                eta_g,
                tau,
                delta,
                ..AttackConfig::default()
            };
            let (b_wins, b_q) = run(&cfg, false, 0.0, 5000);
            let (p0_wins, p0_q) = run(&cfg, true, 0.0, 9000);
            let (p5_wins, p5_q) = run(&cfg, true, 0.5, 9000);
            println!(
                "eta_g {eta_g:6} tau {tau:3} delta {delta:4}: bandit {b_wins:2} (med {:3?}) | prior p0 {p0_wins:2} (med {:3?}) | prior p.5 {p5_wins:2} (med {:3?})",
                b_q.get(b_q.len() / 2),
                p0_q.get(p0_q.len() / 2),
                p5_q.get(p5_q.len() / 2),
            );
        }
    }
}
