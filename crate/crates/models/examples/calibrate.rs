// Scratch calibration: sweep generator hardness, train zoo members, and
// check white-box attackability. Not part of the deliverable surface.

use micronet::{argmax, forward, input_gradient, LossKind, NetworkSpec, ParameterSet, Tensor};
use models::{
    build_architecture, evaluate, standard_splits, synthetic_dataset, train, Dataset,
    SyntheticSpec, TrainConfig,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn whitebox_pgd_success(
    spec: &NetworkSpec,
    params: &ParameterSet<f32>,
    data: &Dataset,
    idx: &[usize],
    eps: f32,
    steps: usize,
) -> f32 {
    let mut wins = 0usize;
    for &i in idx {
        let x = &data.images[i];
        let y = data.labels[i];
        let mut adv = x.clone();
        let mut success = false;
        for _ in 0..steps {
            let g = input_gradient(spec, params, &adv, y, LossKind::MarginUntargeted, None).unwrap();
            for ((a, &gv), &xv) in adv.data_mut().iter_mut().zip(g.data()).zip(x.data()) {
                *a = (*a + (eps / 8.0) * gv.signum()).clamp(xv - eps, xv + eps).clamp(0.0, 1.0);
            }
            let logits = forward(spec, params, &adv, None).unwrap();
            if argmax(logits.data()) != y {
                success = true;
                break;
            }
        }
        wins += success as usize;
    }
    wins as f32 / idx.len() as f32
}

fn main() {
    for (spread, jitter, noise) in [(0.16f32, 0.30f32, 0.07f32), (0.14, 0.32, 0.08), (0.18, 0.30, 0.07)] {
        let mut spec = SyntheticSpec::new(10, 28, 2200, 1234);
        spec.class_spread = spread;
        spec.sample_jitter = jitter;
        spec.pixel_noise = noise;
        let data = synthetic_dataset(&spec).unwrap();
        let plan = standard_splits(&data, 1200, 240, 600, 99).unwrap();
        println!("== spread {spread} jitter {jitter} noise {noise}");

        let mut victim = None;
        for (arch, split, epochs, lr) in [
            ("conv-deep", &plan.victim_train, 5, 0.08),
            ("mlp-small", &plan.reference_train, 40, 0.08),
            ("conv-small", &plan.reference_train, 30, 0.08),
        ] {
            let t = Instant::now();
            let net = build_architecture(arch, &[28, 28, 1], 10).unwrap();
            let cfg = TrainConfig {
                epochs,
                batch_size: 32,
                learning_rate: lr,
                decay_every: (epochs / 3).max(1),
                decay_factor: 0.5,
                init_seed: 7,
                dropout: 0.0,
            };
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let (params, _) = train(&net, split, &cfg, &mut rng).unwrap();
            let (train_acc, _) = evaluate(&net, &params, split).unwrap();
            let (eval_acc, correct) = evaluate(&net, &params, &plan.attack_eval).unwrap();
            println!(
                "  {arch:12} on {:16}: train {train_acc:.3} eval {eval_acc:.3} in {:?}",
                split.split_id,
                t.elapsed()
            );
            if arch == "conv-deep" {
                victim = Some((net, params, correct));
            }
        }

        let (vnet, vparams, correct) = victim.unwrap();
        let sample: Vec<usize> = correct.iter().copied().take(100).collect();
        for eps in [8.0f32 / 255.0, 0.05] {
            let t = Instant::now();
            let sr = whitebox_pgd_success(&vnet, &vparams, &plan.attack_eval, &sample, eps, 60);
            println!("  white-box PGD eps {eps:.4}: success {sr:.3} in {:?}", t.elapsed());
        }
    }
}
