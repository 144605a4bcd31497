use std::sync::Arc;

use micronet::{input_gradient, sample_drop, DropSample, LossKind, Tensor};
use models::build_architecture;
use oracle::{Budget, OracleError, ReferenceOracle, ScoreKind, VictimOracle};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_model(seed: u64) -> (Arc<micronet::NetworkSpec>, Arc<micronet::ParameterSet<f32>>) {
    let spec = build_architecture("mlp-small", &[8, 8, 1], 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = micronet::init_params(&spec, &mut rng);
    (Arc::new(spec), Arc::new(params))
}

fn resnet_model(seed: u64) -> (Arc<micronet::NetworkSpec>, Arc<micronet::ParameterSet<f32>>) {
    let spec = build_architecture("resnet-tiny", &[8, 8, 1], 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = micronet::init_params(&spec, &mut rng);
    (Arc::new(spec), Arc::new(params))
}

fn probe(seed: u64) -> Tensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Tensor::new(vec![8, 8, 1], (0..64).map(|_| rng.random::<f32>()).collect()).unwrap()
}

#[test]
fn query_is_deterministic_and_counted() {
    let (spec, params) = small_model(1);
    let mut victim =
        VictimOracle::new(spec, params, ScoreKind::Logits, Budget::Limited(100)).unwrap();
    let x = probe(2);
    assert_eq!(victim.query_count(), 0);
    let a = victim.query(&x).unwrap();
    assert_eq!(victim.query_count(), 1);
    let b = victim.query(&x).unwrap();
    assert_eq!(victim.query_count(), 2);
    assert_eq!(a, b);
}

#[test]
fn budget_two_rejects_third_query() {
    let (spec, params) = small_model(1);
    let mut victim =
        VictimOracle::new(spec, params, ScoreKind::Logits, Budget::Limited(2)).unwrap();
    let x = probe(3);
    victim.query(&x).unwrap();
    victim.query(&x).unwrap();
    match victim.query(&x) {
        Err(OracleError::BudgetExhausted { used }) => assert_eq!(used, 2),
        other => panic!("expected budget exhaustion, got {other:?}"),
    }
    assert_eq!(victim.query_count(), 2);
}

#[test]
fn probabilities_are_normalized_and_positive() {
    let (spec, params) = small_model(4);
    let mut victim =
        VictimOracle::new(spec, params, ScoreKind::Probabilities, Budget::Unlimited).unwrap();
    let scores = victim.query(&probe(5)).unwrap();
    assert!(scores.iter().all(|&s| s > 0.0));
    let sum: f32 = scores.iter().sum();
    assert!((sum - 1.0).abs() < 1e-5);
}

#[test]
fn remaining_budget_accounting() {
    let (spec, params) = small_model(1);
    let mut victim =
        VictimOracle::new(spec.clone(), params.clone(), ScoreKind::Logits, Budget::Limited(10_000))
            .unwrap();
    assert_eq!(victim.remaining_budget(), Some(10_000));
    let x = probe(6);
    victim.query(&x).unwrap();
    victim.query(&x).unwrap();
    assert_eq!(victim.remaining_budget(), Some(9_998));

    let unlimited =
        VictimOracle::new(spec, params, ScoreKind::Logits, Budget::Unlimited).unwrap();
    assert_eq!(unlimited.remaining_budget(), None);
}

#[test]
fn query_rejects_out_of_range_pixels_and_bad_shape() {
    let (spec, params) = small_model(1);
    let mut victim =
        VictimOracle::new(spec, params, ScoreKind::Logits, Budget::Limited(10)).unwrap();
    let mut bad = probe(7);
    bad.data_mut()[3] = 1.5;
    assert!(matches!(
        victim.query(&bad),
        Err(OracleError::PixelRange { index: 3, .. })
    ));
    let flat = Tensor::from_vec(vec![0.5; 64]);
    assert!(matches!(victim.query(&flat), Err(OracleError::Engine(_))));
    assert_eq!(victim.query_count(), 0);
}

#[test]
fn prior_gradient_at_zero_ratio_is_deterministic() {
    let (spec, params) = resnet_model(2);
    let reference = ReferenceOracle::new(spec, params, 0).unwrap();
    let x = probe(8);
    let mut rng1 = ChaCha8Rng::seed_from_u64(11);
    let mut rng2 = ChaCha8Rng::seed_from_u64(999);
    let a = reference
        .prior_gradient(&x, 1, 0.0, LossKind::MarginUntargeted, &mut rng1)
        .unwrap();
    let b = reference
        .prior_gradient(&x, 1, 0.0, LossKind::MarginUntargeted, &mut rng2)
        .unwrap();
    assert_eq!(a.data(), b.data());
}

#[test]
fn prior_gradient_delegates_to_engine_gradient() {
    let (spec, params) = resnet_model(3);
    let reference = ReferenceOracle::new(spec.clone(), params.clone(), 1).unwrap();
    assert!(reference.droppable());
    let x = probe(9);

    // Same rng stream on both sides: the oracle draws one DropSample first.
    let mut oracle_rng = ChaCha8Rng::seed_from_u64(42);
    let via_oracle = reference
        .prior_gradient(&x, 2, 0.3, LossKind::MarginUntargeted, &mut oracle_rng)
        .unwrap();

    let mut mirror_rng = ChaCha8Rng::seed_from_u64(42);
    let drop: DropSample<f32> = sample_drop(&spec, 0.3, &mut mirror_rng).unwrap();
    let direct =
        input_gradient(&spec, &params, &x, 2, LossKind::MarginUntargeted, Some(&drop)).unwrap();
    assert_eq!(via_oracle.data(), direct.data());
}

#[test]
fn linear_reference_margin_gradient_is_row_difference() {
    let spec = micronet::NetworkSpec::new(
        vec![micronet::Layer::Head {
            in_dim: 3,
            class_count: 2,
        }],
        vec![3],
        2,
    )
    .unwrap();
    let w = [0.2f32, -0.1, 0.4, -0.3, 0.5, 0.1];
    let mut params = micronet::ParameterSet::new();
    params.insert(
        0,
        micronet::LayerParams::Affine {
            weight: Tensor::new(vec![2, 3], w.to_vec()).unwrap(),
            bias: Tensor::from_vec(vec![0.0, 0.0]),
        },
    );
    let reference = ReferenceOracle::new(Arc::new(spec), Arc::new(params), 0).unwrap();
    let x = Tensor::from_vec(vec![0.5f32, 0.5, 0.5]);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let u = reference
        .prior_gradient(&x, 0, 0.0, LossKind::MarginUntargeted, &mut rng)
        .unwrap();
    for i in 0..3 {
        assert!((u.data()[i] - (w[3 + i] - w[i])).abs() < 1e-6);
    }
}

#[test]
fn prior_gradients_are_fresh_under_dropout() {
    let (spec, params) = resnet_model(5);
    let reference = ReferenceOracle::new(spec, params, 0).unwrap();
    let x = probe(10);
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut previous: Option<Vec<f32>> = None;
    let mut repeats = 0usize;
    for _ in 0..50 {
        let u = reference
            .prior_gradient(&x, 1, 0.3, LossKind::MarginUntargeted, &mut rng)
            .unwrap();
        let data = u.data().to_vec();
        if previous.as_deref() == Some(&data) {
            repeats += 1;
        }
        previous = Some(data);
    }
    assert_eq!(repeats, 0, "{repeats} identical consecutive prior gradients");
}

#[test]
fn engine_forward_count_reconciles_with_query_count() {
    let (spec, params) = small_model(6);
    let mut victim =
        VictimOracle::new(spec, params, ScoreKind::Logits, Budget::Limited(50)).unwrap();
    let x = probe(11);
    micronet::audit::reset();
    for _ in 0..7 {
        victim.query(&x).unwrap();
    }
    assert_eq!(micronet::audit::forward_passes(), 7);
    assert_eq!(victim.query_count(), 7);
}
