use leakspot_dataset::rng::sample_rng;
use leakspot_oilnet::reference::gradcheck::{logit_gradcheck, randomize_norms};
use leakspot_oilnet::reference::shape_oracle;
use leakspot_oilnet::{
    dump_activations, load_checkpoint, save_checkpoint, scale_channels, Checkpoint, CheckpointMeta, Oilnet40, Oilnet40Spec, OilnetError,
};
use leakspot_tensor::reference::naive_conv2d;
use leakspot_tensor::Tensor;
use proptest::prelude::*;
use rand::Rng;

fn random_input(shape: &[usize], seed: u64) -> Tensor {
    let mut rng = sample_rng(seed, 0);
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap()
}

fn small(size: usize) -> Oilnet40Spec {
    Oilnet40Spec { dense_units: [24, 12], ..Oilnet40Spec::with_input_size(size) }
}

#[test]
fn full_size_counts_match_the_shape_oracle() {
    let spec = Oilnet40Spec::default();
    let model = Oilnet40::build(&spec, 0).unwrap();
    let oracle = shape_oracle(&spec);
    assert_eq!(model.trainable_count(), oracle.trainable);
    assert_eq!(model.non_trainable_count(), oracle.non_trainable);
    assert_eq!((model.trainable_count(), model.non_trainable_count()), (11_553_201, 1_040));
}

#[test]
fn counts_match_oracle_across_dense_widths() {
    for d1 in [1, 64, 400] {
        for d2 in [1, 32, 64] {
            let spec = Oilnet40Spec { dense_units: [d1, d2], ..Oilnet40Spec::with_input_size(48) };
            let model = Oilnet40::build(&spec, 3).unwrap();
            let oracle = shape_oracle(&spec);
            assert_eq!((model.trainable_count(), model.non_trainable_count()), (oracle.trainable, oracle.non_trainable));
        }
    }
}

#[test]
fn third_block_yields_32_maps_of_30_by_30() {
    let model = Oilnet40::build(&Oilnet40Spec::default(), 5).unwrap();
    let maps = dump_activations(&model, &random_input(&[1, 3, 240, 240], 1), 3).unwrap();
    assert_eq!(maps.len(), 32);
    assert!(maps.iter().all(|m| (m.height(), m.width(), m.channels()) == (30, 30, 1)));
}

#[test]
fn zero_input_and_biases_give_zero_maps() {
    let mut model = Oilnet40::build(&small(32), 5).unwrap();
    for conv in &mut model.convs {
        conv.bias.value.fill(0.0);
    }
    for index in 1..=3 {
        let maps = dump_activations(&model, &Tensor::zeros(&[1, 3, 32, 32]), index).unwrap();
        assert!(maps.iter().all(|m| m.data().iter().all(|&v| v == 0)));
    }
}

#[test]
fn invalid_activation_requests_are_rejected() {
    let model = Oilnet40::build(&small(16), 5).unwrap();
    assert!(dump_activations(&model, &Tensor::zeros(&[1, 3, 16, 16]), 0).is_err());
    assert!(dump_activations(&model, &Tensor::zeros(&[1, 3, 16, 16]), 4).is_err());
    assert!(dump_activations(&model, &Tensor::zeros(&[2, 3, 16, 16]), 1).is_err());
}

/// Block outputs recomputed with the naive convolution and scalar loops for
/// norm, ReLU and pooling.
fn oracle_block(model: &Oilnet40, x: &Tensor, index: usize) -> Tensor {
    let mut h = x.clone();
    for i in 0..index {
        let conv = &model.convs[i];
        let z = naive_conv2d(&h, &conv.weights.value, &conv.bias.value, 1);
        let norm = &model.conv_norms[i];
        let eps = model.spec().bn_epsilon;
        let (_, c, hh, ww) = z.dims4().unwrap();
        let mut out = vec![0.0f32; c * (hh / 2) * (ww / 2)];
        for ch in 0..c {
            let scale = norm.gamma.value.data()[ch] / (norm.running_var.data()[ch] + eps).sqrt();
            let act = |y: usize, x: usize| {
                let v = z.data()[(ch * hh + y) * ww + x];
                ((v - norm.running_mean.data()[ch]) * scale + norm.beta.value.data()[ch]).max(0.0)
            };
            for py in 0..hh / 2 {
                for px in 0..ww / 2 {
                    let m = act(2 * py, 2 * px).max(act(2 * py, 2 * px + 1)).max(act(2 * py + 1, 2 * px)).max(act(2 * py + 1, 2 * px + 1));
                    out[(ch * (hh / 2) + py) * (ww / 2) + px] = m;
                }
            }
        }
        h = Tensor::new(vec![1, c, hh / 2, ww / 2], out).unwrap();
    }
    h
}

#[test]
fn activations_match_the_naive_forward_pass() {
    let mut model = Oilnet40::build(&small(32), 9).unwrap();
    randomize_norms(&mut model, 9);
    let x = random_input(&[1, 3, 32, 32], 2);
    for index in 1..=3 {
        let fast = model.block_output(&x, index - 1).unwrap();
        let slow = oracle_block(&model, &x, index);
        assert_eq!(fast.shape(), slow.shape());
        for (a, b) in fast.data().iter().zip(slow.data()) {
            assert!((a - b).abs() <= 1e-4 * (1.0 + b.abs()), "block {index}: {a} vs {b}");
        }
        let maps = dump_activations(&model, &x, index).unwrap();
        let expected = scale_channels(&slow).unwrap();
        for (m, e) in maps.iter().zip(&expected) {
            assert!(m.data().iter().zip(e.data()).all(|(a, b)| a.abs_diff(*b) <= 1));
        }
    }
}

#[test]
fn full_model_logit_gradient_matches_finite_differences() {
    let spec = Oilnet40Spec::with_input_size(24);
    let mut model = Oilnet40::build(&spec, 21).unwrap();
    randomize_norms(&mut model, 21);
    let x = random_input(&[1, 3, 24, 24], 3);
    let report = logit_gradcheck(&model, &x, 6, 4).unwrap();
    assert!(report.passed(), "{report:?}");
    assert!(report.checked > report.skipped, "{report:?}");
}

#[test]
fn batch_prediction_equals_single_prediction() {
    let model = Oilnet40::build(&small(24), 8).unwrap();
    let x = random_input(&[5, 3, 24, 24], 6);
    let batch = model.predict(&x).unwrap();
    let plane = 3 * 24 * 24;
    for (i, expected) in batch.iter().enumerate() {
        let one = Tensor::new(vec![1, 3, 24, 24], x.data()[i * plane..(i + 1) * plane].to_vec()).unwrap();
        let single = model.predict(&one).unwrap();
        assert_eq!(single[0].0.to_bits(), expected.0.to_bits());
        assert_eq!(single[0].1, expected.1);
    }
    let again = model.predict(&x).unwrap();
    assert!(again.iter().zip(&batch).all(|(a, b)| a.0.to_bits() == b.0.to_bits()));
}

fn meta() -> CheckpointMeta {
    CheckpointMeta { seed: 3, epochs_run: 2, best_epoch: 1, variant: "original".into(), learning_rate: 1e-3, val_accuracy: 0.5, val_loss: 0.69 }
}

fn bits(t: &Tensor) -> Vec<u32> {
    t.data().iter().map(|v| v.to_bits()).collect()
}

#[test]
fn checkpoint_file_round_trip_preserves_predictions() {
    let mut model = Oilnet40::build(&small(24), 12).unwrap();
    randomize_norms(&mut model, 12);
    let ckpt = Checkpoint::from_model(&model, meta());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.onet");
    save_checkpoint(&ckpt, &path).unwrap();
    let loaded = load_checkpoint(&path).unwrap();
    assert_eq!(loaded.meta, ckpt.meta);
    assert_eq!(loaded.spec, ckpt.spec);
    for ((na, ta), (nb, tb)) in loaded.tensors.iter().zip(&ckpt.tensors) {
        assert_eq!(na, nb);
        assert_eq!(bits(ta), bits(tb));
    }
    let restored = loaded.to_model().unwrap();
    let x = random_input(&[3, 3, 24, 24], 13);
    let a = model.predict(&x).unwrap();
    let b = restored.predict(&x).unwrap();
    assert!(a.iter().zip(&b).all(|(p, q)| p.0.to_bits() == q.0.to_bits() && p.1 == q.1));
}

#[test]
fn corrupted_magic_and_unknown_version_are_rejected() {
    let model = Oilnet40::build(&small(16), 1).unwrap();
    let bytes = Checkpoint::from_model(&model, meta()).encode().unwrap();
    let mut bad_magic = bytes.clone();
    bad_magic[0] ^= 0xff;
    assert!(matches!(Checkpoint::decode(&bad_magic), Err(OilnetError::Checkpoint(_))));
    let mut bad_version = bytes.clone();
    bad_version[7] = 9;
    assert!(matches!(Checkpoint::decode(&bad_version), Err(OilnetError::Version { found: 9, .. })));
    assert!(Checkpoint::decode(&bytes[..bytes.len() - 1]).is_err());
    let mut trailing = bytes.clone();
    trailing.push(0);
    assert!(Checkpoint::decode(&trailing).is_err());
    assert!(Checkpoint::decode(&bytes[..5]).is_err());
}

#[test]
fn restoring_into_a_different_architecture_fails() {
    let ckpt = Checkpoint::from_model(&Oilnet40::build(&small(16), 1).unwrap(), meta());
    let mut other = Oilnet40::build(&Oilnet40Spec { dense_units: [8, 4], ..small(16) }, 1).unwrap();
    assert!(ckpt.restore_into(&mut other).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn checkpoint_bytes_round_trip_bit_exactly(seed in any::<u64>(), d1 in 1usize..20, d2 in 1usize..10, gray in any::<bool>()) {
        let spec = Oilnet40Spec { dense_units: [d1, d2], input_channels: if gray { 1 } else { 3 }, ..Oilnet40Spec::with_input_size(16) };
        let mut model = Oilnet40::build(&spec, seed).unwrap();
        randomize_norms(&mut model, seed);
        let ckpt = Checkpoint::from_model(&model, CheckpointMeta { seed, ..meta() });
        let bytes = ckpt.encode().unwrap();
        let back = Checkpoint::decode(&bytes).unwrap();
        prop_assert_eq!(back.encode().unwrap(), bytes);
        prop_assert_eq!(back.tensors.len(), ckpt.tensors.len());
        for ((_, a), (_, b)) in back.tensors.iter().zip(&ckpt.tensors) {
            prop_assert_eq!(bits(a), bits(b));
        }
    }
}
