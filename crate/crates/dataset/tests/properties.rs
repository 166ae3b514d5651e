use std::collections::HashSet;

use leakspot_dataset::rng::sample_rng;
use leakspot_dataset::*;
use leakspot_imageproc::{rgb_to_hsv, ImageU8};
use proptest::prelude::*;
use rand::Rng;

fn random_box<R: Rng>(rng: &mut R) -> BoundingBox {
    let w = rng.gen_range(0.001..1.0);
    let h = rng.gen_range(0.001..1.0);
    let cx = rng.gen_range(w / 2.0..=1.0 - w / 2.0);
    let cy = rng.gen_range(h / 2.0..=1.0 - h / 2.0);
    BoundingBox::new(rng.gen_range(0..5), cx, cy, w, h).unwrap()
}

#[test]
fn thousand_random_boxes_round_trip_within_tolerance() {
    let mut rng = sample_rng(42, 0);
    let boxes: Vec<BoundingBox> = (0..1000).map(|_| random_box(&mut rng)).collect();
    let parsed = parse_yolo_label(&write_yolo_label(&boxes)).unwrap();
    assert_eq!(parsed.len(), boxes.len());
    for (a, b) in boxes.iter().zip(&parsed) {
        assert_eq!(a.class_id, b.class_id);
        for (x, y) in [(a.cx, b.cx), (a.cy, b.cy), (a.w, b.w), (a.h, b.h)] {
            assert!((x - y).abs() <= 1e-6, "{x} vs {y}");
        }
    }
}

fn arb_image() -> impl Strategy<Value = ImageU8> {
    (4usize..24, 4usize..24).prop_flat_map(|(h, w)| {
        proptest::collection::vec(any::<u8>(), h * w * 3).prop_map(move |d| ImageU8::new(h, w, 3, d).unwrap())
    })
}

proptest! {
    #[test]
    fn split_is_a_partition(n in 0usize..200, a in 0.0f64..1.0, b in 0.0f64..1.0, seed in any::<u64>()) {
        let (val, test) = (a * (1.0 - b) / 2.0, b / 2.0);
        let ratios = SplitRatios::new(1.0 - val - test, val, test).unwrap();
        let ids: Vec<String> = (0..n).map(|i| format!("id{i}")).collect();
        let m = split_dataset(&ids, ratios, seed).unwrap();
        let all: Vec<&String> = m.train.iter().chain(&m.val).chain(&m.test).collect();
        prop_assert_eq!(all.len(), n);
        let unique: HashSet<&String> = all.iter().copied().collect();
        prop_assert_eq!(unique, ids.iter().collect::<HashSet<_>>());
        prop_assert_eq!(split_dataset(&ids, ratios, seed).unwrap(), m);
    }

    #[test]
    fn flips_are_involutions(img in arb_image(), seed in any::<u64>()) {
        let boxes = vec![random_box(&mut sample_rng(seed, 0))];
        for p in [
            AugmentParams { flip_horizontal: true, ..AugmentParams::identity() },
            AugmentParams { flip_vertical: true, ..AugmentParams::identity() },
        ] {
            let (once, b1) = apply_augment(&img, &boxes, &p).unwrap();
            let (twice, b2) = apply_augment(&once, &b1, &p).unwrap();
            prop_assert_eq!(&twice, &img);
            let (a, b) = (boxes[0], b2[0]);
            prop_assert!((a.cx - b.cx).abs() <= 1e-15 && (a.cy - b.cy).abs() <= 1e-15);
            prop_assert_eq!((a.w, a.h), (b.w, b.h));
        }
    }

    #[test]
    fn augmented_boxes_stay_in_the_unit_square(img in arb_image(), seed in any::<u64>()) {
        let mut rng = sample_rng(seed, 1);
        let boxes: Vec<BoundingBox> = (0..4).map(|_| random_box(&mut rng)).collect();
        let cfg = AugmentConfig { zoom: (-0.5, 0.5), shift: (-0.3, 0.3), brightness: (-40.0, 40.0), ..AugmentConfig::classifier_default() };
        let (out, out_boxes) = augment(&img, Some(&boxes), &cfg, &mut rng).unwrap();
        prop_assert_eq!((out.height(), out.width(), out.channels()), (img.height(), img.width(), 3));
        for b in out_boxes {
            prop_assert!(b.within_unit_square(1e-12), "{:?}", b);
        }
    }

    #[test]
    fn identity_augment_is_identity(img in arb_image(), seed in any::<u64>()) {
        let boxes = vec![random_box(&mut sample_rng(seed, 2))];
        let (out, out_boxes) = augment(&img, Some(&boxes), &AugmentConfig::identity(), &mut sample_rng(seed, 3)).unwrap();
        prop_assert_eq!(out, img);
        prop_assert_eq!(out_boxes, boxes);
    }
}

fn tree_bytes(root: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for sub in ["images", "labels"] {
        let mut entries: Vec<_> = std::fs::read_dir(root.join(sub)).unwrap().map(|e| e.unwrap().path()).collect();
        entries.sort();
        for p in entries {
            out.push((format!("{sub}/{}", p.file_name().unwrap().to_string_lossy()), std::fs::read(&p).unwrap()));
        }
    }
    for f in ["classes.csv", "split.json"] {
        out.push((f.to_string(), std::fs::read(root.join(f)).unwrap()));
    }
    out
}

#[test]
fn generation_is_byte_deterministic_and_loads_back() {
    let cfg = SynthConfig { normal: 6, anomaly: 5, height: 48, width: 64, seed: 99, ..SynthConfig::default() };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ds = synth_generate(&cfg, a.path()).unwrap();
    synth_generate(&cfg, b.path()).unwrap();
    assert_eq!(tree_bytes(a.path()), tree_bytes(b.path()));
    let loaded = Dataset::load(a.path()).unwrap();
    assert_eq!(loaded.manifest, ds.manifest);
    for (l, s) in loaded.samples.iter().zip(&ds.samples) {
        assert_eq!((&l.stem, &l.image, l.label), (&s.stem, &s.image, s.label));
        // Labels are stored with six decimals.
        assert!((l.boxes[0].cx - s.boxes[0].cx).abs() <= 1e-6 && (l.boxes[0].w - s.boxes[0].w).abs() <= 1e-6);
    }
    let other = SynthConfig { seed: 100, ..cfg };
    assert_ne!(Dataset::synthesize(&other).unwrap().samples, ds.samples);
}

#[test]
fn class_counts_match_configuration() {
    let cfg = SynthConfig { normal: 300, anomaly: 300, height: 32, width: 32, ..SynthConfig::default() };
    let dir = tempfile::tempdir().unwrap();
    let ds = synth_generate(&cfg, dir.path()).unwrap();
    assert_eq!(std::fs::read_dir(dir.path().join("images")).unwrap().count(), 600);
    assert_eq!(std::fs::read_dir(dir.path().join("labels")).unwrap().count(), 600);
    assert_eq!(ds.manifest.len(), 600);
    assert_eq!(ds.samples.iter().filter(|s| s.label.is_anomaly()).count(), 300);
}

#[test]
fn stratified_synthetic_split_sizes() {
    let cfg = SynthConfig { normal: 400, anomaly: 400, height: 32, width: 32, ..SynthConfig::default() };
    let ds = Dataset::synthesize(&cfg).unwrap();
    for (split, n) in [(Split::Train, 300), (Split::Val, 50), (Split::Test, 50)] {
        let samples = ds.split(split);
        assert_eq!(samples.iter().filter(|s| s.label.is_anomaly()).count(), n);
        assert_eq!(samples.iter().filter(|s| !s.label.is_anomaly()).count(), n);
    }
}

#[test]
fn stains_are_much_more_saturated_than_background() {
    let cfg = SynthConfig::default();
    let (mut stain, mut stain_n, mut bg, mut bg_n) = (0.0, 0usize, 0.0, 0usize);
    for i in 0..20 {
        let s = synth_sample(&cfg, i, ClassLabel::Anomaly).unwrap();
        let hsv = rgb_to_hsv(&s.image).unwrap();
        for (p, (&in_stain, &in_shape)) in s.stain_mask.iter().zip(&s.shape_mask).enumerate() {
            let sat = hsv.data()[p * 3 + 1] as f64;
            if in_stain {
                stain += sat;
                stain_n += 1;
            } else if !in_shape {
                bg += sat;
                bg_n += 1;
            }
        }
    }
    let (stain, bg) = (stain / stain_n as f64, bg / bg_n as f64);
    assert!(stain - bg >= 30.0, "stain {stain:.1} background {bg:.1}");
}
