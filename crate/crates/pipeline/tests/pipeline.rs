use std::collections::BTreeMap;

use leakspot_dataset::{synth_sample, BoundingBox, ClassLabel, SynthConfig};
use leakspot_detection::{Detection, DetectorSource, GroundTruth};
use leakspot_imageproc::{ClaheConfig, ImageU8, PreprocessVariant};
use leakspot_oilnet::{save_checkpoint, Checkpoint, CheckpointMeta, Oilnet40, Oilnet40Spec};
use leakspot_pipeline::{
    run_stream, without_timing, DetectorConfig, FrameLabels, FrameOutcome, Pipeline, PipelineConfig, PipelineError, Result,
};

fn spec(channels: usize) -> Oilnet40Spec {
    Oilnet40Spec { input_channels: channels, dense_units: [16, 8], ..Oilnet40Spec::with_input_size(32) }
}

/// A model whose output is the constant logit `bias`.
fn constant_model(channels: usize, bias: f32) -> Oilnet40 {
    let mut m = Oilnet40::build(&spec(channels), 1).unwrap();
    m.output.weights.value.fill(0.0);
    m.output.bias.value.fill(bias);
    m
}

fn frames(n: usize) -> Vec<(String, ImageU8, Vec<BoundingBox>, ClassLabel)> {
    let cfg = SynthConfig { normal: n / 2, anomaly: n - n / 2, height: 64, width: 64, ..SynthConfig::default() };
    cfg.labels()
        .into_iter()
        .enumerate()
        .map(|(i, label)| {
            let s = synth_sample(&cfg, i, label).unwrap();
            (SynthConfig::stem(i), s.image, s.boxes, label)
        })
        .collect()
}

fn fixture(frames: &[(String, ImageU8, Vec<BoundingBox>, ClassLabel)]) -> DetectorSource {
    DetectorSource::Fixture(frames.iter().map(|(id, _, b, _)| (id.clone(), b.clone())).collect())
}

fn feed(frames: &[(String, ImageU8, Vec<BoundingBox>, ClassLabel)]) -> impl Iterator<Item = Result<(String, ImageU8)>> + '_ {
    frames.iter().map(|(id, img, _, _)| Ok((id.clone(), img.clone())))
}

#[test]
fn every_mismatched_variant_and_checkpoint_pair_is_rejected() {
    for variant in PreprocessVariant::ALL {
        for channels in [1, 3] {
            let result = Pipeline::new(constant_model(channels, 0.0), DetectorSource::File(BTreeMap::new()), variant, ClaheConfig::default(), 0.05);
            assert_eq!(result.is_ok(), variant.output_channels() == channels, "{variant} with {channels} channels");
            if let Err(e) = result {
                assert!(matches!(e, PipelineError::Config(_)));
            }
        }
    }
}

#[test]
fn missing_detection_skips_classification() {
    let data = frames(2);
    let p = Pipeline::new(constant_model(3, 5.0), DetectorSource::File(BTreeMap::new()), PreprocessVariant::Original, ClaheConfig::default(), 0.05)
        .unwrap();
    let r = p.run_frame(&data[0].0, &data[0].1).unwrap();
    assert_eq!(r.outcome, FrameOutcome::NoDetection);
    assert_eq!(r.detection, None);
    assert_eq!(r.probability(), None);
    assert_eq!(r.predicted_label(), ClassLabel::Normal);
}

#[test]
fn same_frame_gives_same_result_apart_from_timings() {
    let data = frames(2);
    let p = Pipeline::new(Oilnet40::build(&spec(3), 4).unwrap(), fixture(&data), PreprocessVariant::Clahe, ClaheConfig::default(), 0.05).unwrap();
    let a = p.run_frame(&data[1].0, &data[1].1).unwrap();
    let b = p.run_frame(&data[1].0, &data[1].1).unwrap();
    assert_eq!(a.fields(), b.fields());
    assert_eq!((a.detection.clone(), a.outcome), (b.detection.clone(), b.outcome));
    assert_eq!(a.detection.unwrap().bbox, data[1].2[0]);
    assert!(matches!(a.outcome, FrameOutcome::Classified { .. }));
}

#[test]
fn highest_scoring_detection_is_classified() {
    let data = frames(1);
    let (id, img) = (&data[0].0, &data[0].1);
    let low = Detection::new(id.as_str(), BoundingBox::new(0, 0.2, 0.2, 0.2, 0.2).unwrap(), 0.4).unwrap();
    let high = Detection::new(id.as_str(), BoundingBox::new(0, 0.7, 0.7, 0.2, 0.2).unwrap(), 0.9).unwrap();
    let source = DetectorSource::from_detections(vec![low, high.clone()]);
    let p = Pipeline::new(constant_model(1, -3.0), source, PreprocessVariant::GrayThenClahe, ClaheConfig::default(), 0.0).unwrap();
    let r = p.run_frame(id, img).unwrap();
    assert_eq!(r.detection, Some(high));
    assert_eq!(r.predicted_label(), ClassLabel::Normal);
}

#[test]
fn empty_stream_reports_zero_fps() {
    let p = Pipeline::new(constant_model(3, 0.0), DetectorSource::File(BTreeMap::new()), PreprocessVariant::Original, ClaheConfig::default(), 0.05)
        .unwrap();
    let report = run_stream(&p, std::iter::empty(), None).unwrap();
    assert!(report.frames.is_empty());
    assert_eq!(report.fps(), 0.0);
    assert_eq!(report.confusion.total(), 0);
    assert!(report.to_text().contains("frames\t0\n"));
}

#[test]
fn correct_predictions_on_every_labelled_frame_give_accuracy_one() {
    let data: Vec<_> = frames(12).into_iter().filter(|f| f.3 == ClassLabel::Anomaly).collect();
    let labels: FrameLabels = data.iter().map(|f| (f.0.clone(), f.3)).collect();
    let p = Pipeline::new(constant_model(3, 4.0), fixture(&data), PreprocessVariant::Original, ClaheConfig::default(), 0.05).unwrap();
    let report = run_stream(&p, feed(&data), Some(&labels)).unwrap();
    assert_eq!(report.confusion.accuracy(), 1.0);
    assert_eq!(report.confusion.tp, data.len());
    assert!(report.fps() > 0.0);
}

#[test]
fn counts_cover_labelled_frames_and_missed_detections_count_as_normal() {
    let data = frames(10);
    let mut gt: GroundTruth = data.iter().map(|f| (f.0.clone(), f.2.clone())).collect();
    let dropped: Vec<String> = data.iter().filter(|f| f.3 == ClassLabel::Anomaly).take(2).map(|f| f.0.clone()).collect();
    for id in &dropped {
        gt.remove(id);
    }
    // Only 7 of 10 frames carry a label.
    let labels: FrameLabels = data.iter().take(7).map(|f| (f.0.clone(), f.3)).collect();
    let p = Pipeline::new(constant_model(3, 4.0), DetectorSource::Fixture(gt), PreprocessVariant::Original, ClaheConfig::default(), 0.05).unwrap();
    let report = run_stream(&p, feed(&data), Some(&labels)).unwrap();
    assert_eq!(report.labeled(), 7);
    assert_eq!(report.confusion.total(), 7);
    assert_eq!(report.no_detection(), 2);
    for (f, label) in report.frames.iter().zip(&report.labels) {
        if dropped.contains(&f.image_id) {
            assert_eq!(f.predicted_label(), ClassLabel::Normal);
        } else {
            assert_eq!(f.predicted_label(), ClassLabel::Anomaly);
        }
        assert_eq!(*label, labels.get(&f.image_id).copied());
    }
}

#[test]
fn reports_differ_only_in_the_timing_line() {
    let data = frames(6);
    let labels: FrameLabels = data.iter().map(|f| (f.0.clone(), f.3)).collect();
    let p = Pipeline::new(Oilnet40::build(&spec(1), 2).unwrap(), fixture(&data), PreprocessVariant::ClaheThenGray, ClaheConfig::default(), 0.05)
        .unwrap();
    let a = run_stream(&p, feed(&data), Some(&labels)).unwrap().to_text();
    let b = run_stream(&p, feed(&data), Some(&labels)).unwrap().to_text();
    assert_eq!(a.lines().filter(|l| l.starts_with("timing")).count(), 1);
    assert_eq!(without_timing(&a), without_timing(&b));
    assert_eq!(without_timing(&a).lines().count(), a.lines().count() - 1);
}

#[test]
fn config_builds_from_files_and_checks_input_size() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt_path = dir.path().join("m.onet");
    let meta = CheckpointMeta { variant: "gray-clahe".into(), ..CheckpointMeta::default() };
    save_checkpoint(&Checkpoint::from_model(&constant_model(1, 0.0), meta), &ckpt_path).unwrap();
    let labels_dir = dir.path().join("labels");
    std::fs::create_dir(&labels_dir).unwrap();
    std::fs::write(labels_dir.join("a.txt"), "0 0.5 0.5 0.5 0.5\n").unwrap();

    let mut cfg = PipelineConfig::new(DetectorConfig::Fixture { labels_dir }, ckpt_path);
    let p = cfg.build().unwrap();
    assert_eq!(p.variant(), PreprocessVariant::GrayThenClahe);
    let r = p.run_frame("a", &ImageU8::filled(40, 40, 3, 90).unwrap()).unwrap();
    assert!(matches!(r.outcome, FrameOutcome::Classified { .. }));

    cfg.input_size = Some(64);
    assert!(matches!(cfg.build(), Err(PipelineError::Config(_))));
    cfg.input_size = Some(32);
    cfg.variant = Some(PreprocessVariant::Clahe);
    assert!(matches!(cfg.build(), Err(PipelineError::Config(_))));
    cfg.variant = None;
    cfg.detector = DetectorConfig::File { path: dir.path().join("missing.txt") };
    assert!(cfg.build().is_err());
}
