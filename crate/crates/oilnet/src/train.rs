use std::fmt::Write as _;

use leakspot_dataset::rng::{derive_seed, sample_rng};
use leakspot_dataset::{augment, AugmentConfig};
use leakspot_imageproc::PreprocessVariant;
use leakspot_tensor::{bce_with_logits, nadam_step, sigmoid_scalar, Mode, NadamConfig, Tensor};
use rand::seq::SliceRandom;

use crate::checkpoint::{Checkpoint, CheckpointMeta};
use crate::data::{images_to_batch, LabeledImage};
use crate::error::{OilnetError, Result};
use crate::metrics::ConfusionMatrix;
use crate::model::{label_for, Oilnet40};

const ORDER_STREAM: u64 = u64::MAX;
const DROPOUT_TAG: u64 = 0xD509;
const EVAL_BATCH: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: NadamConfig,
    pub augment: AugmentConfig,
    /// Preprocessing the inputs went through; recorded in the checkpoint.
    pub variant: PreprocessVariant,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch_size: 16,
            optimizer: NadamConfig::default(),
            augment: AugmentConfig::classifier_default(),
            variant: PreprocessVariant::Original,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(OilnetError::Config("epochs and batch size must be at least 1".into()));
        }
        self.optimizer.validate()?;
        self.augment.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    /// Accuracy of the training-mode predictions made while fitting.
    pub train_accuracy: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
    pub val_precision: f64,
    pub val_recall: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Loss of the very first mini-batch, before any update.
    pub initial_loss: f64,
    /// Mean loss of every optimizer step, in order.
    pub step_losses: Vec<f64>,
    pub epochs: Vec<EpochRecord>,
    /// 1-based epoch whose weights were kept.
    pub best_epoch: usize,
}

impl TrainReport {
    pub fn best(&self) -> &EpochRecord {
        &self.epochs[self.best_epoch - 1]
    }

    /// Tab-separated report, one row per epoch after a versioned header.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# leakspot train report v1\n");
        writeln!(out, "initial_loss\t{:.6}", self.initial_loss).unwrap();
        writeln!(out, "best_epoch\t{}", self.best_epoch).unwrap();
        out.push_str("epoch\ttrain_loss\ttrain_acc\tval_loss\tval_acc\tval_precision\tval_recall\n");
        for e in &self.epochs {
            writeln!(
                out,
                "{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}",
                e.epoch, e.train_loss, e.train_accuracy, e.val_loss, e.val_accuracy, e.val_precision, e.val_recall
            )
            .unwrap();
        }
        out
    }
}

/// Inference-mode loss and confusion counts over a labelled set.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub confusion: ConfusionMatrix,
    pub probabilities: Vec<f32>,
}

pub fn evaluate(model: &Oilnet40, data: &[LabeledImage]) -> Result<Evaluation> {
    let mut confusion = ConfusionMatrix::default();
    let mut probabilities = Vec::with_capacity(data.len());
    let mut loss = 0.0f64;
    for chunk in data.chunks(EVAL_BATCH) {
        let x = images_to_batch(chunk.iter().map(|s| &s.image))?;
        let logits = model.logits(&x)?;
        for (s, &z) in chunk.iter().zip(logits.data()) {
            loss += bce_with_logits(z, s.label.target())?.0 as f64;
            let p = sigmoid_scalar(z);
            probabilities.push(p);
            confusion.record(label_for(p), s.label);
        }
    }
    let loss = if data.is_empty() { 0.0 } else { loss / data.len() as f64 };
    Ok(Evaluation { loss, confusion, probabilities })
}

fn check_inputs(model: &Oilnet40, data: &[LabeledImage]) -> Result<()> {
    let spec = model.spec();
    if let Some(s) = data.iter().find(|s| {
        s.image.height() != spec.input_size || s.image.width() != spec.input_size || s.image.channels() != spec.input_channels
    }) {
        return Err(OilnetError::Config(format!(
            "sample of {}x{}x{} does not match the model input {}x{}x{}",
            s.image.height(),
            s.image.width(),
            s.image.channels(),
            spec.input_size,
            spec.input_size,
            spec.input_channels
        )));
    }
    Ok(())
}

/// Fits `model` with Nadam on shuffled mini-batches, augmenting training
/// samples only, and evaluates the validation set after every epoch. The
/// model ends up holding the weights of the epoch with the highest
/// validation accuracy (earliest on ties); those weights are also returned
/// as a checkpoint. Without validation data the last epoch is kept.
pub fn train(model: &mut Oilnet40, train: &[LabeledImage], val: &[LabeledImage], cfg: &TrainConfig) -> Result<(Checkpoint, TrainReport)> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(OilnetError::Config("training set is empty".into()));
    }
    if cfg.variant.output_channels() != model.spec().input_channels {
        return Err(OilnetError::Config(format!(
            "variant {} produces {} channels but the model expects {}",
            cfg.variant,
            cfg.variant.output_channels(),
            model.spec().input_channels
        )));
    }
    check_inputs(model, train)?;
    check_inputs(model, val)?;

    let mut step_losses = Vec::new();
    let mut epochs = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, Checkpoint)> = None;
    for epoch in 1..=cfg.epochs {
        let epoch_seed = derive_seed(cfg.seed, epoch as u64);
        let mut order: Vec<usize> = (0..train.len()).collect();
        order.shuffle(&mut sample_rng(epoch_seed, ORDER_STREAM));
        let (mut loss_sum, mut correct) = (0.0f64, 0usize);
        for (step, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let mut images = Vec::with_capacity(chunk.len());
            for &i in chunk {
                let (img, _) = augment(&train[i].image, None, &cfg.augment, &mut sample_rng(epoch_seed, i as u64))?;
                images.push(img);
            }
            let x = images_to_batch(&images)?;
            let mut dropout_rng = sample_rng(derive_seed(epoch_seed, DROPOUT_TAG), step as u64);
            let (logits, cache, stats) = model.forward(&x, Mode::Train, &mut dropout_rng)?;
            let m = chunk.len() as f32;
            let mut batch_loss = 0.0f64;
            let mut upstream = Vec::with_capacity(chunk.len());
            for (&i, &z) in chunk.iter().zip(logits.data()) {
                let (l, g) = bce_with_logits(z, train[i].label.target())?;
                batch_loss += l as f64;
                upstream.push(g / m);
                correct += (label_for(sigmoid_scalar(z)) == train[i].label) as usize;
            }
            let batch_loss = batch_loss / chunk.len() as f64;
            if !batch_loss.is_finite() {
                return Err(OilnetError::Diverged { epoch, step, loss: batch_loss as f32 });
            }
            model.backward(&cache, &Tensor::new(vec![chunk.len(), 1], upstream)?)?;
            model.commit_stats(stats);
            nadam_step(model.parameters_mut(), &cfg.optimizer).map_err(|_| OilnetError::Diverged {
                epoch,
                step,
                loss: batch_loss as f32,
            })?;
            loss_sum += batch_loss * chunk.len() as f64;
            step_losses.push(batch_loss);
        }
        let eval = evaluate(model, val)?;
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / train.len() as f64,
            train_accuracy: correct as f64 / train.len() as f64,
            val_loss: eval.loss,
            val_accuracy: eval.confusion.accuracy(),
            val_precision: eval.confusion.precision(),
            val_recall: eval.confusion.recall(),
        };
        let improved = match &best {
            None => true,
            Some((acc, _, _)) => val.is_empty() || record.val_accuracy > *acc,
        };
        if improved {
            best = Some((record.val_accuracy, epoch, Checkpoint::from_model(model, CheckpointMeta::default())));
        }
        epochs.push(record);
    }

    let (_, best_epoch, snapshot) = best.expect("at least one epoch ran");
    snapshot.restore_into(model)?;
    let report = TrainReport { initial_loss: step_losses[0], step_losses, epochs, best_epoch };
    let best_record = report.best();
    let meta = CheckpointMeta {
        seed: cfg.seed,
        epochs_run: cfg.epochs,
        best_epoch,
        variant: cfg.variant.name().to_string(),
        learning_rate: cfg.optimizer.learning_rate as f64,
        val_accuracy: best_record.val_accuracy,
        val_loss: best_record.val_loss,
    };
    Ok((Checkpoint::from_model(model, meta), report))
}
