//! Classifier training and evaluation on a dataset directory, one
//! preprocessing variant at a time.

use std::fmt::Write as _;

use leakspot_dataset::{AugmentConfig, Dataset, Split};
use leakspot_imageproc::{ClaheConfig, PreprocessVariant};
use leakspot_oilnet::{
    evaluate, random_search, train, Checkpoint, ConfusionMatrix, InputPipeline, LabeledImage, Oilnet40, Oilnet40Spec, SearchOutcome,
    SearchSpace, TrainConfig, TrainReport, DEFAULT_CROP_MARGIN,
};

use crate::error::Result;
use crate::frame::check_compatibility;

/// Everything needed to turn a dataset into a trained classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierOptions {
    pub variant: PreprocessVariant,
    pub input_size: usize,
    pub dense_units: [usize; 2],
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f32,
    pub augment: bool,
    pub seed: u64,
    pub clahe: ClaheConfig,
    pub crop_margin: f64,
}

impl Default for ClassifierOptions {
    fn default() -> Self {
        let train = TrainConfig::default();
        Self {
            variant: PreprocessVariant::Original,
            input_size: Oilnet40Spec::default().input_size,
            dense_units: Oilnet40Spec::default().dense_units,
            epochs: train.epochs,
            batch_size: train.batch_size,
            learning_rate: train.optimizer.learning_rate,
            augment: true,
            seed: train.seed,
            clahe: ClaheConfig::default(),
            crop_margin: DEFAULT_CROP_MARGIN,
        }
    }
}

impl ClassifierOptions {
    pub fn spec(&self) -> Oilnet40Spec {
        Oilnet40Spec {
            input_channels: self.variant.output_channels(),
            dense_units: self.dense_units,
            ..Oilnet40Spec::with_input_size(self.input_size)
        }
    }

    pub fn input_pipeline(&self) -> InputPipeline {
        InputPipeline { variant: self.variant, clahe: self.clahe, input_size: self.input_size, crop_margin: self.crop_margin }
    }

    pub fn train_config(&self) -> TrainConfig {
        let mut cfg = TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            variant: self.variant,
            seed: self.seed,
            augment: if self.augment { AugmentConfig::classifier_default() } else { AugmentConfig::identity() },
            ..TrainConfig::default()
        };
        cfg.optimizer.learning_rate = self.learning_rate;
        cfg
    }

    /// Classifier inputs for one split, cropped around each sample's label box.
    pub fn prepare(&self, ds: &Dataset, split: Split) -> Result<Vec<LabeledImage>> {
        Ok(self.input_pipeline().prepare_samples(&ds.split(split))?)
    }
}

/// Builds a model from `opts.seed` and trains it on the train split,
/// selecting on the validation split.
pub fn train_classifier(ds: &Dataset, opts: &ClassifierOptions) -> Result<(Checkpoint, TrainReport)> {
    let train_set = opts.prepare(ds, Split::Train)?;
    let val_set = opts.prepare(ds, Split::Val)?;
    let mut model = Oilnet40::build(&opts.spec(), opts.seed)?;
    Ok(train(&mut model, &train_set, &val_set, &opts.train_config())?)
}

pub fn tune_classifier(ds: &Dataset, opts: &ClassifierOptions, space: &SearchSpace) -> Result<SearchOutcome> {
    let train_set = opts.prepare(ds, Split::Train)?;
    let val_set = opts.prepare(ds, Split::Val)?;
    Ok(random_search(space, &opts.spec(), &train_set, &val_set, &opts.train_config())?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariantResult {
    pub variant: PreprocessVariant,
    pub confusion: ConfusionMatrix,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierReport {
    pub split: Split,
    pub results: Vec<VariantResult>,
}

impl ClassifierReport {
    pub fn get(&self, variant: PreprocessVariant) -> Option<&VariantResult> {
        self.results.iter().find(|r| r.variant == variant)
    }

    /// Versioned summary table followed by one confusion matrix per variant.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# leakspot classifier evaluation v1\n");
        writeln!(out, "split\t{}", self.split).unwrap();
        out.push_str("variant\ttp\tfp\tfn\ttn\taccuracy\tprecision\trecall\tloss\n");
        for r in &self.results {
            let c = &r.confusion;
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}",
                r.variant,
                c.tp,
                c.fp,
                c.fn_,
                c.tn,
                c.accuracy(),
                c.precision(),
                c.recall(),
                r.loss
            )
            .unwrap();
        }
        for r in &self.results {
            writeln!(out, "\n[{}]\n{}", r.variant, r.confusion).unwrap();
        }
        out
    }
}

/// Scores each checkpoint on `split` after preprocessing with its own
/// variant. Every checkpoint must match its variant's channel count.
pub fn evaluate_variants(
    ds: &Dataset,
    split: Split,
    models: &[(PreprocessVariant, Checkpoint)],
    clahe: ClaheConfig,
    crop_margin: f64,
) -> Result<ClassifierReport> {
    for (variant, ckpt) in models {
        check_compatibility(*variant, &ckpt.spec)?;
    }
    let mut results = Vec::with_capacity(models.len());
    for (variant, ckpt) in models {
        let model = ckpt.to_model()?;
        let pipeline = InputPipeline { variant: *variant, clahe, input_size: ckpt.spec.input_size, crop_margin };
        let data = pipeline.prepare_samples(&ds.split(split))?;
        let eval = evaluate(&model, &data)?;
        results.push(VariantResult { variant: *variant, confusion: eval.confusion, loss: eval.loss });
    }
    Ok(ClassifierReport { split, results })
}
