use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use leakspot_dataset::{synth_generate, Dataset, Split, SynthConfig};
use leakspot_detection::{map_eval_default, read_detections, GroundTruth};
use leakspot_imageproc::io::read_image;
use leakspot_imageproc::{ClaheConfig, PreprocessVariant, TileGrid};
use leakspot_oilnet::{load_checkpoint, save_checkpoint, Checkpoint, SearchSpace, DEFAULT_CROP_MARGIN};
use leakspot_pipeline::{
    evaluate_variants, frame_paths, read_frame_labels, read_frames, run_stream, train_classifier, tune_classifier, ClassifierOptions,
    DetectorConfig, PipelineConfig, PipelineError, Result, Settings,
};

/// Oil-leak spotting on damper images: synthetic data, classifier training
/// and evaluation, detection scoring and the frame pipeline.
#[derive(Parser)]
#[command(name = "leakspot", version)]
struct Cli {
    /// Flat TOML file of settings; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset directory.
    GenData(GenData),
    /// Train a classifier on a dataset and write its checkpoint.
    Train(TrainArgs),
    /// Search dense widths and learning rates.
    Tune(TuneArgs),
    /// Confusion matrices for one checkpoint per preprocessing variant.
    EvalCls(EvalCls),
    /// Score a detections file against dataset labels.
    EvalDet(EvalDet),
    /// Run the pipeline on a single image.
    Infer(Infer),
    /// Run the pipeline over a directory of frames.
    Stream(Stream),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    seed: Option<u64>,
    /// Output file or directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenData {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    normal: Option<usize>,
    #[arg(long)]
    anomaly: Option<usize>,
    /// Side of the square images.
    #[arg(long)]
    image_size: Option<usize>,
}

#[derive(Args)]
struct ModelArgs {
    /// Dataset directory.
    #[arg(long)]
    data: Option<PathBuf>,
    /// original, clahe, gray-clahe or clahe-gray.
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f32>,
    #[arg(long)]
    input_size: Option<usize>,
    #[arg(long)]
    dense1: Option<usize>,
    #[arg(long)]
    dense2: Option<usize>,
    /// Disable training-time augmentation.
    #[arg(long)]
    no_augment: bool,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    model: ModelArgs,
    /// Where to write the training report.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct TuneArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_delimiter = ',')]
    search_dense1: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    search_dense2: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    search_learning_rates: Option<Vec<f32>>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    trial_epochs: Option<usize>,
}

#[derive(Args)]
struct EvalCls {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    data: Option<PathBuf>,
    /// Directory holding `<variant>.onet` checkpoints.
    #[arg(long)]
    models: Option<PathBuf>,
    /// Evaluate only this variant.
    #[arg(long)]
    variant: Option<String>,
    /// A checkpoint for `--variant`, instead of `--models`.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    split: Option<String>,
}

#[derive(Args)]
struct EvalDet {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    detections: Option<PathBuf>,
    /// train, val, test or all.
    #[arg(long)]
    split: Option<String>,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Defaults to the variant recorded in the checkpoint.
    #[arg(long)]
    variant: Option<String>,
    /// fixture or file.
    #[arg(long)]
    detector: Option<String>,
    /// YOLO label directory for the fixture detector.
    #[arg(long)]
    labels_dir: Option<PathBuf>,
    /// Detections file for the file detector.
    #[arg(long)]
    detections: Option<PathBuf>,
}

#[derive(Args)]
struct Infer {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[arg(long)]
    image: Option<PathBuf>,
}

#[derive(Args)]
struct Stream {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// A directory of frames, or a dataset directory with `images/`.
    #[arg(long)]
    frames: Option<PathBuf>,
    /// `classes.csv` with the true label of each frame.
    #[arg(long)]
    labels: Option<PathBuf>,
}

fn required<T>(value: Option<T>, name: &str) -> Result<T> {
    value.ok_or_else(|| PipelineError::Config(format!("missing required setting `{name}`")))
}

fn variant(value: Option<&str>) -> Result<Option<PreprocessVariant>> {
    Ok(value.map(str::parse).transpose()?)
}

fn clahe(s: &Settings) -> Result<ClaheConfig> {
    let mut cfg = ClaheConfig::default();
    if let Some(t) = s.clahe_tiles {
        cfg.grid = TileGrid { rows: t, cols: t };
    }
    if let Some(c) = s.clip_limit {
        cfg.clip_limit = c;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Writes the report file, then echoes the report. A closed stdout (for
/// example a pipe into `head`) is not an error.
fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    if let Some(path) = out {
        std::fs::write(path, text)?;
    }
    say(text)
}

fn say(text: &str) -> Result<()> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn classifier_options(m: &ModelArgs, common: &Common, s: &Settings) -> Result<ClassifierOptions> {
    let d = ClassifierOptions::default();
    Ok(ClassifierOptions {
        variant: variant(m.variant.as_deref().or(s.variant.as_deref()))?.unwrap_or(d.variant),
        input_size: m.input_size.or(s.input_size).unwrap_or(d.input_size),
        dense_units: [m.dense1.or(s.dense1).unwrap_or(d.dense_units[0]), m.dense2.or(s.dense2).unwrap_or(d.dense_units[1])],
        epochs: m.epochs.or(s.epochs).unwrap_or(d.epochs),
        batch_size: m.batch_size.or(s.batch_size).unwrap_or(d.batch_size),
        learning_rate: m.learning_rate.or(s.learning_rate).unwrap_or(d.learning_rate),
        augment: !m.no_augment && s.augment.unwrap_or(d.augment),
        seed: common.seed.or(s.seed).unwrap_or(d.seed),
        clahe: clahe(s)?,
        crop_margin: s.crop_margin.unwrap_or(d.crop_margin),
    })
}

fn dataset(data: Option<&PathBuf>, s: &Settings) -> Result<Dataset> {
    Ok(Dataset::load(required(data.or(s.data.as_ref()), "data")?)?)
}

fn gen_data(a: &GenData, s: &Settings) -> Result<()> {
    let d = SynthConfig::default();
    let size = a.image_size.or(s.image_size);
    let cfg = SynthConfig {
        normal: a.normal.or(s.normal).unwrap_or(d.normal),
        anomaly: a.anomaly.or(s.anomaly).unwrap_or(d.anomaly),
        height: size.unwrap_or(d.height),
        width: size.unwrap_or(d.width),
        seed: a.common.seed.or(s.seed).unwrap_or(d.seed),
        ..d
    };
    let out = required(a.common.out.as_ref().or(s.out.as_ref()), "out")?;
    let ds = synth_generate(&cfg, out)?;
    let mut text = format!("# leakspot dataset v1\nroot\t{}\nseed\t{}\n", out.display(), cfg.seed);
    for split in Split::ALL {
        let samples = ds.split(split);
        let anomalies = samples.iter().filter(|x| x.label.is_anomaly()).count();
        text.push_str(&format!("{split}\tnormal={}\tanomaly={anomalies}\n", samples.len() - anomalies));
    }
    say(&text)
}

fn train(a: &TrainArgs, s: &Settings) -> Result<()> {
    let opts = classifier_options(&a.model, &a.common, s)?;
    let ds = dataset(a.model.data.as_ref(), s)?;
    let out = required(a.common.out.as_ref().or(s.out.as_ref()), "out")?;
    let (ckpt, report) = train_classifier(&ds, &opts)?;
    save_checkpoint(&ckpt, out)?;
    emit(&report.to_text(), a.report.as_deref().or(s.report.as_deref()))?;
    say(&format!("checkpoint\t{}\n", out.display()))
}

fn tune(a: &TuneArgs, s: &Settings) -> Result<()> {
    let opts = classifier_options(&a.model, &a.common, s)?;
    let ds = dataset(a.model.data.as_ref(), s)?;
    let space = SearchSpace {
        dense1: a.search_dense1.clone().or(s.search_dense1.clone()).unwrap_or_else(|| vec![64, 200, 400]),
        dense2: a.search_dense2.clone().or(s.search_dense2.clone()).unwrap_or_else(|| vec![32, 64]),
        learning_rates: a.search_learning_rates.clone().or(s.search_learning_rates.clone()).unwrap_or_else(|| vec![1e-4, 1e-3, 1e-2]),
        budget: a.budget.or(s.budget).unwrap_or(4),
        trial_epochs: a.trial_epochs.or(s.trial_epochs).unwrap_or(3),
        seed: opts.seed,
    };
    let outcome = tune_classifier(&ds, &opts, &space)?;
    emit(&outcome.to_text(), a.common.out.as_deref().or(s.out.as_deref()))
}

fn eval_cls(a: &EvalCls, s: &Settings) -> Result<()> {
    let ds = dataset(a.data.as_ref(), s)?;
    let split: Split = a.split.as_deref().or(s.split.as_deref()).unwrap_or("test").parse()?;
    let only = variant(a.variant.as_deref().or(s.variant.as_deref()))?;
    let mut models: Vec<(PreprocessVariant, Checkpoint)> = Vec::new();
    if let Some(path) = a.checkpoint.as_ref().or(s.checkpoint.as_ref()) {
        let ckpt = load_checkpoint(path)?;
        let v = match only {
            Some(v) => v,
            None => ckpt.meta.variant.parse()?,
        };
        models.push((v, ckpt));
    } else {
        let dir = required(a.models.as_ref().or(s.models.as_ref()), "models")?;
        for v in only.map_or(PreprocessVariant::ALL.to_vec(), |v| vec![v]) {
            models.push((v, load_checkpoint(&dir.join(format!("{v}.onet")))?));
        }
    }
    let report = evaluate_variants(&ds, split, &models, clahe(s)?, s.crop_margin.unwrap_or(DEFAULT_CROP_MARGIN))?;
    emit(&report.to_text(), a.common.out.as_deref().or(s.out.as_deref()))
}

fn eval_det(a: &EvalDet, s: &Settings) -> Result<()> {
    let ds = dataset(a.data.as_ref(), s)?;
    let dets = read_detections(required(a.detections.as_ref().or(s.detections.as_ref()), "detections")?)?;
    let split = a.split.as_deref().or(s.split.as_deref()).unwrap_or("test");
    let samples = if split == "all" { ds.samples.iter().collect() } else { ds.split(split.parse()?) };
    let gt: GroundTruth = samples.iter().map(|x| (x.stem.clone(), x.boxes.clone())).collect();
    let ids: std::collections::BTreeSet<&str> = gt.keys().map(String::as_str).collect();
    let dets: Vec<_> = dets.into_iter().filter(|d| ids.contains(d.image_id.as_str())).collect();
    let result = map_eval_default(&dets, &gt)?;
    emit(&result.to_text(), a.common.out.as_deref().or(s.out.as_deref()))
}

fn pipeline_config(p: &PipelineArgs, s: &Settings, default_labels: Option<PathBuf>) -> Result<PipelineConfig> {
    let detector = match p.detector.as_deref().or(s.detector.as_deref()).unwrap_or("fixture") {
        "fixture" => DetectorConfig::Fixture {
            labels_dir: required(p.labels_dir.clone().or(s.labels_dir.clone()).or(default_labels), "labels_dir")?,
        },
        "file" => DetectorConfig::File { path: required(p.detections.clone().or(s.detections.clone()), "detections")? },
        other => return Err(PipelineError::Config(format!("unknown detector {other:?} (expected fixture or file)"))),
    };
    let mut cfg = PipelineConfig::new(detector, required(p.checkpoint.clone().or(s.checkpoint.clone()), "checkpoint")?);
    cfg.variant = variant(p.variant.as_deref().or(s.variant.as_deref()))?;
    cfg.clahe = clahe(s)?;
    cfg.crop_margin = s.crop_margin.unwrap_or(DEFAULT_CROP_MARGIN);
    cfg.input_size = s.input_size;
    Ok(cfg)
}

fn infer(a: &Infer, s: &Settings) -> Result<()> {
    let path = required(a.image.as_ref().or(s.image.as_ref()), "image")?;
    let default_labels = path.parent().and_then(Path::parent).map(|root| root.join("labels")).filter(|d| d.is_dir());
    let pipeline = pipeline_config(&a.pipeline, s, default_labels)?.build()?;
    let id = path.file_stem().and_then(|x| x.to_str()).unwrap_or_default();
    let result = pipeline.run_frame(id, &read_image(path)?)?;
    emit(&result.to_text(), a.common.out.as_deref().or(s.out.as_deref()))
}

fn stream(a: &Stream, s: &Settings) -> Result<()> {
    let root = required(a.frames.as_ref().or(s.frames.as_ref()), "frames")?;
    let (frames_dir, dataset_root) = if root.join("images").is_dir() { (root.join("images"), Some(root)) } else { (root.clone(), None) };
    let pipeline = pipeline_config(&a.pipeline, s, dataset_root.map(|r| r.join("labels")))?.build()?;
    let labels_path = a.labels.clone().or(s.labels.clone()).or_else(|| dataset_root.map(|r| r.join("classes.csv")));
    let labels = labels_path.map(|p| read_frame_labels(&p)).transpose()?;
    let paths = frame_paths(&frames_dir)?;
    let report = run_stream(&pipeline, read_frames(&paths), labels.as_ref())?;
    emit(&report.to_text(), a.common.out.as_deref().or(s.out.as_deref()))?;
    say(&format!("\n{}\n", report.confusion))
}

fn run(cli: &Cli) -> Result<()> {
    let settings = match &cli.config {
        Some(path) => Settings::load(path)?,
        None => Settings::default(),
    };
    match &cli.command {
        Command::GenData(a) => gen_data(a, &settings),
        Command::Train(a) => train(a, &settings),
        Command::Tune(a) => tune(a, &settings),
        Command::EvalCls(a) => eval_cls(a, &settings),
        Command::EvalDet(a) => eval_det(a, &settings),
        Command::Infer(a) => infer(a, &settings),
        Command::Stream(a) => stream(a, &settings),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
