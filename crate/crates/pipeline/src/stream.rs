use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use leakspot_dataset::{read_classes_csv, ClassLabel};
use leakspot_imageproc::io::{is_image_path, read_image};
use leakspot_imageproc::ImageU8;
use leakspot_oilnet::ConfusionMatrix;

use crate::error::Result;
use crate::frame::{ms, FrameLabels, FrameResult, Pipeline, StageTimings};

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub frames: Vec<FrameResult>,
    /// Ground truth per frame, where known.
    pub labels: Vec<Option<ClassLabel>>,
    /// Over labelled frames only; NoDetection counts as a Normal prediction.
    pub confusion: ConfusionMatrix,
    pub elapsed: Duration,
}

impl RunReport {
    pub fn no_detection(&self) -> usize {
        self.frames.iter().filter(|f| f.detection.is_none()).count()
    }

    pub fn labeled(&self) -> usize {
        self.labels.iter().flatten().count()
    }

    /// Frames per wall-clock second; 0 when nothing ran.
    pub fn fps(&self) -> f64 {
        let secs = self.elapsed.as_secs_f64();
        if self.frames.is_empty() || secs <= 0.0 {
            0.0
        } else {
            self.frames.len() as f64 / secs
        }
    }

    pub fn stage_totals(&self) -> StageTimings {
        let mut total = StageTimings::default();
        for f in &self.frames {
            total += f.timings;
        }
        total
    }

    /// Versioned report. Every wall-clock quantity sits on the single line
    /// starting with `timing`, so two runs differ only there.
    pub fn to_text(&self) -> String {
        let t = self.stage_totals();
        let c = &self.confusion;
        let mut out = String::from("# leakspot run report v1\n");
        writeln!(
            out,
            "timing\telapsed_s={:.3}\tfps={:.3}\tdetect_ms={:.3}\tcrop_ms={:.3}\tpreprocess_ms={:.3}\tclassify_ms={:.3}",
            self.elapsed.as_secs_f64(),
            self.fps(),
            ms(t.detect),
            ms(t.crop),
            ms(t.preprocess),
            ms(t.classify)
        )
        .unwrap();
        writeln!(out, "frames\t{}", self.frames.len()).unwrap();
        writeln!(out, "no_detection\t{}", self.no_detection()).unwrap();
        writeln!(out, "labeled\t{}", self.labeled()).unwrap();
        writeln!(out, "tp\t{}\nfp\t{}\nfn\t{}\ntn\t{}", c.tp, c.fp, c.fn_, c.tn).unwrap();
        writeln!(out, "accuracy\t{:.6}\nprecision\t{:.6}\nrecall\t{:.6}", c.accuracy(), c.precision(), c.recall()).unwrap();
        out.push_str("id\tstatus\tprobability\tlabel\tscore\tcx\tcy\tw\th\tactual\n");
        for (f, label) in self.frames.iter().zip(&self.labels) {
            let actual = label.map_or("-", |l| l.name());
            writeln!(out, "{}\t{actual}", f.fields()).unwrap();
        }
        out
    }
}

/// The report text with the timing line removed.
pub fn without_timing(report: &str) -> String {
    report.lines().filter(|l| !l.starts_with("timing\t")).map(|l| format!("{l}\n")).collect()
}

/// Runs every frame in order and scores labelled frames.
pub fn run_stream<I>(pipeline: &Pipeline, frames: I, labels: Option<&FrameLabels>) -> Result<RunReport>
where
    I: IntoIterator<Item = Result<(String, ImageU8)>>,
{
    let start = Instant::now();
    let mut report = RunReport { frames: Vec::new(), labels: Vec::new(), confusion: ConfusionMatrix::default(), elapsed: Duration::ZERO };
    for frame in frames {
        let (id, image) = frame?;
        let result = pipeline.run_frame(&id, &image)?;
        let actual = labels.and_then(|l| l.get(&id).copied());
        if let Some(actual) = actual {
            report.confusion.record(result.predicted_label(), actual);
        }
        report.frames.push(result);
        report.labels.push(actual);
    }
    report.elapsed = start.elapsed();
    Ok(report)
}

/// Image files of `dir` in lexicographic order of file name.
pub fn frame_paths(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_file() && is_image_path(&path) {
            paths.push(path);
        }
    }
    paths.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(paths)
}

/// Lazily decodes frames, keyed by file stem.
pub fn read_frames(paths: &[PathBuf]) -> impl Iterator<Item = Result<(String, ImageU8)>> + '_ {
    paths.iter().map(|p| {
        let id = p.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        Ok((id, read_image(p)?))
    })
}

pub fn read_frame_labels(path: &Path) -> Result<FrameLabels> {
    Ok(read_classes_csv(&std::fs::read_to_string(path)?)?.into_iter().collect())
}
