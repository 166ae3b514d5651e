//! YOLO label files: one `class cx cy w h` line per box, coordinates
//! normalized to the image size.

use std::fmt::Write as _;
use std::path::Path;

use crate::bbox::BoundingBox;
use crate::error::{DatasetError, Result};

pub fn parse_yolo_label(text: &str) -> Result<Vec<BoundingBox>> {
    let mut boxes = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 5 {
            return Err(DatasetError::Parse { line, message: format!("expected 5 fields, found {}", fields.len()) });
        }
        let class_id = fields[0]
            .parse::<u32>()
            .map_err(|_| DatasetError::Parse { line, message: format!("class id {:?} is not a non-negative integer", fields[0]) })?;
        let mut v = [0.0f64; 4];
        for (slot, field) in v.iter_mut().zip(&fields[1..]) {
            *slot = field
                .parse::<f64>()
                .map_err(|_| DatasetError::Parse { line, message: format!("{field:?} is not a number") })?;
        }
        let b = BoundingBox::new(class_id, v[0], v[1], v[2], v[3])
            .map_err(|e| DatasetError::Parse { line, message: e.to_string() })?;
        boxes.push(b);
    }
    Ok(boxes)
}

/// Six decimal places per coordinate, one box per line.
pub fn write_yolo_label(boxes: &[BoundingBox]) -> String {
    let mut out = String::new();
    for b in boxes {
        writeln!(out, "{} {:.6} {:.6} {:.6} {:.6}", b.class_id, b.cx, b.cy, b.w, b.h).unwrap();
    }
    out
}

pub fn read_yolo_file(path: &Path) -> Result<Vec<BoundingBox>> {
    parse_yolo_label(&std::fs::read_to_string(path)?)
}

pub fn write_yolo_file(path: &Path, boxes: &[BoundingBox]) -> Result<()> {
    std::fs::write(path, write_yolo_label(boxes))?;
    Ok(())
}
