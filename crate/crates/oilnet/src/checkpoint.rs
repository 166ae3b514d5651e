//! Checkpoint files.
//!
//! ```text
//! magic        7 bytes   "ONET40\0"
//! version      u16 LE    currently 1
//! header_len   u32 LE    byte length of the JSON header
//! header       JSON      {"spec", "metadata", "tensors": [{"name", "shape", "offset", "length"}]}
//! data         f32 LE    tensors back to back in table order; offsets are
//!                        bytes from the start of this section
//! ```

use std::path::Path;

use leakspot_tensor::Tensor;
use serde::{Deserialize, Serialize};

use crate::error::{OilnetError, Result};
use crate::model::Oilnet40;
use crate::spec::Oilnet40Spec;

pub const MAGIC: &[u8; 7] = b"ONET40\0";
pub const FORMAT_VERSION: u16 = 1;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub seed: u64,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub variant: String,
    pub learning_rate: f64,
    pub val_accuracy: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub spec: Oilnet40Spec,
    pub meta: CheckpointMeta,
    /// Trainable parameters followed by batch-norm running statistics, in the
    /// model's canonical order.
    pub tensors: Vec<(String, Tensor)>,
}

#[derive(Serialize, Deserialize)]
struct TableEntry {
    name: String,
    shape: Vec<usize>,
    offset: usize,
    length: usize,
}

#[derive(Serialize, Deserialize)]
struct Header {
    spec: Oilnet40Spec,
    metadata: CheckpointMeta,
    tensors: Vec<TableEntry>,
}

fn bad(msg: impl Into<String>) -> OilnetError {
    OilnetError::Checkpoint(msg.into())
}

impl Checkpoint {
    pub fn from_model(model: &Oilnet40, meta: CheckpointMeta) -> Self {
        let mut tensors: Vec<(String, Tensor)> = model.named_parameters().into_iter().map(|(n, p)| (n, p.value.clone())).collect();
        tensors.extend(model.named_buffers().into_iter().map(|(n, t)| (n, t.clone())));
        Self { spec: model.spec().clone(), meta, tensors }
    }

    /// Copies the stored tensors into `model`, which must have the same
    /// architecture. Nothing is written unless every name and shape matches.
    pub fn restore_into(&self, model: &mut Oilnet40) -> Result<()> {
        if model.spec() != &self.spec {
            return Err(bad("checkpoint architecture differs from the model"));
        }
        let expected: Vec<(String, Vec<usize>)> = model
            .named_parameters()
            .into_iter()
            .map(|(n, p)| (n, p.shape().to_vec()))
            .chain(model.named_buffers().into_iter().map(|(n, t)| (n, t.shape().to_vec())))
            .collect();
        if expected.len() != self.tensors.len() {
            return Err(bad(format!("expected {} tensors, found {}", expected.len(), self.tensors.len())));
        }
        for ((name, shape), (found, t)) in expected.iter().zip(&self.tensors) {
            if name != found {
                return Err(bad(format!("tensor {found:?} found where {name:?} was expected")));
            }
            if t.shape() != shape.as_slice() {
                return Err(bad(format!("tensor {name:?} has shape {:?}, expected {shape:?}", t.shape())));
            }
        }
        let mut stored = self.tensors.iter().map(|(_, t)| t);
        for p in model.parameters_mut() {
            p.value = stored.next().expect("count checked").clone();
        }
        for b in model.buffers_mut() {
            *b = stored.next().expect("count checked").clone();
        }
        Ok(())
    }

    pub fn to_model(&self) -> Result<Oilnet40> {
        let mut model = Oilnet40::build(&self.spec, 0)?;
        self.restore_into(&mut model)?;
        Ok(model)
    }

    pub fn encode(&self) -> Result<Vec<u8>> {
        let mut offset = 0;
        let tensors = self
            .tensors
            .iter()
            .map(|(name, t)| {
                let e = TableEntry { name: name.clone(), shape: t.shape().to_vec(), offset, length: t.len() };
                offset += 4 * t.len();
                e
            })
            .collect();
        let header = serde_json::to_vec(&Header { spec: self.spec.clone(), metadata: self.meta.clone(), tensors })?;
        let mut out = Vec::with_capacity(13 + header.len() + offset);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        for (_, t) in &self.tensors {
            for v in t.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 13 || &bytes[..7] != MAGIC {
            return Err(bad("not a checkpoint (bad magic)"));
        }
        let version = u16::from_le_bytes([bytes[7], bytes[8]]);
        if version != FORMAT_VERSION {
            return Err(OilnetError::Version { found: version, expected: FORMAT_VERSION });
        }
        let header_len = u32::from_le_bytes(bytes[9..13].try_into().unwrap()) as usize;
        let data_start = 13usize.checked_add(header_len).filter(|&e| e <= bytes.len()).ok_or_else(|| bad("truncated header"))?;
        let header: Header = serde_json::from_slice(&bytes[13..data_start])?;
        header.spec.validate()?;
        let data = &bytes[data_start..];
        let mut expected_offset = 0;
        let mut tensors = Vec::with_capacity(header.tensors.len());
        for e in header.tensors {
            if e.offset != expected_offset || e.shape.iter().product::<usize>() != e.length {
                return Err(bad(format!("inconsistent table entry for {:?}", e.name)));
            }
            let end = e.offset + 4 * e.length;
            let raw = data.get(e.offset..end).ok_or_else(|| bad(format!("data for {:?} is truncated", e.name)))?;
            let values = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
            tensors.push((e.name, Tensor::new(e.shape, values)?));
            expected_offset = end;
        }
        if expected_offset != data.len() {
            return Err(bad(format!("{} trailing bytes after the last tensor", data.len() - expected_offset)));
        }
        let ckpt = Self { spec: header.spec, meta: header.metadata, tensors };
        // Reject files whose table does not describe this architecture.
        ckpt.to_model()?;
        Ok(ckpt)
    }
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: &Path) -> Result<()> {
    std::fs::write(path, ckpt.encode()?)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    Checkpoint::decode(&std::fs::read(path)?)
}
