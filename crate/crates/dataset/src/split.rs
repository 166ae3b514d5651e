use std::collections::HashSet;
use std::fmt;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{DatasetError, Result};
use crate::rng::sample_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Split {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self> {
        Split::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| DatasetError::Config(format!("unknown split {s:?}")))
    }
}

/// Fractions of the data assigned to each split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl SplitRatios {
    pub fn new(train: f64, val: f64, test: f64) -> Result<Self> {
        let r = Self { train, val, test };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.train, self.val, self.test];
        if all.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(DatasetError::Config(format!("split ratios must be non-negative: {self:?}")));
        }
        if (all.iter().sum::<f64>() - 1.0).abs() > 1e-6 {
            return Err(DatasetError::Config(format!("split ratios must sum to 1: {self:?}")));
        }
        Ok(())
    }

    /// Sizes for `n` items: validation and test sizes are floored (with a
    /// guard against ratios like `413/1634` landing a hair below an integer),
    /// the remainder goes to training.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        let alloc = |r: f64| ((n as f64 * r + 1e-9).floor() as usize).min(n);
        let val = alloc(self.val);
        let test = alloc(self.test).min(n - val);
        (n - val - test, val, test)
    }
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self { train: 0.75, val: 0.125, test: 0.125 }
    }
}

/// Disjoint train/val/test identifier lists plus the seed that produced them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

impl SplitManifest {
    /// Manifest from explicit lists, e.g. a curated test set.
    pub fn from_lists(train: Vec<String>, val: Vec<String>, test: Vec<String>, seed: u64) -> Result<Self> {
        let m = Self { seed, train, val, test };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for id in self.train.iter().chain(&self.val).chain(&self.test) {
            if !seen.insert(id) {
                return Err(DatasetError::Layout(format!("identifier {id:?} appears more than once in the split")));
            }
        }
        Ok(())
    }

    pub fn ids(&self, split: Split) -> &[String] {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.val.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }
}

fn shuffled(ids: &[String], seed: u64, stream: u64) -> Vec<String> {
    let mut ids = ids.to_vec();
    ids.shuffle(&mut sample_rng(seed, stream));
    ids
}

/// Seeded shuffle followed by floor allocation, remainder to training.
pub fn split_dataset(ids: &[String], ratios: SplitRatios, seed: u64) -> Result<SplitManifest> {
    split_stratified(&[ids.to_vec()], ratios, seed)
}

/// Splits each group (typically one per class) independently with the same
/// ratios so every split keeps the group balance; lists are concatenated in
/// group order.
pub fn split_stratified(groups: &[Vec<String>], ratios: SplitRatios, seed: u64) -> Result<SplitManifest> {
    ratios.validate()?;
    let mut m = SplitManifest { seed, train: vec![], val: vec![], test: vec![] };
    for (g, ids) in groups.iter().enumerate() {
        let ids = shuffled(ids, seed, g as u64);
        let (n_train, n_val, _) = ratios.sizes(ids.len());
        m.train.extend_from_slice(&ids[..n_train]);
        m.val.extend_from_slice(&ids[n_train..n_train + n_val]);
        m.test.extend_from_slice(&ids[n_train + n_val..]);
    }
    m.validate()?;
    Ok(m)
}
