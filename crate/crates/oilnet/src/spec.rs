use serde::{Deserialize, Serialize};

use crate::error::{OilnetError, Result};

/// Architecture of the classifier: three 3×3 same-padded convolution blocks
/// (batch norm, ReLU, 2×2 max pool), two dropout → dense → batch norm → ReLU
/// stages and one sigmoid output unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Oilnet40Spec {
    /// Side of the square input; must be divisible by 8.
    pub input_size: usize,
    /// 3 for colour inputs, 1 for grayscale.
    pub input_channels: usize,
    pub conv_filters: [usize; 3],
    pub dense_units: [usize; 2],
    pub dropout_rate: f32,
    pub bn_momentum: f32,
    pub bn_epsilon: f32,
}

impl Default for Oilnet40Spec {
    fn default() -> Self {
        Self {
            input_size: 240,
            input_channels: 3,
            conv_filters: [8, 16, 32],
            dense_units: [400, 64],
            dropout_rate: 0.25,
            bn_momentum: 0.9,
            bn_epsilon: 1e-5,
        }
    }
}

impl Oilnet40Spec {
    pub fn with_input_size(input_size: usize) -> Self {
        Self { input_size, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_size == 0 || self.input_size % 8 != 0 {
            return Err(OilnetError::Config(format!("input size {} is not a positive multiple of 8", self.input_size)));
        }
        if self.input_channels != 1 && self.input_channels != 3 {
            return Err(OilnetError::Config(format!("input channels must be 1 or 3, got {}", self.input_channels)));
        }
        if self.conv_filters.contains(&0) || self.dense_units.contains(&0) {
            return Err(OilnetError::Config("layer widths must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(OilnetError::Config(format!("dropout rate {} outside [0, 1)", self.dropout_rate)));
        }
        if !(0.0..1.0).contains(&self.bn_momentum) || !(self.bn_epsilon > 0.0) {
            return Err(OilnetError::Config("batch-norm momentum must lie in [0, 1) and epsilon be positive".into()));
        }
        Ok(())
    }

    /// Side of the map entering the dense stages.
    pub fn final_side(&self) -> usize {
        self.input_size / 8
    }

    pub fn flatten_width(&self) -> usize {
        self.final_side() * self.final_side() * self.conv_filters[2]
    }
}
