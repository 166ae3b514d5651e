//! Independent oracles for the model.

pub mod gradcheck;

use crate::Oilnet40Spec;

/// Expected sizes derived from the layer recipe alone, without building a
/// model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShapeCounts {
    pub trainable: usize,
    pub non_trainable: usize,
    pub flatten_width: usize,
    /// Side of the square map leaving each convolution block.
    pub block_sides: [usize; 3],
}

/// Walks the recipe conv → BN → ReLU → pool (×3), flatten, then two
/// dense → BN → ReLU stages and a single output unit, tallying parameters.
pub fn shape_oracle(spec: &Oilnet40Spec) -> ShapeCounts {
    let mut side = spec.input_size;
    let mut channels = spec.input_channels;
    let mut trainable = 0;
    let mut non_trainable = 0;
    let mut block_sides = [0; 3];
    for (i, &filters) in spec.conv_filters.iter().enumerate() {
        // 3×3 kernel over every input channel plus one bias per filter.
        trainable += filters * channels * 3 * 3 + filters;
        // Batch norm: scale and shift learned, mean and variance tracked.
        trainable += 2 * filters;
        non_trainable += 2 * filters;
        channels = filters;
        // Same padding keeps the side; the 2×2 pool halves it.
        side /= 2;
        block_sides[i] = side;
    }
    let flatten_width = side * side * channels;
    let mut width = flatten_width;
    for &units in &spec.dense_units {
        trainable += width * units + units + 2 * units;
        non_trainable += 2 * units;
        width = units;
    }
    trainable += width + 1;
    ShapeCounts { trainable, non_trainable, flatten_width, block_sides }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_architecture_counts() {
        let c = shape_oracle(&Oilnet40Spec::default());
        assert_eq!((c.trainable, c.non_trainable), (11_553_201, 1_040));
        assert_eq!(c.block_sides, [120, 60, 30]);
        assert_eq!(shape_oracle(&Oilnet40Spec::with_input_size(120)).flatten_width, 7200);
    }
}
