//! Hyperparameter search over dense widths and learning rate.
//!
//! Candidates are drawn without replacement from the full grid in a seeded
//! order, so a budget equal to the grid size is an exhaustive grid search.

use std::fmt::Write as _;

use leakspot_dataset::rng::{derive_seed, sample_rng};
use rand::seq::SliceRandom;

use crate::data::LabeledImage;
use crate::error::{OilnetError, Result};
use crate::model::Oilnet40;
use crate::spec::Oilnet40Spec;
use crate::train::{train, TrainConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    pub dense1: Vec<usize>,
    pub dense2: Vec<usize>,
    pub learning_rates: Vec<f32>,
    pub budget: usize,
    /// Epochs per trial.
    pub trial_epochs: usize,
    pub seed: u64,
}

impl SearchSpace {
    pub fn grid_size(&self) -> usize {
        self.dense1.len() * self.dense2.len() * self.learning_rates.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_size() == 0 {
            return Err(OilnetError::Config("search space has an empty candidate list".into()));
        }
        if self.budget == 0 || self.budget > self.grid_size() {
            return Err(OilnetError::Config(format!("budget {} must lie in 1..={}", self.budget, self.grid_size())));
        }
        if self.trial_epochs == 0 {
            return Err(OilnetError::Config("trials need at least one epoch".into()));
        }
        Ok(())
    }

    /// The `(dense1, dense2, learning rate)` combinations to train, in trial
    /// order.
    pub fn candidates(&self) -> Result<Vec<([usize; 2], f32)>> {
        self.validate()?;
        let mut grid = Vec::with_capacity(self.grid_size());
        for &a in &self.dense1 {
            for &b in &self.dense2 {
                for &lr in &self.learning_rates {
                    grid.push(([a, b], lr));
                }
            }
        }
        grid.shuffle(&mut sample_rng(self.seed, 0));
        grid.truncate(self.budget);
        Ok(grid)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub index: usize,
    pub dense_units: [usize; 2],
    pub learning_rate: f32,
    pub best_val_accuracy: f64,
    pub best_epoch: usize,
    /// Training hit a non-finite loss; such trials score zero.
    pub diverged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    /// Trials in the order they ran.
    pub trials: Vec<Trial>,
    /// Trial indices, best first: higher validation accuracy, then earlier.
    pub ranking: Vec<usize>,
}

impl SearchOutcome {
    pub fn best(&self) -> &Trial {
        &self.trials[self.ranking[0]]
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# leakspot search report v1\nrank\ttrial\tdense1\tdense2\tlearning_rate\tbest_val_acc\tbest_epoch\tdiverged\n");
        for (rank, &i) in self.ranking.iter().enumerate() {
            let t = &self.trials[i];
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{:.6}\t{}\t{}",
                rank + 1,
                t.index,
                t.dense_units[0],
                t.dense_units[1],
                t.learning_rate,
                t.best_val_accuracy,
                t.best_epoch,
                t.diverged
            )
            .unwrap();
        }
        out
    }
}

/// Trains one model per sampled candidate with `base` settings (epochs
/// replaced by the trial budget) and ranks them by best validation accuracy.
pub fn random_search(
    space: &SearchSpace,
    base_spec: &Oilnet40Spec,
    train_set: &[LabeledImage],
    val_set: &[LabeledImage],
    base: &TrainConfig,
) -> Result<SearchOutcome> {
    let mut trials = Vec::new();
    for (index, (dense_units, learning_rate)) in space.candidates()?.into_iter().enumerate() {
        let spec = Oilnet40Spec { dense_units, ..base_spec.clone() };
        let trial_seed = derive_seed(space.seed, index as u64 + 1);
        let mut cfg = base.clone();
        cfg.epochs = space.trial_epochs;
        cfg.seed = trial_seed;
        cfg.optimizer.learning_rate = learning_rate;
        let mut model = Oilnet40::build(&spec, trial_seed)?;
        let (best_val_accuracy, best_epoch, diverged) = match train(&mut model, train_set, val_set, &cfg) {
            Ok((_, report)) => (report.best().val_accuracy, report.best_epoch, false),
            Err(OilnetError::Diverged { .. }) => (0.0, 0, true),
            Err(e) => return Err(e),
        };
        trials.push(Trial { index, dense_units, learning_rate, best_val_accuracy, best_epoch, diverged });
    }
    let mut ranking: Vec<usize> = (0..trials.len()).collect();
    ranking.sort_by(|&a, &b| trials[b].best_val_accuracy.total_cmp(&trials[a].best_val_accuracy).then(a.cmp(&b)));
    Ok(SearchOutcome { trials, ranking })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(budget: usize) -> SearchSpace {
        SearchSpace { dense1: vec![400, 200], dense2: vec![64, 32], learning_rates: vec![1e-3, 1e-2], budget, trial_epochs: 1, seed: 4 }
    }

    #[test]
    fn candidates_are_distinct_and_seeded() {
        let c = space(8).candidates().unwrap();
        assert_eq!(c.len(), 8);
        for i in 0..8 {
            for j in i + 1..8 {
                assert_ne!(c[i], c[j]);
            }
        }
        assert_eq!(space(3).candidates().unwrap(), c[..3].to_vec());
        assert_ne!(SearchSpace { seed: 5, ..space(8) }.candidates().unwrap(), c);
    }

    #[test]
    fn invalid_spaces_are_rejected() {
        assert!(space(9).candidates().is_err());
        assert!(space(0).candidates().is_err());
        assert!(SearchSpace { dense1: vec![], ..space(1) }.candidates().is_err());
    }
}
