use std::fmt;

use leakspot_dataset::ClassLabel;

/// Binary confusion counts with Anomaly as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionMatrix {
    pub fn from_pairs<I>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (ClassLabel, ClassLabel)>,
    {
        let mut m = Self::default();
        for (predicted, actual) in pairs {
            m.record(predicted, actual);
        }
        m
    }

    pub fn record(&mut self, predicted: ClassLabel, actual: ClassLabel) {
        match (predicted.is_anomaly(), actual.is_anomaly()) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Fraction correct; 0 when nothing was counted.
    pub fn accuracy(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            n => (self.tp + self.tn) as f64 / n as f64,
        }
    }

    /// `tp / (tp + fp)`, reported as 1 when nothing was predicted positive.
    pub fn precision(&self) -> f64 {
        match self.tp + self.fp {
            0 => 1.0,
            n => self.tp as f64 / n as f64,
        }
    }

    /// `tp / (tp + fn)`, reported as 1 when there are no positives.
    pub fn recall(&self) -> f64 {
        match self.tp + self.fn_ {
            0 => 1.0,
            n => self.tp as f64 / n as f64,
        }
    }
}

impl fmt::Display for ConfusionMatrix {
    /// Rows are actual classes, columns predicted classes.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:>16} {:>10} {:>10}", "", "pred normal", "pred anomaly")?;
        writeln!(f, "{:>16} {:>10} {:>10}", "actual normal", self.tn, self.fp)?;
        write!(f, "{:>16} {:>10} {:>10}", "actual anomaly", self.fn_, self.tp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ClassLabel::{Anomaly as A, Normal as N};

    #[test]
    fn one_of_each_cell() {
        let m = ConfusionMatrix::from_pairs([(A, A), (A, N), (N, A), (N, N)]);
        assert_eq!((m.precision(), m.recall(), m.accuracy()), (0.5, 0.5, 0.5));
    }

    #[test]
    fn all_correct_has_empty_off_diagonal() {
        let m = ConfusionMatrix::from_pairs([(A, A), (N, N), (N, N)]);
        assert_eq!((m.fp, m.fn_), (0, 0));
        assert_eq!(m.accuracy(), 1.0);
    }

    #[test]
    fn hand_tallied_ten_pairs() {
        let predicted = [A, A, N, N, A, N, A, N, N, A];
        let actual = [A, N, N, A, A, N, A, N, A, N];
        let m = ConfusionMatrix::from_pairs(predicted.into_iter().zip(actual));
        assert_eq!(m, ConfusionMatrix { tp: 3, fp: 2, fn_: 2, tn: 3 });
    }

    #[test]
    fn undefined_ratios_report_one() {
        let m = ConfusionMatrix::from_pairs([(N, N)]);
        assert_eq!((m.precision(), m.recall()), (1.0, 1.0));
        assert_eq!(ConfusionMatrix::default().accuracy(), 0.0);
    }
}
