use serde::Serialize;

/// Confusion counts with +1 as the positive class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Confusion {
    pub tp: usize,
    pub fn_: usize,
    pub tn: usize,
    pub fp: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fn_ + self.tn + self.fp
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }

    /// `TP / (TP + FN)`.
    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// `TN / (TN + FP)`.
    pub fn specificity(&self) -> f64 {
        ratio(self.tn, self.tn + self.fp)
    }
}

/// An empty class has nothing misclassified, so its rate is 1.
fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

pub fn compute_metrics(predictions: &[i8], truth: &[i8]) -> Confusion {
    assert_eq!(predictions.len(), truth.len(), "one prediction per record");
    let mut c = Confusion::default();
    for (&p, &y) in predictions.iter().zip(truth) {
        match (y == 1, p == 1) {
            (true, true) => c.tp += 1,
            (true, false) => c.fn_ += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fp += 1,
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictor() {
        let y = [1, -1, 1, -1];
        let c = compute_metrics(&y, &y);
        assert_eq!((c.accuracy(), c.recall(), c.specificity()), (1.0, 1.0, 1.0));
    }

    #[test]
    fn always_positive() {
        let c = compute_metrics(&[1, 1, 1, 1], &[1, -1, 1, -1]);
        assert_eq!(c.recall(), 1.0);
        assert_eq!(c.specificity(), 0.0);
        assert_eq!(c.accuracy(), 0.5);
    }

    #[test]
    fn confusion_arithmetic() {
        let mut predictions = Vec::new();
        let mut truth = Vec::new();
        for (p, y, n) in [(1, 1, 33), (-1, 1, 5), (-1, -1, 31), (1, -1, 7)] {
            predictions.extend(std::iter::repeat_n(p, n));
            truth.extend(std::iter::repeat_n(y, n));
        }
        let c = compute_metrics(&predictions, &truth);
        assert_eq!((c.tp, c.fn_, c.tn, c.fp), (33, 5, 31, 7));
        assert!((c.recall() - 0.868).abs() < 1e-3);
        assert!((c.specificity() - 0.816).abs() < 1e-3);
        assert!((c.accuracy() - 64.0 / 76.0).abs() < 1e-12);
    }
}
