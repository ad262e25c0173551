use std::fmt;

use crate::trial::Label;

/// Classification quality on one evaluation set.
///
/// `confusion[true][predicted]`, classes in [`Label::ALL`] order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub uar: f64,
    pub confusion: [[usize; 3]; 3],
}

impl Metrics {
    pub fn from_confusion(confusion: [[usize; 3]; 3]) -> Self {
        let total: usize = confusion.iter().flatten().sum();
        let correct: usize = (0..3).map(|i| confusion[i][i]).sum();
        let mut f1 = 0.0;
        let mut recall = 0.0;
        for c in 0..3 {
            let tp = confusion[c][c] as f64;
            let support: usize = confusion[c].iter().sum();
            let predicted: usize = (0..3).map(|r| confusion[r][c]).sum();
            let p = if predicted > 0 {
                tp / predicted as f64
            } else {
                0.0
            };
            let r = if support > 0 {
                tp / support as f64
            } else {
                0.0
            };
            recall += r;
            f1 += if p + r > 0.0 {
                2.0 * p * r / (p + r)
            } else {
                0.0
            };
        }
        Self {
            accuracy: if total > 0 {
                correct as f64 / total as f64
            } else {
                0.0
            },
            macro_f1: f1 / 3.0,
            uar: recall / 3.0,
            confusion,
        }
    }

    pub fn from_predictions(truth: &[Label], predicted: &[Label]) -> Self {
        let mut confusion = [[0; 3]; 3];
        for (t, p) in truth.iter().zip(predicted) {
            confusion[t.index()][p.index()] += 1;
        }
        Self::from_confusion(confusion)
    }

    pub fn total(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }
}

impl fmt::Display for Metrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "accuracy {:.2}%, macro-F1 {:.2}%, UAR {:.2}%",
            100.0 * self.accuracy,
            100.0 * self.macro_f1,
            100.0 * self.uar
        )
    }
}

/// Index of the largest logit; ties go to the earlier class.
pub fn argmax_label(logits: &[f64; 3]) -> Label {
    let mut best = 0;
    for i in 1..3 {
        if logits[i] > logits[best] {
            best = i;
        }
    }
    Label::ALL[best]
}

/// Mean and population standard deviation of each metric across folds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricSummary {
    pub mean: [f64; 3],
    pub std: [f64; 3],
}

impl MetricSummary {
    pub fn of(folds: &[Metrics]) -> Self {
        let n = folds.len().max(1) as f64;
        let get = |m: &Metrics| [m.accuracy, m.macro_f1, m.uar];
        let mut mean = [0.0; 3];
        for m in folds {
            for (a, v) in mean.iter_mut().zip(get(m)) {
                *a += v / n;
            }
        }
        let mut std = [0.0; 3];
        for m in folds {
            for ((s, v), mu) in std.iter_mut().zip(get(m)).zip(mean) {
                *s += (v - mu) * (v - mu) / n;
            }
        }
        Self {
            mean,
            std: std.map(f64::sqrt),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_computed_confusion() {
        let m = Metrics::from_confusion([[2, 0, 0], [0, 1, 1], [1, 0, 1]]);
        assert!((m.accuracy - 4.0 / 6.0).abs() < 1e-15);
        assert!((m.uar - 2.0 / 3.0).abs() < 1e-15);
        let f1 = (0.8 + 2.0 / 3.0 + 0.5) / 3.0;
        assert!((m.macro_f1 - f1).abs() < 1e-15);
        assert_eq!(format!("{:.4}", m.macro_f1), "0.6556");
    }

    #[test]
    fn perfect_predictions() {
        let truth = [
            Label::Underestimated,
            Label::AcceptablyAccurate,
            Label::Overestimated,
        ];
        let m = Metrics::from_predictions(&truth, &truth);
        assert_eq!((m.accuracy, m.macro_f1, m.uar), (1.0, 1.0, 1.0));
    }

    #[test]
    fn absent_class_scores_zero() {
        let truth = [Label::Underestimated, Label::Underestimated];
        let m = Metrics::from_predictions(&truth, &truth);
        assert!((m.macro_f1 - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn argmax_prefers_first_on_ties() {
        assert_eq!(argmax_label(&[1.0, 1.0, 0.0]), Label::Underestimated);
        assert_eq!(argmax_label(&[0.0, 1.0, 1.0]), Label::AcceptablyAccurate);
    }

    proptest::proptest! {
        #[test]
        fn identities(cells in proptest::collection::vec(0usize..20, 9)) {
            let mut c = [[0; 3]; 3];
            for (i, v) in cells.iter().enumerate() {
                c[i / 3][i % 3] = *v;
            }
            let m = Metrics::from_confusion(c);
            let total: usize = cells.iter().sum();
            if total > 0 {
                let diag = (c[0][0] + c[1][1] + c[2][2]) as f64;
                proptest::prop_assert!((m.accuracy - diag / total as f64).abs() < 1e-15);
            }
            let f1s: Vec<f64> = (0..3).map(|k| {
                let tp = c[k][k] as f64;
                let sup: usize = c[k].iter().sum();
                let pred: usize = (0..3).map(|r| c[r][k]).sum();
                let p = if pred > 0 { tp / pred as f64 } else { 0.0 };
                let r = if sup > 0 { tp / sup as f64 } else { 0.0 };
                if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 }
            }).collect();
            let lo = f1s.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = f1s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            proptest::prop_assert!(m.macro_f1 >= lo - 1e-12 && m.macro_f1 <= hi + 1e-12);
            for v in [m.accuracy, m.macro_f1, m.uar] {
                proptest::prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}
