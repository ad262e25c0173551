use crate::error::{Error, Result};
use crate::trial::Label;

pub const VAR_FLOOR: f64 = 1e-9;

/// Gaussian naive Bayes with one normal per class and feature.
#[derive(Clone, Debug, PartialEq)]
pub struct NaiveBayes {
    pub log_prior: [f64; 3],
    pub mean: [Vec<f64>; 3],
    pub var: [Vec<f64>; 3],
}

impl NaiveBayes {
    pub fn fit(features: &[Vec<f64>], labels: &[Label]) -> Result<Self> {
        if features.len() != labels.len() || features.is_empty() {
            return Err(Error::invalid(
                "naive Bayes needs one label per feature row",
            ));
        }
        let width = features[0].len();
        let mut count = [0usize; 3];
        let mut mean: [Vec<f64>; 3] = Default::default();
        let mut var: [Vec<f64>; 3] = Default::default();
        for c in 0..3 {
            mean[c] = vec![0.0; width];
            var[c] = vec![0.0; width];
        }
        for (x, l) in features.iter().zip(labels) {
            let c = l.index();
            count[c] += 1;
            for (m, v) in mean[c].iter_mut().zip(x) {
                *m += v;
            }
        }
        for c in 0..3 {
            if count[c] == 0 {
                return Err(Error::invalid(format!(
                    "class {} is absent from the training data",
                    Label::ALL[c]
                )));
            }
            mean[c].iter_mut().for_each(|m| *m /= count[c] as f64);
        }
        for (x, l) in features.iter().zip(labels) {
            let c = l.index();
            for ((s, v), m) in var[c].iter_mut().zip(x).zip(&mean[c]) {
                *s += (v - m) * (v - m);
            }
        }
        for c in 0..3 {
            var[c]
                .iter_mut()
                .for_each(|s| *s = (*s / count[c] as f64).max(VAR_FLOOR));
        }
        let n = features.len() as f64;
        Ok(Self {
            log_prior: count.map(|k| (k as f64 / n).ln()),
            mean,
            var,
        })
    }

    /// Unnormalised log posterior of each class.
    pub fn joint_log_likelihood(&self, x: &[f64]) -> [f64; 3] {
        let mut out = self.log_prior;
        for (c, o) in out.iter_mut().enumerate() {
            for ((v, m), s) in x.iter().zip(&self.mean[c]).zip(&self.var[c]) {
                *o -= 0.5 * ((2.0 * std::f64::consts::PI * s).ln() + (v - m) * (v - m) / s);
            }
        }
        out
    }

    pub fn posterior(&self, x: &[f64]) -> [f64; 3] {
        let j = self.joint_log_likelihood(x);
        let top = j.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e = j.map(|v| (v - top).exp());
        let z: f64 = e.iter().sum();
        e.map(|v| v / z)
    }

    pub fn predict(&self, x: &[f64]) -> Label {
        crate::train::argmax_label(&self.joint_log_likelihood(x))
    }
}
