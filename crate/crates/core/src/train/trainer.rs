use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{batch_loss_grads, predict_logits, Mode, SequenceModel};
use crate::rng::{derive_path, Rng};
use crate::signal::PreparedTrial;
use crate::trial::Label;

use super::adam::{Adam, AdamConfig};
use super::metrics::{argmax_label, Metrics};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub weight_decay: f64,
    pub max_epochs: usize,
    pub patience: usize,
    /// Weight the loss by inverse class frequency of the fit set.
    pub class_weighting: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 5e-4,
            batch_size: 24,
            weight_decay: 5e-4,
            max_epochs: 300,
            patience: 40,
            class_weighting: false,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::invalid(format!(
                "learning rate must be positive, got {}",
                self.lr
            )));
        }
        if self.batch_size == 0 || self.max_epochs == 0 {
            return Err(Error::invalid(
                "batch size and epoch count must be at least 1",
            ));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::invalid("weight decay must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_macro_f1: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct History {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were restored, 1-based.
    pub best_epoch: usize,
    pub best_val_macro_f1: f64,
}

/// Inverse-frequency class weights `N / (3·n_c)`; absent classes get weight 0.
pub fn class_weights(trials: &[&PreparedTrial]) -> [f64; 3] {
    let mut counts = [0usize; 3];
    for t in trials {
        counts[t.label.index()] += 1;
    }
    let n = trials.len() as f64;
    counts.map(|c| if c == 0 { 0.0 } else { n / (3.0 * c as f64) })
}

pub fn predict<M: SequenceModel + ?Sized>(
    model: &M,
    trials: &[&PreparedTrial],
) -> Result<Vec<Label>> {
    Ok(predict_logits(model, trials)?
        .iter()
        .map(argmax_label)
        .collect())
}

pub fn evaluate<M: SequenceModel + ?Sized>(
    model: &M,
    trials: &[&PreparedTrial],
) -> Result<Metrics> {
    let predicted = predict(model, trials)?;
    let truth: Vec<Label> = trials.iter().map(|t| t.label).collect();
    Ok(Metrics::from_predictions(&truth, &predicted))
}

/// Mini-batch Adam training with early stopping on validation macro-F1.
///
/// Training stops once `patience` consecutive epochs fail to improve the best
/// score (at least one such epoch), and the best parameters are restored.
/// `on_epoch` sees each record as it is produced.
pub fn train<M: SequenceModel + ?Sized>(
    model: &mut M,
    fit: &[&PreparedTrial],
    val: &[&PreparedTrial],
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<History> {
    config.validate()?;
    if fit.is_empty() || val.is_empty() {
        return Err(Error::invalid(
            "training needs non-empty fit and validation sets",
        ));
    }
    let weights = config.class_weighting.then(|| class_weights(fit));
    let mut adam = Adam::new(
        AdamConfig {
            lr: config.lr,
            weight_decay: config.weight_decay,
            ..Default::default()
        },
        model.params(),
    );
    let mut order: Vec<usize> = (0..fit.len()).collect();
    let mut history = History {
        best_val_macro_f1: f64::NEG_INFINITY,
        ..Default::default()
    };
    let mut best = model.params().clone();
    let mut stale = 0;
    for epoch in 1..=config.max_epochs {
        Rng::new(derive_path(config.seed, &[epoch as u64])).shuffle(&mut order);
        let mut loss_sum = 0.0;
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch: Vec<&PreparedTrial> = chunk.iter().map(|&i| fit[i]).collect();
            let mode = Mode::Train {
                seed: derive_path(config.seed, &[epoch as u64, b as u64, 1]),
            };
            let (loss, grads) =
                batch_loss_grads(model, &batch, weights.as_ref(), mode).map_err(|e| match e {
                    Error::Numeric(m) => {
                        Error::Numeric(format!("{m} at epoch {epoch}, batch {}", b + 1))
                    }
                    other => other,
                })?;
            adam.step(model.params_mut(), &grads)
                .map_err(|e| Error::Numeric(format!("{e} at epoch {epoch}, batch {}", b + 1)))?;
            loss_sum += loss * batch.len() as f64;
        }
        let val_f1 = evaluate(model, val)?.macro_f1;
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / fit.len() as f64,
            val_macro_f1: val_f1,
        };
        on_epoch(&record);
        history.epochs.push(record);
        if val_f1 > history.best_val_macro_f1 {
            history.best_val_macro_f1 = val_f1;
            history.best_epoch = epoch;
            best.clone_from(model.params());
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience.max(1) {
                break;
            }
        }
    }
    *model.params_mut() = best;
    Ok(history)
}
