use rayon::prelude::*;

use super::params::{Grads, ParamStore};
use super::tape::{Tape, Var};
use super::tpm::row3;
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::signal::PreparedTrial;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Eval,
    /// Dropout active; masks drawn from streams derived from `seed`.
    Train {
        seed: u64,
    },
}

impl Mode {
    /// Tape for the `index`-th trial of a batch.
    pub fn tape<'p>(&self, params: &'p ParamStore, dropout: f64, index: usize) -> Tape<'p> {
        match *self {
            Mode::Eval => Tape::new(params),
            Mode::Train { seed } => {
                Tape::training(params, dropout, derive_seed(seed, index as u64))
            }
        }
    }
}

/// A network mapping one prepared trial to three class logits.
pub trait SequenceModel: Send + Sync {
    fn name(&self) -> &'static str;
    fn params(&self) -> &ParamStore;
    fn params_mut(&mut self) -> &mut ParamStore;
    fn dropout(&self) -> f64;
    /// Records the forward pass of `trial` and returns its `1 × 3` logits.
    fn trial_logits(&self, tape: &mut Tape, trial: &PreparedTrial) -> Result<Var>;
    /// Configuration as `key = value` lines.
    fn describe(&self) -> String;
}

fn weight_of(weights: Option<&[f64; 3]>, t: &PreparedTrial) -> f64 {
    weights.map_or(1.0, |w| w[t.label.index()])
}

/// Weighted mean cross-entropy over `trials`.
pub fn batch_loss<M: SequenceModel + ?Sized>(
    model: &M,
    trials: &[&PreparedTrial],
    weights: Option<&[f64; 3]>,
    mode: Mode,
) -> Result<f64> {
    let total: f64 = trials.iter().map(|t| weight_of(weights, t)).sum();
    let losses: Vec<f64> = trials
        .par_iter()
        .enumerate()
        .map(|(i, t)| {
            let mut tape = mode.tape(model.params(), model.dropout(), i);
            let z = model.trial_logits(&mut tape, t)?;
            let l = tape.softmax_ce(z, t.label.index());
            Ok(tape.value(l)[[0, 0]] * weight_of(weights, t))
        })
        .collect::<Result<_>>()?;
    Ok(losses.iter().sum::<f64>() / total)
}

/// Loss and parameter gradients; per-trial gradients are summed in trial order.
pub fn batch_loss_grads<M: SequenceModel + ?Sized>(
    model: &M,
    trials: &[&PreparedTrial],
    weights: Option<&[f64; 3]>,
    mode: Mode,
) -> Result<(f64, Grads)> {
    if trials.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    let total: f64 = trials.iter().map(|t| weight_of(weights, t)).sum();
    let parts: Vec<(f64, Grads)> = trials
        .par_iter()
        .enumerate()
        .map(|(i, t)| {
            let mut tape = mode.tape(model.params(), model.dropout(), i);
            let z = model.trial_logits(&mut tape, t)?;
            let l = tape.softmax_ce(z, t.label.index());
            let w = weight_of(weights, t) / total;
            let mut g = Grads::zeros_like(model.params());
            tape.backward(l, w, &mut g);
            Ok((tape.value(l)[[0, 0]] * w, g))
        })
        .collect::<Result<_>>()?;
    let mut iter = parts.into_iter();
    let (mut loss, mut grads) = iter.next().expect("non-empty");
    for (l, g) in iter {
        loss += l;
        grads.add_assign(&g);
    }
    if !loss.is_finite() {
        return Err(Error::Numeric(format!(
            "{} loss became {loss}",
            model.name()
        )));
    }
    Ok((loss, grads))
}

/// Eval-mode logits for each trial.
pub fn predict_logits<M: SequenceModel + ?Sized>(
    model: &M,
    trials: &[&PreparedTrial],
) -> Result<Vec<[f64; 3]>> {
    trials
        .par_iter()
        .map(|t| {
            let mut tape = Tape::new(model.params());
            let z = model.trial_logits(&mut tape, t)?;
            Ok(row3(tape.value(z)))
        })
        .collect()
}

/// Relative error of one parameter group in a finite-difference check.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupCheck {
    pub group: String,
    pub rel_error: f64,
}

/// Compares analytic gradients with central differences, per named parameter.
///
/// The error of a group is `‖g_analytic − g_fd‖ / max(‖g_analytic‖, ‖g_fd‖)`,
/// taken as 0 when both norms vanish. Runs in eval mode.
pub fn gradient_check<M: SequenceModel + ?Sized>(
    model: &mut M,
    trials: &[&PreparedTrial],
    weights: Option<&[f64; 3]>,
) -> Result<Vec<GroupCheck>> {
    const H: f64 = 1e-6;
    let (_, analytic) = batch_loss_grads(model, trials, weights, Mode::Eval)?;
    let ids: Vec<_> = model.params().ids().collect();
    let mut out = Vec::with_capacity(ids.len());
    for id in ids {
        if model.params().is_frozen(id) {
            continue;
        }
        let n = model.params().get(id).len();
        let a = analytic.get(id).clone();
        let (mut diff, mut na, mut nf) = (0.0, 0.0, 0.0);
        for k in 0..n {
            let orig = model.params().get(id).as_slice().expect("standard layout")[k];
            let mut at = |v: f64| -> Result<f64> {
                model
                    .params_mut()
                    .get_mut(id)
                    .as_slice_mut()
                    .expect("standard layout")[k] = v;
                batch_loss(model, trials, weights, Mode::Eval)
            };
            let fd = (at(orig + H)? - at(orig - H)?) / (2.0 * H);
            at(orig)?;
            let g = a.as_slice().expect("standard layout")[k];
            diff += (g - fd) * (g - fd);
            na += g * g;
            nf += fd * fd;
        }
        let denom = na.sqrt().max(nf.sqrt());
        let rel_error = if denom == 0.0 {
            0.0
        } else {
            diff.sqrt() / denom
        };
        out.push(GroupCheck {
            group: model.params().name(id).to_string(),
            rel_error,
        });
    }
    Ok(out)
}
