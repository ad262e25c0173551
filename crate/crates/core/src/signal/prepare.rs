use ndarray::{s, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::emd::{emd, EmdConfig};
use super::filter::lowpass_filter;
use super::spline::resample_cubic_to_len;
use crate::error::{Error, Result};
use crate::trial::{ConditionCode, Label, TrialRecord};

/// Number of non-EEG channels stacked after the EEG block (bw, hs, hr).
pub const AUX_CHANNELS: usize = 5 + 4 + 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrepConfig {
    pub lowpass_cutoff_hz: f64,
    pub emd: EmdConfig,
    pub target_rate_hz: f64,
}

impl Default for PrepConfig {
    fn default() -> Self {
        Self {
            lowpass_cutoff_hz: 45.0,
            emd: EmdConfig::default(),
            target_rate_hz: 256.0,
        }
    }
}

/// One preprocessed trial: `L × d_phys` samples, channels ordered eeg, bw, hs, hr.
#[derive(Clone, Debug, PartialEq)]
pub struct PreparedTrial {
    pub id: String,
    pub channels: Array2<f64>,
    pub mask: Vec<bool>,
    pub zeitgeber: ConditionCode,
    pub label: Label,
}

impl PreparedTrial {
    pub fn len(&self) -> usize {
        self.channels.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.nrows() == 0
    }

    /// Number of leading valid samples.
    pub fn valid_len(&self) -> usize {
        self.mask.iter().take_while(|&&m| m).count()
    }

    pub fn n_eeg(&self) -> usize {
        self.channels.ncols().saturating_sub(AUX_CHANNELS)
    }
}

/// Trials zero-padded to a shared length.
#[derive(Clone, Debug, PartialEq)]
pub struct PreparedBatch {
    pub trials: Vec<PreparedTrial>,
}

impl PreparedBatch {
    pub fn l_max(&self) -> usize {
        self.trials.first().map_or(0, PreparedTrial::len)
    }

    pub fn masks(&self) -> Vec<&[bool]> {
        self.trials.iter().map(|t| t.mask.as_slice()).collect()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.trials.iter().map(|t| t.label).collect()
    }
}

/// Mean 0, population standard deviation 1; near-constant input maps to zeros.
pub fn znormalize(x: &[f64]) -> Vec<f64> {
    if x.is_empty() {
        return Vec::new();
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    if sd < 1e-12 {
        return vec![0.0; x.len()];
    }
    x.iter().map(|v| (v - mean) / sd).collect()
}

/// Low-pass denoising followed by removal of the EMD residual.
pub fn detrend_eeg(x: &[f64], fs: f64, cfg: &PrepConfig) -> Result<Vec<f64>> {
    let y = lowpass_filter(x, fs, cfg.lowpass_cutoff_hz)?;
    let d = emd(&y, &cfg.emd);
    Ok(y.iter().zip(&d.residual).map(|(a, b)| a - b).collect())
}

pub fn prepare_trial(trial: &TrialRecord, cfg: &PrepConfig) -> Result<PreparedTrial> {
    let id = trial.id();
    let ctx = |e: Error| Error::invalid(format!("trial {id}: {e}"));
    let p = &trial.physio;
    let fs = cfg.target_rate_hz;
    let len = (p.eeg.len() as f64 * fs / p.eeg.rate_hz).round() as usize;
    if len == 0 {
        return Err(Error::invalid(format!("trial {id}: empty EEG stream")));
    }
    let n_eeg = p.eeg.channels();
    let mut out = Array2::zeros((len, n_eeg + AUX_CHANNELS));
    let mut col = 0;

    for c in 0..n_eeg {
        let raw = p.eeg.data.column(c).to_vec();
        let clean = detrend_eeg(&raw, p.eeg.rate_hz, cfg).map_err(ctx)?;
        let at_rate = resample_cubic_to_len(&clean, p.eeg.rate_hz, fs, len).map_err(ctx)?;
        out.column_mut(col)
            .assign(&ndarray::Array1::from(znormalize(&at_rate)));
        col += 1;
    }
    for stream in [&p.bw, &p.hs, &p.hr] {
        for c in 0..stream.channels() {
            let raw = stream.data.column(c).to_vec();
            let at_rate = resample_cubic_to_len(&raw, stream.rate_hz, fs, len).map_err(ctx)?;
            out.column_mut(col)
                .assign(&ndarray::Array1::from(znormalize(&at_rate)));
            col += 1;
        }
    }
    if col != out.ncols() {
        return Err(Error::invalid(format!(
            "trial {id}: expected {} auxiliary channels, found {}",
            AUX_CHANNELS,
            col - n_eeg
        )));
    }
    Ok(PreparedTrial {
        id,
        channels: out,
        mask: vec![true; len],
        zeitgeber: trial.condition,
        label: trial.label()?,
    })
}

/// Prepares trials in parallel on the current rayon pool; order is preserved.
pub fn prepare_trials(trials: &[&TrialRecord], cfg: &PrepConfig) -> Result<Vec<PreparedTrial>> {
    trials.par_iter().map(|t| prepare_trial(t, cfg)).collect()
}

pub fn pad_batch(trials: &[PreparedTrial]) -> Result<PreparedBatch> {
    let l_max = trials
        .iter()
        .map(PreparedTrial::len)
        .max()
        .ok_or_else(|| Error::invalid("cannot pad an empty batch"))?;
    let width = trials[0].channels.ncols();
    if trials.iter().any(|t| t.channels.ncols() != width) {
        return Err(Error::invalid("trials in a batch differ in channel count"));
    }
    let trials = trials
        .iter()
        .map(|t| {
            let n = t.len();
            let mut channels = Array2::zeros((l_max, width));
            channels.slice_mut(s![..n, ..]).assign(&t.channels);
            let mut mask = t.mask.clone();
            mask.resize(l_max, false);
            PreparedTrial {
                id: t.id.clone(),
                channels,
                mask,
                zeitgeber: t.zeitgeber,
                label: t.label,
            }
        })
        .collect();
    Ok(PreparedBatch { trials })
}
