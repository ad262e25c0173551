use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::signal::PreparedTrial;
use crate::trial::ConditionCode;

/// EEG bands in feature order: θ, α, low β, high β, γ (Hz, half-open).
pub const BANDS: [(f64, f64); 5] = [
    (4.0, 8.0),
    (8.0, 13.0),
    (13.0, 20.0),
    (20.0, 30.0),
    (30.0, 45.0),
];
pub const BAND_NAMES: [&str; 5] = ["theta", "alpha", "low_beta", "high_beta", "gamma"];

/// Statistics computed for every channel.
pub const CHANNEL_STATS: usize = 5;

/// Fixed-width summary of one prepared trial.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn width(n_eeg: usize, n_channels: usize) -> usize {
        CHANNEL_STATS * n_channels + BANDS.len() * n_eeg + ConditionCode::VOCABULARY
    }
}

/// Mean power of `x` inside each band: the mean square of its FFT projection onto the band.
pub fn band_powers(x: &[f64], fs: f64) -> [f64; 5] {
    let n = x.len();
    let mut out = [0.0; 5];
    if n < 2 {
        return out;
    }
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let norm = (n * n) as f64;
    for (k, c) in buf.iter().enumerate().take(n / 2 + 1).skip(1) {
        let f = k as f64 * fs / n as f64;
        // Bins other than Nyquist stand for a conjugate pair.
        let pair = if 2 * k == n { 1.0 } else { 2.0 };
        if let Some(b) = BANDS.iter().position(|&(lo, hi)| f >= lo && f < hi) {
            out[b] += pair * c.norm_sqr() / norm;
        }
    }
    out
}

/// Per-channel {mean, std, min, max, mean |first difference|} over the valid region,
/// then the five band powers of each EEG channel, then the condition one-hot.
pub fn summarize(trial: &PreparedTrial, fs: f64) -> FeatureVector {
    let n = trial.valid_len();
    let x = trial.channels.slice(ndarray::s![..n, ..]);
    let mut v = Vec::with_capacity(FeatureVector::width(trial.n_eeg(), x.ncols()));
    for col in x.columns() {
        if n == 0 {
            v.extend([0.0; CHANNEL_STATS]);
            continue;
        }
        let mean = col.sum() / n as f64;
        let var = col.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n as f64;
        let min = col.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let diff = if n > 1 {
            col.windows(2)
                .into_iter()
                .map(|w| (w[1] - w[0]).abs())
                .sum::<f64>()
                / (n - 1) as f64
        } else {
            0.0
        };
        v.extend([mean, var.sqrt(), min, max, diff]);
    }
    for c in 0..trial.n_eeg() {
        let col: Vec<f64> = x.column(c).to_vec();
        v.extend(band_powers(&col, fs));
    }
    let mut onehot = [0.0; ConditionCode::VOCABULARY];
    onehot[trial.zeitgeber.index()] = 1.0;
    v.extend(onehot);
    FeatureVector(v)
}

/// Per-feature z-scoring fitted on a training set; constant features pass through centred.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let width = rows.first().map_or(0, Vec::len);
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; width];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v / n;
            }
        }
        let mut var = vec![0.0; width];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m) / n;
            }
        }
        let scale = var
            .iter()
            .map(|v| if v.sqrt() < 1e-12 { 1.0 } else { v.sqrt() })
            .collect();
        Self { mean, scale }
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}
