use ndarray::Array2;

use super::{CohortConfig, ParticipantProfile, TrialOutcome};
use crate::rng::Rng;
use crate::signal::{PhysioBundle, Stream};
use crate::trial::ConditionCode;

/// Frequency ranges in bw stream order: α, low β, high β, θ, γ.
const BAND_HZ: [(f64, f64); 5] = [
    (8.0, 13.0),
    (13.0, 20.0),
    (20.0, 30.0),
    (4.0, 8.0),
    (30.0, 45.0),
];
const BAND_LOG_AMP: [f64; 5] = [1.0, 0.4, 0.2, 0.7, -0.6];
const OSCILLATORS_PER_BAND: usize = 2;
/// Rate of the slow envelope processes, Hz.
const ENVELOPE_RATE: f64 = 10.0;
const ENVELOPE_AR: f64 = 0.9;
const RESYNC: usize = 512;

/// Stationary unit-variance AR(1) scaled by `sd`.
fn ar1(n: usize, phi: f64, sd: f64, rng: &mut Rng) -> Vec<f64> {
    let innov = (1.0 - phi * phi).sqrt();
    let mut x = rng.normal();
    (0..n)
        .map(|_| {
            let v = x * sd;
            x = phi * x + innov * rng.normal();
            v
        })
        .collect()
}

/// Adds `sin(2πf·i/fs + phase)` by phasor rotation, resynchronised from libm every few hundred samples.
fn add_sine(out: &mut [f64], gain: &[f64], freq: f64, phase: f64, fs: f64) {
    let w = 2.0 * std::f64::consts::PI * freq / fs;
    let (sw, cw) = libm::sincos(w);
    for (start, chunk) in out.chunks_mut(RESYNC).enumerate() {
        let (mut s, mut c) = libm::sincos(w * (start * RESYNC) as f64 + phase);
        for (i, o) in chunk.iter_mut().enumerate() {
            *o += gain[start * RESYNC + i] * s;
            let s2 = s * cw + c * sw;
            c = c * cw - s * sw;
            s = s2;
        }
    }
}

/// Approximate 1/f noise from white noise with a fixed bank of one-pole filters.
fn pink(n: usize, level: f64, rng: &mut Rng) -> Vec<f64> {
    const POLES: [f64; 6] = [0.99886, 0.99332, 0.96900, 0.86650, 0.55000, -0.7616];
    const GAINS: [f64; 6] = [
        0.0555179, 0.0750759, 0.1538520, 0.3104856, 0.5329522, -0.0168980,
    ];
    let mut state = [0.0; 6];
    let mut out = Vec::with_capacity(n);
    let mut last = 0.0;
    // Burn-in lets the slowest pole reach its stationary spread.
    for i in 0..n + 2000 {
        let white = rng.normal();
        let mut v = white * 0.5362 + last;
        for k in 0..6 {
            state[k] = POLES[k] * state[k] + white * GAINS[k];
            v += state[k];
        }
        last = white * 0.115926;
        if i >= 2000 {
            out.push(0.11 * level * v);
        }
    }
    out
}

/// Linear interpolation of a series sampled at `rate` onto `n` points at `fs`.
fn upsample(ctrl: &[f64], rate: f64, n: usize, fs: f64) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let pos = i as f64 * rate / fs;
            let k = (pos.floor() as usize).min(ctrl.len() - 2);
            let f = pos - k as f64;
            ctrl[k] * (1.0 - f) + ctrl[k + 1] * f
        })
        .collect()
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

fn stream_len(n_eeg_samples: usize, rate: f64, eeg_rate: f64) -> usize {
    ((n_eeg_samples as f64 * rate / eeg_rate).round() as usize).max(1)
}

/// Physiological recording for one simulated trial.
///
/// Band amplitudes follow the trial's clock speed (faster accumulation, less
/// beta) and task (less alpha). The EEG channels share a common source whose
/// weight rises with clock speed; that coupling leaves each channel's
/// spectrum unchanged and shows only in the joint waveform.
pub fn synth_physio(
    cfg: &CohortConfig,
    profile: &ParticipantProfile,
    condition: &ConditionCode,
    outcome: &TrialOutcome,
    rng: &mut Rng,
) -> PhysioBundle {
    let fs = cfg.eeg_rate_hz;
    let n = ((outcome.t * fs).round() as usize).max(1);
    let speed = outcome.speed(cfg.reference_rate);
    let arousal = libm::log(outcome.clock_rate / cfg.reference_rate);
    let task = if condition.task { 1.0 } else { 0.0 };

    let n_ctrl = (n as f64 * ENVELOPE_RATE / fs).ceil() as usize + 2;
    let mut log_env = Vec::with_capacity(5);
    for b in 0..5 {
        let slope = if b == 1 || b == 2 {
            cfg.beta_slope
        } else {
            0.0
        };
        let task_shift = if b == 0 {
            cfg.alpha_task_shift * task
        } else {
            0.0
        };
        let level = BAND_LOG_AMP[b]
            + slope * speed
            + task_shift
            + profile.band_offsets[b]
            + cfg.band_jitter_sd * rng.normal();
        let m = ar1(n_ctrl, ENVELOPE_AR, cfg.envelope_depth, rng);
        log_env.push(m.into_iter().map(|v| level + v).collect::<Vec<f64>>());
    }

    let rho =
        0.5 + 0.45 * libm::tanh(cfg.coherence_gain * (speed + cfg.coherence_noise * rng.normal()));
    let own = (1.0 - rho * rho).sqrt();
    let mut eeg = Array2::zeros((n, cfg.n_eeg));
    let mut channels: Vec<Vec<f64>> = (0..cfg.n_eeg)
        .map(|_| pink(n, cfg.pink_noise_level, rng))
        .collect();
    for b in 0..5 {
        let env_ctrl: Vec<f64> = log_env[b].iter().map(|&v| libm::exp(v)).collect();
        let env = upsample(&env_ctrl, ENVELOPE_RATE, n, fs);
        let (lo, hi) = BAND_HZ[b];
        let mut sources = Vec::with_capacity(cfg.n_eeg + 1);
        for s in 0..=cfg.n_eeg {
            let weight = if s == 0 { rho } else { own };
            let gain: Vec<f64> = env.iter().map(|e| e * weight).collect();
            let mut x = vec![0.0; n];
            for _ in 0..OSCILLATORS_PER_BAND {
                let f = rng.uniform_in(lo, hi);
                let phase = rng.uniform_in(0.0, 2.0 * std::f64::consts::PI);
                add_sine(&mut x, &gain, f, phase, fs);
            }
            sources.push(x);
        }
        for (k, ch) in channels.iter_mut().enumerate() {
            for i in 0..n {
                ch[i] += sources[0][i] + sources[k + 1][i];
            }
        }
    }
    for (k, ch) in channels.iter().enumerate() {
        eeg.column_mut(k)
            .assign(&ndarray::ArrayView1::from(ch.as_slice()));
    }

    let n_bw = stream_len(n, cfg.bw_rate_hz, fs);
    let bw = Array2::from_shape_fn((n_bw, 5), |(j, b)| {
        let pos = (j as f64 * ENVELOPE_RATE / cfg.bw_rate_hz).min((n_ctrl - 1) as f64);
        let k = (pos.floor() as usize).min(n_ctrl - 2);
        let f = pos - k as f64;
        let le = log_env[b][k] * (1.0 - f) + log_env[b][k + 1] * f;
        libm::exp(2.0 * le)
    });
    let bw = bw.mapv(|v| v * libm::exp(cfg.bw_noise_sd * rng.normal()));

    let n_hs = stream_len(n, cfg.hs_rate_hz, fs);
    let centres = [
        arousal + 0.5 * task,
        -1.0 + 10.0 * (1.0 - outcome.attention),
        -0.5 - arousal,
        -0.5 * task - 0.5 * arousal,
    ];
    let mut hs = Array2::zeros((n_hs, 4));
    for (c, centre) in centres.iter().enumerate() {
        let offset = 2.0 * cfg.hs_noise_sd * rng.normal();
        let noise = ar1(n_hs, 0.8, cfg.hs_noise_sd, rng);
        for j in 0..n_hs {
            hs[[j, c]] = 100.0 * logistic(centre + offset + noise[j]);
        }
    }

    let n_hr = stream_len(n, cfg.hr_rate_hz, fs);
    let level = profile.hr_base + cfg.hr_gain * arousal;
    let noise = ar1(n_hr, 0.9, cfg.hr_noise_sd, rng);
    let hr = Array2::from_shape_fn((n_hr, 1), |(j, _)| level + noise[j]);

    PhysioBundle {
        eeg: Stream::new(fs, eeg),
        bw: Stream::new(cfg.bw_rate_hz, bw),
        hs: Stream::new(cfg.hs_rate_hz, hs),
        hr: Stream::new(cfg.hr_rate_hz, hr),
    }
}
