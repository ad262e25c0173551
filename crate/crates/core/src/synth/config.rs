use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Every distribution parameter of the cohort generator.
///
/// Rates are in pulses per second relative to `reference_rate`; shifts on the
/// clock rate are multiplicative (`rate · exp(shift)`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CohortConfig {
    pub seed: u64,
    pub n_participants: usize,
    pub trials_per_condition: usize,
    /// Expected share of Underestimated / Acceptable / Overestimated trials.
    pub target_proportions: [f64; 3],
    /// Target correlation between Δt̂ and ΔUEQ.
    pub ux_coupling: f64,
    /// Spread of the coupled ΔUEQ component, in summed item points.
    pub ux_scale: f64,

    pub n_eeg: usize,
    pub eeg_rate_hz: f64,
    pub bw_rate_hz: f64,
    pub hs_rate_hz: f64,
    pub hr_rate_hz: f64,

    pub reference_rate: f64,
    pub base_rate_mean: f64,
    pub base_rate_sd: f64,
    pub base_rate_floor: f64,
    /// Red slows the clock by this log-factor, blue speeds it up.
    pub color_effect: f64,
    /// 140 BPM speeds the clock by this log-factor, 70 BPM slows it.
    pub music_effect: f64,
    pub sensitivity_sd: f64,
    pub attention_mean: f64,
    pub attention_sd: f64,
    pub timing_noise_mean: f64,
    pub timing_noise_sd: f64,
    /// Trial-to-trial log-rate jitter.
    pub rate_jitter_sd: f64,

    /// Gain of inter-channel EEG coupling on the log clock speed.
    pub coherence_gain: f64,
    /// Trial noise on the coupling, in log clock-speed units.
    pub coherence_noise: f64,
    /// Beta log-amplitude change per unit log clock speed (negative: faster clock, less beta).
    pub beta_slope: f64,
    /// Alpha log-amplitude change under task.
    pub alpha_task_shift: f64,
    pub band_jitter_sd: f64,
    pub band_offset_sd: f64,
    /// Depth of slow log-amplitude modulation of every band.
    pub envelope_depth: f64,
    pub pink_noise_level: f64,
    pub bw_noise_sd: f64,
    pub hs_noise_sd: f64,
    pub hr_mean: f64,
    pub hr_sd: f64,
    /// Heart-rate change per unit log clock rate.
    pub hr_gain: f64,
    pub hr_noise_sd: f64,

    pub ux_level_mean: f64,
    pub ux_level_sd: f64,
    pub item_noise_sd: f64,
    pub eq_noise_sd: f64,
    /// Task-load increase of each TLX item.
    pub tlx_task_shift: f64,
}

impl Default for CohortConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            n_participants: 56,
            trials_per_condition: 3,
            target_proportions: [0.5, 0.4, 0.1],
            ux_coupling: 0.65,
            ux_scale: 4.0,
            n_eeg: 2,
            eeg_rate_hz: 256.0,
            bw_rate_hz: 10.0,
            hs_rate_hz: 1.0,
            hr_rate_hz: 1.0,
            reference_rate: 1.0,
            base_rate_mean: 0.92,
            base_rate_sd: 0.22,
            base_rate_floor: 0.3,
            color_effect: 0.07,
            music_effect: 0.07,
            sensitivity_sd: 0.35,
            attention_mean: 0.9,
            attention_sd: 0.05,
            timing_noise_mean: 3.0,
            timing_noise_sd: 0.7,
            rate_jitter_sd: 0.04,
            coherence_gain: 3.0,
            coherence_noise: 0.12,
            beta_slope: -1.0,
            alpha_task_shift: -0.3,
            band_jitter_sd: 0.25,
            band_offset_sd: 0.2,
            envelope_depth: 0.3,
            pink_noise_level: 0.5,
            bw_noise_sd: 0.1,
            hs_noise_sd: 0.3,
            hr_mean: 72.0,
            hr_sd: 8.0,
            hr_gain: 10.0,
            hr_noise_sd: 2.0,
            ux_level_mean: 4.5,
            ux_level_sd: 0.5,
            item_noise_sd: 0.35,
            eq_noise_sd: 0.8,
            tlx_task_shift: 1.5,
        }
    }
}

impl CohortConfig {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        let sum: f64 = self.target_proportions.iter().sum();
        if (sum - 1.0).abs() > 1e-9 || self.target_proportions.iter().any(|&p| p < 0.0) {
            bad.push(format!(
                "target_proportions must be non-negative and sum to 1, got {sum}"
            ));
        }
        if self.n_participants == 0 {
            bad.push("n_participants must be positive".into());
        }
        if self.trials_per_condition == 0 {
            bad.push("trials_per_condition must be positive".into());
        }
        if self.n_eeg == 0 {
            bad.push("n_eeg must be positive".into());
        }
        if !(-1.0..=1.0).contains(&self.ux_coupling) {
            bad.push(format!(
                "ux_coupling must lie in [-1, 1], got {}",
                self.ux_coupling
            ));
        }
        for (name, v) in [
            ("eeg_rate_hz", self.eeg_rate_hz),
            ("bw_rate_hz", self.bw_rate_hz),
            ("hs_rate_hz", self.hs_rate_hz),
            ("hr_rate_hz", self.hr_rate_hz),
            ("reference_rate", self.reference_rate),
            ("base_rate_mean", self.base_rate_mean),
            ("base_rate_floor", self.base_rate_floor),
        ] {
            if !(v.is_finite() && v > 0.0) {
                bad.push(format!("{name} must be positive, got {v}"));
            }
        }
        for (name, v) in [
            ("ux_scale", self.ux_scale),
            ("base_rate_sd", self.base_rate_sd),
            ("sensitivity_sd", self.sensitivity_sd),
            ("attention_sd", self.attention_sd),
            ("timing_noise_mean", self.timing_noise_mean),
            ("timing_noise_sd", self.timing_noise_sd),
            ("rate_jitter_sd", self.rate_jitter_sd),
            ("coherence_noise", self.coherence_noise),
            ("band_jitter_sd", self.band_jitter_sd),
            ("band_offset_sd", self.band_offset_sd),
            ("envelope_depth", self.envelope_depth),
            ("pink_noise_level", self.pink_noise_level),
            ("bw_noise_sd", self.bw_noise_sd),
            ("hs_noise_sd", self.hs_noise_sd),
            ("hr_sd", self.hr_sd),
            ("hr_noise_sd", self.hr_noise_sd),
            ("ux_level_sd", self.ux_level_sd),
            ("item_noise_sd", self.item_noise_sd),
            ("eq_noise_sd", self.eq_noise_sd),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                bad.push(format!("{name} must be non-negative, got {v}"));
            }
        }
        if !(0.05..=1.0).contains(&self.attention_mean) {
            bad.push(format!(
                "attention_mean must lie in [0.05, 1], got {}",
                self.attention_mean
            ));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::invalid(bad.join("; ")))
        }
    }
}
