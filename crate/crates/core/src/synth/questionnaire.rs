use super::{CohortConfig, ParticipantProfile};
use crate::rng::Rng;
use crate::trial::{ConditionCode, QuestionnaireRecord};

/// Items that carry the coupled UX shift (presence, engagement, immersion).
const COUPLED_ITEMS: f64 = 9.0;

/// Slope and latent noise that give ΔUEQ the configured correlation with Δt̂.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UxCalibration {
    pub slope: f64,
    pub noise_sd: f64,
}

impl UxCalibration {
    /// `deltas` are the cohort's realised Δt̂ values.
    ///
    /// With slope `k` and Δt̂ variance `V`, the correlation is
    /// `kV^½ / (k²V + σ² + N₀)^½`, where `N₀` is the variance item noise,
    /// rounding and the emotion item add to ΔUEQ; σ is solved from that.
    pub fn solve(cfg: &CohortConfig, deltas: &[f64]) -> Self {
        let n = deltas.len().max(1) as f64;
        let mean = deltas.iter().sum::<f64>() / n;
        let var = deltas.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n;
        let r = cfg.ux_coupling;
        if r == 0.0 || var <= 0.0 {
            return Self {
                slope: 0.0,
                noise_sd: cfg.ux_scale,
            };
        }
        let rounding = 1.0 / 12.0;
        let n0 = 2.0 * COUPLED_ITEMS * (cfg.item_noise_sd.powi(2) + rounding)
            + cfg.eq_noise_sd.powi(2)
            + 2.0 * rounding;
        let slope = r.signum() * cfg.ux_scale / var.sqrt();
        let signal = slope * slope * var;
        let noise_var = (signal * (1.0 / (r * r) - 1.0) - n0).max(0.0);
        Self {
            slope,
            noise_sd: noise_var.sqrt(),
        }
    }

    pub fn apply(&self, profile: &mut ParticipantProfile) {
        profile.ux_slope = self.slope;
        profile.ux_noise_sd = self.noise_sd;
    }
}

/// Standard-normal latent shocks of one condition questionnaire.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Shocks {
    /// Uncoupled part of ΔUEQ.
    pub ux: f64,
    /// Change of the emotion item.
    pub emotion: f64,
}

impl Shocks {
    pub fn draw(rng: &mut Rng) -> Self {
        Self {
            ux: rng.normal(),
            emotion: rng.normal(),
        }
    }

    /// Removes from each shock series its mean and its least-squares component
    /// along `deltas`, then rescales it to unit population variance.
    pub fn orthogonalize(shocks: &mut [Shocks], deltas: &[f64]) {
        let n = shocks.len();
        if n < 3 || deltas.len() != n {
            return;
        }
        let nf = n as f64;
        let dm = deltas.iter().sum::<f64>() / nf;
        let sdd: f64 = deltas.iter().map(|d| (d - dm) * (d - dm)).sum();
        let fix = |get: &dyn Fn(&Shocks) -> f64| -> Vec<f64> {
            let m = shocks.iter().map(get).sum::<f64>() / nf;
            let beta = if sdd > 0.0 {
                shocks
                    .iter()
                    .zip(deltas)
                    .map(|(s, d)| (get(s) - m) * (d - dm))
                    .sum::<f64>()
                    / sdd
            } else {
                0.0
            };
            let r: Vec<f64> = shocks
                .iter()
                .zip(deltas)
                .map(|(s, d)| get(s) - m - beta * (d - dm))
                .collect();
            let sd = (r.iter().map(|v| v * v).sum::<f64>() / nf).sqrt();
            r.into_iter()
                .map(|v| if sd > 0.0 { v / sd } else { 0.0 })
                .collect()
        };
        let ux = fix(&|s| s.ux);
        let emotion = fix(&|s| s.emotion);
        for (k, s) in shocks.iter_mut().enumerate() {
            s.ux = ux[k];
            s.emotion = emotion[k];
        }
    }
}

fn likert(v: f64) -> u8 {
    v.round().clamp(1.0, 7.0) as u8
}

/// Questionnaire after one condition.
///
/// Baselines sit at the participant's item levels. Other conditions shift the
/// coupled items by `(slope·Δt̂ + σ·shocks.ux) / 9` each and the emotion item
/// by `eq_noise_sd · shocks.emotion`.
pub fn synth_questionnaire(
    cfg: &CohortConfig,
    profile: &ParticipantProfile,
    condition: &ConditionCode,
    delta_t: f64,
    shocks: Shocks,
    rng: &mut Rng,
) -> QuestionnaireRecord {
    let (shift, emotion) = if condition.is_baseline() {
        (0.0, 0.0)
    } else {
        let latent = profile.ux_slope * delta_t + profile.ux_noise_sd * shocks.ux;
        (latent / COUPLED_ITEMS, cfg.eq_noise_sd * shocks.emotion)
    };
    let lv = &profile.ux_levels;
    let mut item = |level: f64, sd: f64| likert(level + shift + sd * rng.normal());
    let pq = [0, 1, 2].map(|i| item(lv[i], cfg.item_noise_sd));
    let ues = [3, 4, 5].map(|i| item(lv[i], cfg.item_noise_sd));
    let itq = [6, 7, 8].map(|i| item(lv[i], cfg.item_noise_sd));
    let eq = likert(lv[9] + emotion);
    let load = if condition.task {
        cfg.tlx_task_shift
    } else {
        0.0
    };
    let tlx = [10, 11].map(|i| likert(lv[i] + load + cfg.item_noise_sd * rng.normal()));
    QuestionnaireRecord {
        pq,
        ues,
        itq,
        eq,
        tlx,
    }
}
