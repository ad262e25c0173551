//! Synthetic cohorts from an attentional-gate internal-clock model.
//!
//! A pacemaker emits pulses at a participant-specific rate, shifted by the
//! light or music condition. Under a task only a share of attention reaches
//! the accumulator, and the participant stops once the accumulator holds as
//! many pulses as 60 s at the reference rate would produce.

mod config;
mod physio;
mod questionnaire;

use std::collections::BTreeMap;

use rayon::prelude::*;

pub use config::CohortConfig;
pub use physio::synth_physio;
pub use questionnaire::{synth_questionnaire, Shocks, UxCalibration};

use crate::error::Result;
use crate::rng::{derive_path, Rng};
use crate::trial::{
    mean_estimate, ConditionCode, Dataset, Group, LightColor, MusicTempo, TrialRecord,
    TARGET_SECONDS,
};

/// Shortest and longest produced duration, seconds.
pub const T_RANGE: (f64, f64) = (10.0, 180.0);

const PROFILE_STREAM: u64 = 1;
const TIME_STREAM: u64 = 2;
const PHYSIO_STREAM: u64 = 3;
const QUESTIONNAIRE_STREAM: u64 = 4;
const GROUP_STREAM: u64 = 5;
const SHOCK_STREAM: u64 = 6;

/// Latent traits of one simulated participant.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticipantProfile {
    /// Pacemaker pulses per second at neutral conditions.
    pub base_rate: f64,
    pub reference_rate: f64,
    pub color_sensitivity: f64,
    pub music_sensitivity: f64,
    /// Share of pulses gated into the accumulator under a task, in [0.05, 1].
    pub attention_task: f64,
    pub timing_noise_sd: f64,
    pub rate_jitter_sd: f64,
    /// ΔUEQ points per second of Δt̂; set once the cohort's Δt̂ spread is known.
    pub ux_slope: f64,
    pub ux_noise_sd: f64,
    /// Baseline item levels: pq, ues, itq, eq, tlx (3 + 3 + 3 + 1 + 2).
    pub ux_levels: [f64; 12],
    pub band_offsets: [f64; 5],
    pub hr_base: f64,
}

impl ParticipantProfile {
    /// Zero-noise participant whose clock runs at the reference rate.
    pub fn neutral() -> Self {
        Self {
            base_rate: 1.0,
            reference_rate: 1.0,
            color_sensitivity: 1.0,
            music_sensitivity: 1.0,
            attention_task: 1.0,
            timing_noise_sd: 0.0,
            rate_jitter_sd: 0.0,
            ux_slope: 0.0,
            ux_noise_sd: 0.0,
            ux_levels: [4.0; 12],
            band_offsets: [0.0; 5],
            hr_base: 72.0,
        }
    }
}

pub fn sample_participant(cfg: &CohortConfig, rng: &mut Rng) -> ParticipantProfile {
    let base_rate = rng
        .gaussian(cfg.base_rate_mean, cfg.base_rate_sd)
        .max(cfg.base_rate_floor);
    let color_sensitivity = rng.gaussian(1.0, cfg.sensitivity_sd);
    let music_sensitivity = rng.gaussian(1.0, cfg.sensitivity_sd);
    let attention_task = rng
        .gaussian(cfg.attention_mean, cfg.attention_sd)
        .clamp(0.05, 1.0);
    let timing_noise_sd = rng
        .gaussian(cfg.timing_noise_mean, cfg.timing_noise_sd)
        .abs();
    let ux_levels = std::array::from_fn(|_| rng.gaussian(cfg.ux_level_mean, cfg.ux_level_sd));
    let band_offsets = std::array::from_fn(|_| rng.gaussian(0.0, cfg.band_offset_sd));
    let hr_base = rng.gaussian(cfg.hr_mean, cfg.hr_sd);
    ParticipantProfile {
        base_rate,
        reference_rate: cfg.reference_rate,
        color_sensitivity,
        music_sensitivity,
        attention_task,
        timing_noise_sd,
        rate_jitter_sd: cfg.rate_jitter_sd,
        ux_slope: 0.0,
        ux_noise_sd: 0.0,
        ux_levels,
        band_offsets,
        hr_base,
    }
}

/// Log-factor applied to the clock rate by the light or music of a condition.
pub fn clock_shift(
    cfg: &CohortConfig,
    profile: &ParticipantProfile,
    condition: &ConditionCode,
) -> f64 {
    let color = match condition.color {
        LightColor::White => 0.0,
        LightColor::Red => -cfg.color_effect,
        LightColor::Blue => cfg.color_effect,
    };
    let music = match condition.music {
        MusicTempo::None => 0.0,
        MusicTempo::Fast => cfg.music_effect,
        MusicTempo::Slow => -cfg.music_effect,
    };
    color * profile.color_sensitivity + music * profile.music_sensitivity
}

/// Latent state of one simulated trial.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialOutcome {
    /// Produced duration, seconds.
    pub t: f64,
    /// Pacemaker rate during the trial.
    pub clock_rate: f64,
    /// Share of pulses reaching the accumulator.
    pub attention: f64,
}

impl TrialOutcome {
    /// Log of the effective accumulation rate relative to the reference.
    pub fn speed(&self, reference_rate: f64) -> f64 {
        libm::log(self.attention * self.clock_rate / reference_rate)
    }
}

pub fn simulate_trial(
    cfg: &CohortConfig,
    profile: &ParticipantProfile,
    condition: &ConditionCode,
    rng: &mut Rng,
) -> TrialOutcome {
    let shift = clock_shift(cfg, profile, condition) + profile.rate_jitter_sd * rng.normal();
    let clock_rate = profile.base_rate * libm::exp(shift);
    let attention = if condition.task {
        profile.attention_task
    } else {
        1.0
    };
    let pulses_needed = TARGET_SECONDS * profile.reference_rate;
    let t = pulses_needed / (attention * clock_rate) + profile.timing_noise_sd * rng.normal();
    TrialOutcome {
        t: t.clamp(T_RANGE.0, T_RANGE.1),
        clock_rate,
        attention,
    }
}

/// Participant identifier for a 0-based index.
pub fn participant_id(i: usize) -> String {
    format!("P{:02}", i + 1)
}

/// Balanced random group assignment.
pub fn assign_groups(n: usize, seed: u64) -> Vec<Group> {
    let mut groups: Vec<Group> = (0..n).map(|i| Group::ALL[i % 4]).collect();
    Rng::new(derive_path(seed, &[GROUP_STREAM])).shuffle(&mut groups);
    groups
}

struct Simulated {
    id: String,
    group: Group,
    profile: ParticipantProfile,
    trials: Vec<(ConditionCode, u8, TrialOutcome)>,
}

/// Rescales the base rates of each group to the configured mean and spread exactly,
/// so the cohort's class mix does not hinge on a few extreme draws.
pub fn match_base_rates(cfg: &CohortConfig, profiles: &mut [ParticipantProfile], groups: &[Group]) {
    for g in Group::ALL {
        let idx: Vec<usize> = (0..profiles.len()).filter(|&i| groups[i] == g).collect();
        if idx.len() < 2 {
            continue;
        }
        let n = idx.len() as f64;
        let mean = idx.iter().map(|&i| profiles[i].base_rate).sum::<f64>() / n;
        let var = idx
            .iter()
            .map(|&i| (profiles[i].base_rate - mean).powi(2))
            .sum::<f64>()
            / (n - 1.0);
        let sd = var.sqrt();
        for &i in &idx {
            let z = if sd > 0.0 {
                (profiles[i].base_rate - mean) / sd
            } else {
                0.0
            };
            profiles[i].base_rate =
                (cfg.base_rate_mean + cfg.base_rate_sd * z).max(cfg.base_rate_floor);
        }
    }
}

fn simulate_participant(
    cfg: &CohortConfig,
    index: usize,
    group: Group,
    profile: ParticipantProfile,
) -> Simulated {
    let p = index as u64;
    let mut trials = Vec::new();
    let [c1, c2] = group.conditions();
    for condition in [group.baseline(), c1, c2] {
        for k in 1..=cfg.trials_per_condition {
            let mut rng = Rng::derived(
                cfg.seed,
                &[TIME_STREAM, p, condition.index() as u64, k as u64],
            );
            trials.push((
                condition,
                k as u8,
                simulate_trial(cfg, &profile, &condition, &mut rng),
            ));
        }
    }
    Simulated {
        id: participant_id(index),
        group,
        profile,
        trials,
    }
}

fn mean_t(trials: &[(ConditionCode, u8, TrialOutcome)], condition: &ConditionCode) -> f64 {
    let ts: Vec<f64> = trials
        .iter()
        .filter(|(c, _, _)| c == condition)
        .map(|(_, _, o)| o.t)
        .collect();
    ts.iter().sum::<f64>() / ts.len() as f64
}

/// Simulates every participant, then draws questionnaires calibrated to the
/// cohort's spread of Δt̂, then renders physiology.
///
/// The latent UX and emotion shocks are made exactly uncorrelated with the
/// cohort's Δt̂ before use, so the realised correlations sit at their targets
/// up to item noise and rounding.
pub fn generate_cohort(cfg: &CohortConfig) -> Result<Dataset> {
    cfg.validate()?;
    let groups = assign_groups(cfg.n_participants, cfg.seed);
    let mut profiles: Vec<ParticipantProfile> = (0..cfg.n_participants)
        .map(|i| {
            sample_participant(
                cfg,
                &mut Rng::derived(cfg.seed, &[PROFILE_STREAM, i as u64]),
            )
        })
        .collect();
    match_base_rates(cfg, &mut profiles, &groups);
    let mut people: Vec<Simulated> = profiles
        .into_par_iter()
        .enumerate()
        .map(|(i, p)| simulate_participant(cfg, i, groups[i], p))
        .collect();

    let mut entries = Vec::new();
    for (i, s) in people.iter().enumerate() {
        let base = mean_t(&s.trials, &s.group.baseline());
        for c in s.group.conditions() {
            entries.push((i, c, mean_t(&s.trials, &c) - base));
        }
    }
    let deltas: Vec<f64> = entries.iter().map(|e| e.2).collect();
    let calibration = UxCalibration::solve(cfg, &deltas);
    for s in &mut people {
        calibration.apply(&mut s.profile);
    }
    let mut draws: Vec<Shocks> = entries
        .iter()
        .map(|(i, c, _)| {
            Shocks::draw(&mut Rng::derived(
                cfg.seed,
                &[SHOCK_STREAM, *i as u64, c.index() as u64],
            ))
        })
        .collect();
    Shocks::orthogonalize(&mut draws, &deltas);

    let mut questionnaires = BTreeMap::new();
    let q_rng = |i: usize, c: &ConditionCode| {
        Rng::derived(
            cfg.seed,
            &[QUESTIONNAIRE_STREAM, i as u64, c.index() as u64],
        )
    };
    for (i, s) in people.iter().enumerate() {
        let c = s.group.baseline();
        let q = synth_questionnaire(
            cfg,
            &s.profile,
            &c,
            0.0,
            Shocks::default(),
            &mut q_rng(i, &c),
        );
        questionnaires.insert((s.id.clone(), c), q);
    }
    for ((i, c, delta), shocks) in entries.iter().zip(draws) {
        let s = &people[*i];
        let q = synth_questionnaire(cfg, &s.profile, c, *delta, shocks, &mut q_rng(*i, c));
        questionnaires.insert((s.id.clone(), *c), q);
    }

    let work: Vec<(usize, usize)> = people
        .iter()
        .enumerate()
        .flat_map(|(i, s)| (0..s.trials.len()).map(move |j| (i, j)))
        .collect();
    let trials: Vec<TrialRecord> = work
        .into_par_iter()
        .map(|(i, j)| {
            let s = &people[i];
            let (condition, k, outcome) = s.trials[j];
            let mut rng = Rng::derived(
                cfg.seed,
                &[PHYSIO_STREAM, i as u64, condition.index() as u64, k as u64],
            );
            TrialRecord {
                participant_id: s.id.clone(),
                group: s.group,
                condition,
                trial_index: k,
                t: outcome.t,
                physio: synth_physio(cfg, &s.profile, &condition, &outcome, &mut rng),
                valid: true,
            }
        })
        .collect();

    Ok(Dataset {
        trials,
        questionnaires,
        provenance: format!("synthetic cohort seed={}", cfg.seed),
    })
}

/// Mean Δt̂ per condition over participants, from a generated dataset.
pub fn condition_deltas(dataset: &Dataset) -> Result<BTreeMap<ConditionCode, Vec<f64>>> {
    let mut out: BTreeMap<ConditionCode, Vec<f64>> = BTreeMap::new();
    for (id, group) in dataset.participants() {
        let base = mean_estimate(&dataset.condition_trials(&id, &group.baseline()))?;
        for c in group.conditions() {
            let t = mean_estimate(&dataset.condition_trials(&id, &c))?;
            out.entry(c).or_default().push(t - base);
        }
    }
    Ok(out)
}
