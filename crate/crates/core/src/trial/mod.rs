//! Trials, experimental conditions, labels and questionnaires.

mod store;
mod validate;

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::signal::PhysioBundle;

pub use store::{load_dataset, store_dataset, MANIFEST_FILE, SCHEMA_VERSION};
pub use validate::validate_dataset;

/// Target duration participants try to reproduce, seconds.
pub const TARGET_SECONDS: f64 = 60.0;
/// Lower edge of the acceptably-accurate band (inclusive).
pub const ACCEPTABLE_LOW: f64 = 51.0;
/// Lower edge of the underestimated band (inclusive).
pub const UNDERESTIMATED_LOW: f64 = 69.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LightColor {
    White,
    Red,
    Blue,
}

impl LightColor {
    pub fn code(self) -> u8 {
        match self {
            LightColor::White => 0,
            LightColor::Red => 1,
            LightColor::Blue => 2,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(LightColor::White),
            1 => Some(LightColor::Red),
            2 => Some(LightColor::Blue),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MusicTempo {
    None,
    /// 140 BPM.
    Fast,
    /// 70 BPM.
    Slow,
}

impl MusicTempo {
    pub fn code(self) -> u8 {
        match self {
            MusicTempo::None => 0,
            MusicTempo::Fast => 1,
            MusicTempo::Slow => 2,
        }
    }

    pub fn from_code(m: u8) -> Option<Self> {
        match m {
            0 => Some(MusicTempo::None),
            1 => Some(MusicTempo::Fast),
            2 => Some(MusicTempo::Slow),
            _ => None,
        }
    }
}

/// Experimental condition: task flag, light color and music tempo.
///
/// At most one of color and music departs from neutral; `(White, None)` is the
/// baseline for each task setting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConditionCode {
    pub task: bool,
    pub color: LightColor,
    pub music: MusicTempo,
}

impl ConditionCode {
    /// Number of distinct codes (2 task settings × 5 scene settings).
    pub const VOCABULARY: usize = 10;

    pub fn new(task: bool, color: LightColor, music: MusicTempo) -> Result<Self> {
        if color != LightColor::White && music != MusicTempo::None {
            return Err(Error::invalid(format!(
                "condition combines color {} with music {}",
                color.code(),
                music.code()
            )));
        }
        Ok(Self { task, color, music })
    }

    /// Builds from the numeric `cl`, `c`, `m` codes used on disk.
    pub fn from_codes(cl: u8, c: u8, m: u8) -> Result<Self> {
        let task = match cl {
            0 => false,
            1 => true,
            _ => return Err(Error::invalid(format!("cl must be 0 or 1, got {cl}"))),
        };
        let color = LightColor::from_code(c)
            .ok_or_else(|| Error::invalid(format!("c must be 0, 1 or 2, got {c}")))?;
        let music = MusicTempo::from_code(m)
            .ok_or_else(|| Error::invalid(format!("m must be 0, 1 or 2, got {m}")))?;
        Self::new(task, color, music)
    }

    pub fn baseline(task: bool) -> Self {
        Self {
            task,
            color: LightColor::White,
            music: MusicTempo::None,
        }
    }

    pub fn is_baseline(&self) -> bool {
        self.color == LightColor::White && self.music == MusicTempo::None
    }

    /// Dense index in `0..VOCABULARY`, used as the zeitgeber embedding row.
    pub fn index(&self) -> usize {
        let scene = match (self.color, self.music) {
            (LightColor::White, MusicTempo::None) => 0,
            (LightColor::Red, _) => 1,
            (LightColor::Blue, _) => 2,
            (_, MusicTempo::Fast) => 3,
            (_, MusicTempo::Slow) => 4,
        };
        scene + if self.task { 5 } else { 0 }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        if i >= Self::VOCABULARY {
            return None;
        }
        let task = i >= 5;
        let (color, music) = match i % 5 {
            0 => (LightColor::White, MusicTempo::None),
            1 => (LightColor::Red, MusicTempo::None),
            2 => (LightColor::Blue, MusicTempo::None),
            3 => (LightColor::White, MusicTempo::Fast),
            _ => (LightColor::White, MusicTempo::Slow),
        };
        Some(Self { task, color, music })
    }

    pub fn all() -> impl Iterator<Item = ConditionCode> {
        (0..Self::VOCABULARY).filter_map(Self::from_index)
    }

    /// `cl{0,1}_c{0,1,2}_m{0,1,2}`.
    pub fn tag(&self) -> String {
        format!(
            "cl{}_c{}_m{}",
            u8::from(self.task),
            self.color.code(),
            self.music.code()
        )
    }
}

impl fmt::Display for ConditionCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let scene = match (self.color, self.music) {
            (LightColor::White, MusicTempo::None) => "baseline",
            (LightColor::Red, _) => "red",
            (LightColor::Blue, _) => "blue",
            (_, MusicTempo::Fast) => "140bpm",
            (_, MusicTempo::Slow) => "70bpm",
        };
        write!(f, "{}/{scene}", if self.task { "task" } else { "no-task" })
    }
}

/// Between-subject groups 1-4: task × {color, music}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Group(u8);

impl Group {
    pub const ALL: [Group; 4] = [Group(1), Group(2), Group(3), Group(4)];

    pub fn new(g: u8) -> Result<Self> {
        if (1..=4).contains(&g) {
            Ok(Group(g))
        } else {
            Err(Error::invalid(format!("group must be 1..=4, got {g}")))
        }
    }

    pub fn number(self) -> u8 {
        self.0
    }

    pub fn task(self) -> bool {
        self.0 <= 2
    }

    pub fn is_color(self) -> bool {
        self.0 == 1 || self.0 == 3
    }

    /// The two non-baseline conditions of the group.
    pub fn conditions(self) -> [ConditionCode; 2] {
        let task = self.task();
        if self.is_color() {
            [
                ConditionCode {
                    task,
                    color: LightColor::Red,
                    music: MusicTempo::None,
                },
                ConditionCode {
                    task,
                    color: LightColor::Blue,
                    music: MusicTempo::None,
                },
            ]
        } else {
            [
                ConditionCode {
                    task,
                    color: LightColor::White,
                    music: MusicTempo::Fast,
                },
                ConditionCode {
                    task,
                    color: LightColor::White,
                    music: MusicTempo::Slow,
                },
            ]
        }
    }

    pub fn baseline(self) -> ConditionCode {
        ConditionCode::baseline(self.task())
    }

    pub fn admits(self, code: &ConditionCode) -> bool {
        code.task == self.task() && (code.is_baseline() || self.conditions().contains(code))
    }
}

/// Three-way perceived-duration class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Underestimated,
    AcceptablyAccurate,
    Overestimated,
}

impl Label {
    pub const ALL: [Label; 3] = [
        Label::Underestimated,
        Label::AcceptablyAccurate,
        Label::Overestimated,
    ];
    pub const COUNT: usize = 3;

    pub fn index(self) -> usize {
        match self {
            Label::Underestimated => 0,
            Label::AcceptablyAccurate => 1,
            Label::Overestimated => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Label::Underestimated => "underestimated",
            Label::AcceptablyAccurate => "acceptable",
            Label::Overestimated => "overestimated",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.name() == s)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Bins a produced duration: `t ≥ 69` underestimated, `51 ≤ t < 69` acceptable,
/// `t < 51` overestimated.
pub fn bin_label(t: f64) -> Result<Label> {
    if !t.is_finite() || t <= 0.0 {
        return Err(Error::invalid(format!(
            "duration must be positive and finite, got {t}"
        )));
    }
    Ok(if t >= UNDERESTIMATED_LOW {
        Label::Underestimated
    } else if t >= ACCEPTABLE_LOW {
        Label::AcceptablyAccurate
    } else {
        Label::Overestimated
    })
}

/// One 60 s production trial.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub participant_id: String,
    pub group: Group,
    pub condition: ConditionCode,
    /// Repetition number, 1..=3.
    pub trial_index: u8,
    /// Elapsed physical time until the participant signalled 60 s.
    pub t: f64,
    pub physio: PhysioBundle,
    pub valid: bool,
}

impl TrialRecord {
    pub fn id(&self) -> String {
        trial_id(&self.participant_id, &self.condition, self.trial_index)
    }

    pub fn label(&self) -> Result<Label> {
        bin_label(self.t)
    }
}

pub(crate) fn trial_id(participant: &str, condition: &ConditionCode, trial_index: u8) -> String {
    format!("{participant}_{}_t{trial_index}", condition.tag())
}

/// Mean produced duration over the (valid) repetitions of one condition.
pub fn mean_estimate(trials: &[&TrialRecord]) -> Result<f64> {
    let first = trials
        .first()
        .ok_or_else(|| Error::invalid("mean estimate of an empty trial list"))?;
    if trials
        .iter()
        .any(|t| t.participant_id != first.participant_id || t.condition != first.condition)
    {
        return Err(Error::invalid(
            "mean estimate over trials from different participants or conditions",
        ));
    }
    Ok(trials.iter().map(|t| t.t).sum::<f64>() / trials.len() as f64)
}

/// Relative subjective time change: condition mean minus baseline mean.
pub fn relative_time(t_condition: f64, t_baseline: f64) -> Result<f64> {
    if !t_condition.is_finite() || !t_baseline.is_finite() {
        return Err(Error::invalid("relative time of non-finite estimates"));
    }
    Ok(t_condition - t_baseline)
}

/// Direction of a relative time change.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RelativeShift {
    /// More time spent than at baseline (Δt̂ > 0).
    Underestimation,
    Overestimation,
    Unchanged,
}

impl RelativeShift {
    pub fn of(delta: f64) -> Self {
        if delta > 0.0 {
            RelativeShift::Underestimation
        } else if delta < 0.0 {
            RelativeShift::Overestimation
        } else {
            RelativeShift::Unchanged
        }
    }
}

/// Post-condition questionnaire, every item on a 1..=7 Likert scale.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct QuestionnaireRecord {
    pub pq: [u8; 3],
    pub ues: [u8; 3],
    pub itq: [u8; 3],
    pub eq: u8,
    pub tlx: [u8; 2],
}

impl QuestionnaireRecord {
    pub fn uniform(v: u8) -> Self {
        Self {
            pq: [v; 3],
            ues: [v; 3],
            itq: [v; 3],
            eq: v,
            tlx: [v; 2],
        }
    }

    pub fn items(&self) -> impl Iterator<Item = u8> + '_ {
        self.pq
            .iter()
            .chain(&self.ues)
            .chain(&self.itq)
            .chain(std::iter::once(&self.eq))
            .chain(&self.tlx)
            .copied()
    }

    pub fn in_range(&self) -> bool {
        self.items().all(|v| (1..=7).contains(&v))
    }
}

pub type QuestionnaireKey = (String, ConditionCode);

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    pub trials: Vec<TrialRecord>,
    pub questionnaires: BTreeMap<QuestionnaireKey, QuestionnaireRecord>,
    /// Generator seed or ingest path.
    pub provenance: String,
}

impl Dataset {
    pub fn valid_trials(&self) -> impl Iterator<Item = &TrialRecord> {
        self.trials.iter().filter(|t| t.valid)
    }

    pub fn participants(&self) -> Vec<(String, Group)> {
        let mut seen: BTreeMap<String, Group> = BTreeMap::new();
        for t in &self.trials {
            seen.entry(t.participant_id.clone()).or_insert(t.group);
        }
        seen.into_iter().collect()
    }

    /// Valid trials of one participant under one condition.
    pub fn condition_trials(
        &self,
        participant: &str,
        condition: &ConditionCode,
    ) -> Vec<&TrialRecord> {
        self.valid_trials()
            .filter(|t| t.participant_id == participant && t.condition == *condition)
            .collect()
    }

    pub fn questionnaire(
        &self,
        participant: &str,
        condition: &ConditionCode,
    ) -> Option<&QuestionnaireRecord> {
        self.questionnaires
            .get(&(participant.to_string(), *condition))
    }
}
