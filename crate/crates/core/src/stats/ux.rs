use std::ops::Sub;

use crate::error::{Error, Result};
use crate::trial::QuestionnaireRecord;

/// Dimension sums of one questionnaire. `ueq = pq + ues + itq + eq`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UxScores {
    pub pq: f64,
    pub ues: f64,
    pub itq: f64,
    pub eq: f64,
    pub ueq: f64,
    pub tlx: f64,
}

/// Report rows in table order: overall UX, presence, engagement, immersion, emotion, cognitive load.
pub const UX_ROWS: [&str; 6] = [
    "UX",
    "Presence",
    "Engagement",
    "Immersion",
    "Emotion",
    "Cognitive Load",
];

impl UxScores {
    pub fn rows(&self) -> [f64; 6] {
        [self.ueq, self.pq, self.ues, self.itq, self.eq, self.tlx]
    }
}

impl Sub for UxScores {
    type Output = UxScores;

    fn sub(self, b: UxScores) -> UxScores {
        UxScores {
            pq: self.pq - b.pq,
            ues: self.ues - b.ues,
            itq: self.itq - b.itq,
            eq: self.eq - b.eq,
            ueq: self.ueq - b.ueq,
            tlx: self.tlx - b.tlx,
        }
    }
}

pub fn score_questionnaire(q: &QuestionnaireRecord) -> Result<UxScores> {
    if !q.in_range() {
        return Err(Error::invalid("questionnaire item outside 1..=7"));
    }
    let sum = |items: &[u8]| items.iter().map(|&v| f64::from(v)).sum::<f64>();
    let (pq, ues, itq, eq) = (sum(&q.pq), sum(&q.ues), sum(&q.itq), f64::from(q.eq));
    Ok(UxScores {
        pq,
        ues,
        itq,
        eq,
        ueq: pq + ues + itq + eq,
        tlx: sum(&q.tlx),
    })
}

/// Condition scores minus baseline scores.
pub fn relative_scores(condition: &UxScores, baseline: &UxScores) -> UxScores {
    *condition - *baseline
}
