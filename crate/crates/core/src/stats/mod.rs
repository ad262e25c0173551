//! Questionnaire scoring, hypothesis tests and the relative-time/UX correlation report.

mod rstc;
mod tests;
mod ux;

pub use rstc::{
    collect_scores, rstc_report, ConditionEffect, ConditionScores, GroupMatrix, PanelRow,
    ParticipantScores, Pooling, RstcReport, TaskContrast, MATRIX_VARS,
};
pub use tests::{
    f_upper, pearson, rm_anova, shapiro_wilk, t_test_independent, t_test_paired, t_two_sided,
    CorrelationEntry, Degenerate, TestResult,
};
pub use ux::{relative_scores, score_questionnaire, UxScores, UX_ROWS};
