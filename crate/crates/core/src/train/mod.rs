//! Splitting, optimisation, early stopping, cross-validation and metrics.

mod adam;
mod cv;
mod metrics;
mod split;
mod trainer;

pub use adam::{Adam, AdamConfig};
pub use cv::{cross_validate, folds, CvReport, Fold};
pub use metrics::{argmax_label, MetricSummary, Metrics};
pub use split::{
    fold_assignment, make_splits, split_validation, SplitPlan, TEST_FRACTION, VAL_FRACTION,
};
pub use trainer::{class_weights, evaluate, predict, train, EpochRecord, History, TrainConfig};
