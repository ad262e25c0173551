use rayon::prelude::*;

use crate::error::Result;
use crate::trial::Label;

use super::metrics::{MetricSummary, Metrics};
use super::split::fold_assignment;

/// Per-fold metrics with their aggregate.
#[derive(Clone, Debug, PartialEq)]
pub struct CvReport {
    pub folds: Vec<Metrics>,
    pub summary: MetricSummary,
}

/// Training and test indices of one fold.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fold {
    pub index: usize,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

pub fn folds(labels: &[Label], k: usize, seed: u64) -> Result<Vec<Fold>> {
    let assign = fold_assignment(labels, k, seed)?;
    Ok((0..k)
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) =
                (0..labels.len()).partition(|&i| assign[i] == f);
            Fold {
                index: f,
                train,
                test,
            }
        })
        .collect())
}

/// Runs `run_fold` on every stratified fold (in parallel) and aggregates the results in fold order.
pub fn cross_validate<F>(labels: &[Label], k: usize, seed: u64, run_fold: F) -> Result<CvReport>
where
    F: Fn(&Fold) -> Result<Metrics> + Sync,
{
    let plan = folds(labels, k, seed)?;
    let metrics: Vec<Metrics> = plan.par_iter().map(&run_fold).collect::<Result<_>>()?;
    Ok(CvReport {
        summary: MetricSummary::of(&metrics),
        folds: metrics,
    })
}
