//! Preprocessing, splitting and model training shared by the `train` command and the test suite.

use tempora_core::baselines::{
    summarize, BiLstmBaseline, CnnBaseline, Kernel, NaiveBayes, Standardizer, Svm,
};
use tempora_core::nn::{ParamStore, SequenceModel, TpmNet};
use tempora_core::rng::derive_path;
use tempora_core::signal::{prepare_trials, PreparedTrial};
use tempora_core::train::{
    evaluate, folds, make_splits, split_validation, train, History, Metrics, TrainConfig,
};
use tempora_core::trial::{validate_dataset, Dataset, Label, TrialRecord};
use tempora_core::{Error, Result};

use crate::config::RunConfig;

/// Model names in comparison-table order.
pub const MODELS: [&str; 6] = ["NB", "SVM-LR", "SVM-RBF", "CNN", "BiLSTM", "TPM-Net"];

/// One model evaluated on one test set.
#[derive(Clone, Debug)]
pub struct ModelRun {
    pub model: &'static str,
    /// 1-based fold, `None` for the hold-out split.
    pub fold: Option<usize>,
    pub metrics: Metrics,
    pub history: Option<History>,
    /// Checkpoint header and trained parameters of sequence models.
    pub checkpoint: Option<(String, ParamStore)>,
}

/// Validates the dataset and preprocesses its valid trials.
pub fn prepare_dataset(dataset: &Dataset, cfg: &RunConfig) -> Result<Vec<PreparedTrial>> {
    let violations = validate_dataset(dataset);
    if !violations.is_empty() {
        return Err(Error::Validation(violations));
    }
    let trials: Vec<&TrialRecord> = dataset.valid_trials().collect();
    if trials.is_empty() {
        return Err(Error::invalid("dataset has no valid trials"));
    }
    prepare_trials(&trials, &cfg.prep)
}

struct Split<'a> {
    fold: Option<usize>,
    fit: Vec<&'a PreparedTrial>,
    val: Vec<&'a PreparedTrial>,
    test: Vec<&'a PreparedTrial>,
    /// Feature rows of fit ∪ val and of test, for the classical models.
    pool_features: Vec<Vec<f64>>,
    pool_labels: Vec<Label>,
    test_features: Vec<Vec<f64>>,
}

/// Trains every requested model on the hold-out split or on each cross-validation fold.
///
/// `log` receives one line per finished model and, with `epochs`, one per training epoch.
pub fn train_models(
    prep: &[PreparedTrial],
    cfg: &RunConfig,
    epochs: bool,
    log: &mut dyn FnMut(&str),
) -> Result<Vec<ModelRun>> {
    let labels: Vec<Label> = prep.iter().map(|t| t.label).collect();
    let features: Vec<Vec<f64>> = if cfg.baselines {
        prep.iter()
            .map(|t| summarize(t, cfg.prep.target_rate_hz).0)
            .collect()
    } else {
        Vec::new()
    };
    let split = |fold: Option<usize>, fit: &[usize], val: &[usize], test: &[usize]| {
        let pool: Vec<usize> = fit.iter().chain(val).copied().collect();
        let rows = |ix: &[usize]| -> Vec<Vec<f64>> {
            if features.is_empty() {
                Vec::new()
            } else {
                ix.iter().map(|&i| features[i].clone()).collect()
            }
        };
        Split {
            fold,
            fit: fit.iter().map(|&i| &prep[i]).collect(),
            val: val.iter().map(|&i| &prep[i]).collect(),
            test: test.iter().map(|&i| &prep[i]).collect(),
            pool_features: rows(&pool),
            pool_labels: pool.iter().map(|&i| labels[i]).collect(),
            test_features: rows(test),
        }
    };

    let mut splits = Vec::new();
    if cfg.cv == 0 {
        let plan = make_splits(&labels, cfg.seed)?;
        splits.push(split(None, &plan.fit, &plan.val, &plan.test));
    } else {
        for f in folds(&labels, cfg.cv, cfg.seed)? {
            let pool_labels: Vec<Label> = f.train.iter().map(|&i| labels[i]).collect();
            let (fit, val) =
                split_validation(&pool_labels, derive_path(cfg.seed, &[f.index as u64 + 1]));
            let fit: Vec<usize> = fit.iter().map(|&j| f.train[j]).collect();
            let val: Vec<usize> = val.iter().map(|&j| f.train[j]).collect();
            splits.push(split(Some(f.index + 1), &fit, &val, &f.test));
        }
    }

    let mut runs = Vec::new();
    for s in &splits {
        runs.extend(run_split(s, prep, cfg, epochs, log)?);
    }
    Ok(runs)
}

fn run_split(
    s: &Split,
    prep: &[PreparedTrial],
    cfg: &RunConfig,
    epochs: bool,
    log: &mut dyn FnMut(&str),
) -> Result<Vec<ModelRun>> {
    let fold_tag = s.fold.unwrap_or(0) as u64;
    let truth: Vec<Label> = s.test.iter().map(|t| t.label).collect();
    let mut model_cfg = cfg.model.clone();
    model_cfg.n_eeg = prep[0].n_eeg();
    let mut runs = Vec::new();
    let report = |run: ModelRun, runs: &mut Vec<ModelRun>, log: &mut dyn FnMut(&str)| {
        log(&format!(
            "{} ({}): {}",
            run.model,
            fold_name(run.fold),
            run.metrics
        ));
        runs.push(run);
    };

    if cfg.baselines {
        let nb = NaiveBayes::fit(&s.pool_features, &s.pool_labels)?;
        let predicted: Vec<Label> = s.test_features.iter().map(|x| nb.predict(x)).collect();
        report(classical("NB", s.fold, &truth, &predicted), &mut runs, log);

        let scaler = Standardizer::fit(&s.pool_features);
        let pool: Vec<Vec<f64>> = s.pool_features.iter().map(|x| scaler.apply(x)).collect();
        let test: Vec<Vec<f64>> = s.test_features.iter().map(|x| scaler.apply(x)).collect();
        for (name, kernel) in [
            ("SVM-LR", Kernel::Linear),
            ("SVM-RBF", Kernel::Rbf { gamma: None }),
        ] {
            let svm = Svm::fit(&pool, &s.pool_labels, kernel, &cfg.svm)?;
            let predicted: Vec<Label> = test.iter().map(|x| svm.predict(x)).collect();
            report(classical(name, s.fold, &truth, &predicted), &mut runs, log);
        }

        let mut cnn = CnnBaseline::new(model_cfg.clone(), derive_path(cfg.seed, &[3, fold_tag]))?;
        report(
            sequence(&mut cnn, s, &cfg.train, 3, epochs, log)?,
            &mut runs,
            log,
        );
        let mut lstm = BiLstmBaseline::new(
            model_cfg.clone(),
            cfg.bilstm_hidden,
            derive_path(cfg.seed, &[4, fold_tag]),
        )?;
        report(
            sequence(&mut lstm, s, &cfg.train, 4, epochs, log)?,
            &mut runs,
            log,
        );
    }
    let mut tpm = TpmNet::new(model_cfg, derive_path(cfg.seed, &[5, fold_tag]))?;
    report(
        sequence(&mut tpm, s, &cfg.train, 5, epochs, log)?,
        &mut runs,
        log,
    );
    Ok(runs)
}

fn classical(
    model: &'static str,
    fold: Option<usize>,
    truth: &[Label],
    predicted: &[Label],
) -> ModelRun {
    ModelRun {
        model,
        fold,
        metrics: Metrics::from_predictions(truth, predicted),
        history: None,
        checkpoint: None,
    }
}

/// `hold-out` or `fold K`.
pub fn fold_name(fold: Option<usize>) -> String {
    fold.map_or("hold-out".to_string(), |f| format!("fold {f}"))
}

fn sequence<M: SequenceModel>(
    model: &mut M,
    s: &Split,
    base: &TrainConfig,
    tag: u64,
    epochs: bool,
    log: &mut dyn FnMut(&str),
) -> Result<ModelRun> {
    let cfg = TrainConfig {
        seed: derive_path(base.seed, &[tag, s.fold.unwrap_or(0) as u64, 1]),
        ..base.clone()
    };
    let name = model.name();
    let history = train(model, &s.fit, &s.val, &cfg, |e| {
        if epochs {
            log(&format!(
                "{name} ({}) epoch {}: loss {:.4}, val macro-F1 {:.4}",
                fold_name(s.fold),
                e.epoch,
                e.train_loss,
                e.val_macro_f1
            ));
        }
    })?;
    let metrics = evaluate(model, &s.test)?;
    let header = format!(
        "{}fold = {}\nbest_epoch = {}\n",
        model.describe(),
        s.fold.unwrap_or(0),
        history.best_epoch
    );
    Ok(ModelRun {
        model: name,
        fold: s.fold,
        metrics,
        history: Some(history),
        checkpoint: Some((header, model.params().clone())),
    })
}
