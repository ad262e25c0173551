//! The four subcommands and the files they write.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use tempora_core::stats::{rstc_report, Pooling};
use tempora_core::synth::generate_cohort;
use tempora_core::train::MetricSummary;
use tempora_core::trial::{load_dataset, store_dataset, Label};
use tempora_core::Error;

use crate::args::{AnalyzeArgs, Cli, Command, CommonArgs, ReportArgs, SynthArgs, TrainArgs};
use crate::config::{Overrides, RunConfig};
use crate::pipeline::{prepare_dataset, train_models, ModelRun, MODELS};
use crate::{report, CliError};

pub const METRICS_FILE: &str = "metrics.csv";
pub const CONFUSION_FILE: &str = "confusion.csv";
pub const HISTORY_FILE: &str = "history.csv";
pub const CV_SUMMARY_FILE: &str = "cv_summary.csv";
pub const CHECKPOINT_DIR: &str = "checkpoints";
pub const RSTC_FILE: &str = "rstc_report.csv";
pub const MATRIX_FILE: &str = "correlation_matrix.csv";
pub const EFFECTS_FILE: &str = "effects.csv";
pub const SUMMARY_FILE: &str = "summary.md";

/// Runs one parsed command. `env_seed` is the value of `TEMPORA_SEED`, if set.
pub fn run(cli: Cli, env_seed: Option<&str>) -> Result<(), CliError> {
    match cli.command {
        Command::Synth(a) => synth(&a, env_seed),
        Command::Train(a) => train(&a, env_seed),
        Command::Analyze(a) => analyze(&a, env_seed),
        Command::Report(a) => report_cmd(&a, env_seed),
    }
}

fn setup(
    common: &CommonArgs,
    env_seed: Option<&str>,
    extra: Overrides,
) -> Result<RunConfig, CliError> {
    let flags = Overrides {
        cv: extra.cv,
        baselines: extra.baselines,
        ..common.overrides()
    };
    let cfg = RunConfig::resolve(common.config.as_deref(), env_seed, &flags)?;
    fs::create_dir_all(&common.out).map_err(|e| Error::io(&common.out, e))?;
    cfg.echo(&common.out)?;
    Ok(cfg)
}

fn in_pool<T: Send>(
    jobs: usize,
    f: impl FnOnce() -> Result<T, CliError> + Send,
) -> Result<T, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {jobs} worker threads: {e}")))?;
    pool.install(f)
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| Error::io(path, e).into())
}

pub fn synth(a: &SynthArgs, env_seed: Option<&str>) -> Result<(), CliError> {
    let cfg = setup(&a.common, env_seed, Overrides::default())?;
    in_pool(cfg.jobs, || {
        let dataset = generate_cohort(&cfg.cohort)?;
        store_dataset(&dataset, &a.common.out)?;
        eprintln!(
            "wrote {} trials to {}",
            dataset.trials.len(),
            a.common.out.display()
        );
        Ok(())
    })
}

pub fn train(a: &TrainArgs, env_seed: Option<&str>) -> Result<(), CliError> {
    let extra = Overrides {
        cv: a.cv,
        baselines: a.baselines,
        ..Overrides::default()
    };
    let cfg = setup(&a.common, env_seed, extra)?;
    let out = &a.common.out;
    let runs = in_pool(cfg.jobs, || {
        let dataset = load_dataset(&a.input)?;
        let prep = prepare_dataset(&dataset, &cfg)?;
        eprintln!("prepared {} trials", prep.len());
        Ok(train_models(&prep, &cfg, a.verbose, &mut |line| {
            eprintln!("{line}")
        })?)
    })?;
    write(&out.join(METRICS_FILE), &metrics_csv(&runs))?;
    write(&out.join(CONFUSION_FILE), &confusion_csv(&runs))?;
    write(&out.join(HISTORY_FILE), &history_csv(&runs))?;
    if cfg.cv > 0 {
        write(&out.join(CV_SUMMARY_FILE), &cv_summary_csv(&runs))?;
    }
    let dir = out.join(CHECKPOINT_DIR);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    for r in &runs {
        if let Some((header, params)) = &r.checkpoint {
            params.save(&dir.join(checkpoint_name(r)), header)?;
        }
    }
    Ok(())
}

pub fn analyze(a: &AnalyzeArgs, env_seed: Option<&str>) -> Result<(), CliError> {
    let cfg = setup(&a.common, env_seed, Overrides::default())?;
    let pooling = if a.conditions_only {
        Pooling::ConditionsOnly
    } else {
        Pooling::WithBaselines
    };
    let report = in_pool(cfg.jobs, || {
        let dataset = load_dataset(&a.input)?;
        Ok(rstc_report(&dataset, pooling)?)
    })?;
    let out = &a.common.out;
    write(&out.join(RSTC_FILE), &report.panels_csv())?;
    write(&out.join(MATRIX_FILE), &report.matrix_csv())?;
    write(&out.join(EFFECTS_FILE), &report.effects_csv())?;
    Ok(())
}

pub fn report_cmd(a: &ReportArgs, env_seed: Option<&str>) -> Result<(), CliError> {
    setup(&a.common, env_seed, Overrides::default())?;
    let summary = report::summarize(&a.input)?;
    write(&a.common.out.join(SUMMARY_FILE), &summary)
}

fn fold_cell(fold: Option<usize>) -> String {
    fold.map_or("holdout".to_string(), |f| f.to_string())
}

fn checkpoint_name(r: &ModelRun) -> String {
    let base = r.model.to_lowercase();
    match r.fold {
        Some(f) => format!("{base}.fold{f}.ckpt"),
        None => format!("{base}.ckpt"),
    }
}

/// `model,fold,n,accuracy,macro_f1,uar`, one row per model and fold.
pub fn metrics_csv(runs: &[ModelRun]) -> String {
    let mut s = String::from("model,fold,n,accuracy,macro_f1,uar\n");
    for r in runs {
        let m = &r.metrics;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.model,
            fold_cell(r.fold),
            m.total(),
            m.accuracy,
            m.macro_f1,
            m.uar
        );
    }
    s
}

/// Confusion counts, rows are true labels and columns predictions.
pub fn confusion_csv(runs: &[ModelRun]) -> String {
    let cols: Vec<String> = Label::ALL
        .iter()
        .map(|l| format!("pred_{}", l.name()))
        .collect();
    let mut s = format!("model,fold,true_label,{}\n", cols.join(","));
    for r in runs {
        for (l, row) in Label::ALL.iter().zip(r.metrics.confusion) {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                r.model,
                fold_cell(r.fold),
                l.name(),
                row[0],
                row[1],
                row[2]
            );
        }
    }
    s
}

pub fn history_csv(runs: &[ModelRun]) -> String {
    let mut s = String::from("model,fold,epoch,train_loss,val_macro_f1,best_epoch\n");
    for r in runs {
        if let Some(h) = &r.history {
            for e in &h.epochs {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{}",
                    r.model,
                    fold_cell(r.fold),
                    e.epoch,
                    e.train_loss,
                    e.val_macro_f1,
                    h.best_epoch
                );
            }
        }
    }
    s
}

/// Fold mean and population standard deviation per model.
pub fn cv_summary_csv(runs: &[ModelRun]) -> String {
    let mut s = String::from(
        "model,folds,accuracy_mean,accuracy_std,macro_f1_mean,macro_f1_std,uar_mean,uar_std\n",
    );
    for name in MODELS {
        let folds: Vec<_> = runs
            .iter()
            .filter(|r| r.model == name)
            .map(|r| r.metrics)
            .collect();
        if folds.is_empty() {
            continue;
        }
        let m = MetricSummary::of(&folds);
        let _ = writeln!(
            s,
            "{name},{},{},{},{},{},{},{}",
            folds.len(),
            m.mean[0],
            m.std[0],
            m.mean[1],
            m.std[1],
            m.mean[2],
            m.std[2]
        );
    }
    s
}
