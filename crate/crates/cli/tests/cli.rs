use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use tempora_cli::config::RESOLVED_CONFIG_FILE;
use tempora_cli::report::Table;

const TOY_CONFIG: &str = "\
seed = 5
[cohort]
n_participants = 8
trials_per_condition = 1
timing_noise_mean = 6.0
base_rate_mean = 1.05
[model]
d_model = 32
widths = [12, 8, 4, 4, 4]
hidden = [4, 4, 4, 2, 2]
pool_strides = [16, 16]
layers = 1
heads = 2
ffn = 32
head_hidden = 16
[train]
max_epochs = 3
patience = 2
";

fn tempora(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tempora"))
        .args(args)
        .env_remove("TEMPORA_SEED")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn toy_dataset(root: &Path) -> (String, String) {
    let config = root.join("toy.toml");
    std::fs::write(&config, TOY_CONFIG).unwrap();
    let data = root.join("data");
    let out = tempora(&["synth", "--config", s(&config), "--out", s(&data)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    (s(&config).to_string(), s(&data).to_string())
}

#[test]
fn help_and_version_succeed() {
    assert_eq!(code(&tempora(&["--help"])), 0);
    assert_eq!(code(&tempora(&["--version"])), 0);
    assert_eq!(code(&tempora(&["train", "--help"])), 0);
}

#[test]
fn usage_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&tempora(&["frobnicate"])), 1);
    assert_eq!(code(&tempora(&["synth"])), 1);
    assert_eq!(
        code(&tempora(&[
            "synth",
            "--out",
            s(dir.path()),
            "--jobs",
            "many"
        ])),
        1
    );
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "sed = 3\n").unwrap();
    assert_eq!(
        code(&tempora(&[
            "synth",
            "--config",
            s(&bad),
            "--out",
            s(dir.path())
        ])),
        1
    );
    let out = Command::new(env!("CARGO_BIN_EXE_tempora"))
        .args(["synth", "--out", s(dir.path())])
        .env("TEMPORA_SEED", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(code(&out), 1);
}

#[test]
fn data_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nothing-here");
    let out = dir.path().join("out");
    assert_eq!(
        code(&tempora(&[
            "train",
            "--input",
            s(&missing),
            "--out",
            s(&out)
        ])),
        2
    );
    assert_eq!(
        code(&tempora(&[
            "analyze",
            "--input",
            s(&missing),
            "--out",
            s(&out)
        ])),
        2
    );
    assert_eq!(
        code(&tempora(&[
            "report",
            "--input",
            s(&missing),
            "--out",
            s(&out)
        ])),
        2
    );

    let file = dir.path().join("plain-file");
    std::fs::write(&file, "x").unwrap();
    assert_eq!(code(&tempora(&["synth", "--out", s(&file.join("sub"))])), 2);
}

#[test]
fn toy_pipeline_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let (config, data) = toy_dataset(dir.path());
    let train = dir.path().join("train");
    let analyze = dir.path().join("analyze");
    let report = dir.path().join("report");

    let start = Instant::now();
    let out = tempora(&[
        "train",
        "--config",
        &config,
        "--input",
        &data,
        "--out",
        s(&train),
        "--baselines",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(start.elapsed() < Duration::from_secs(60));
    let metrics = Table::read(&train.join("metrics.csv")).unwrap();
    assert_eq!(
        metrics.header,
        ["model", "fold", "n", "accuracy", "macro_f1", "uar"]
    );
    let models: Vec<&str> = metrics.rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(
        models,
        ["NB", "SVM-LR", "SVM-RBF", "CNN", "BiLSTM", "TPM-Net"]
    );
    for name in ["cnn.ckpt", "bilstm.ckpt", "tpm-net.ckpt"] {
        assert!(train.join("checkpoints").join(name).is_file());
    }
    let confusion = Table::read(&train.join("confusion.csv")).unwrap();
    assert_eq!(confusion.rows.len(), 18);
    assert!(Table::read(&train.join("history.csv")).unwrap().rows.len() >= 3);

    let out = tempora(&["analyze", "--input", &data, "--out", s(&analyze)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let panels = Table::read(&analyze.join("rstc_report.csv")).unwrap();
    for panel in ["absolute", "relative"] {
        assert_eq!(panels.rows.iter().filter(|r| r[0] == panel).count(), 6);
    }
    assert!(analyze.join("correlation_matrix.csv").is_file());
    assert!(analyze.join("effects.csv").is_file());

    let args = [
        "report",
        "--input",
        s(&train),
        s(&analyze),
        "--out",
        s(&report),
    ];
    assert_eq!(code(&tempora(&args)), 0);
    let summary = std::fs::read_to_string(report.join("summary.md")).unwrap();
    assert!(summary.contains("## Model comparison"));
    assert!(summary.contains("| TPM-Net |"));
    assert!(summary.contains("| UX |"));
    assert_eq!(code(&tempora(&args)), 0);
    assert_eq!(
        std::fs::read_to_string(report.join("summary.md")).unwrap(),
        summary
    );

    for d in [&train, &analyze, &report] {
        assert!(d.join(RESOLVED_CONFIG_FILE).is_file());
    }
}

#[test]
fn cross_validation_writes_one_row_per_fold() {
    let dir = tempfile::tempdir().unwrap();
    let (config, data) = toy_dataset(dir.path());
    let train = dir.path().join("train");
    let out = tempora(&[
        "train",
        "--config",
        &config,
        "--input",
        &data,
        "--out",
        s(&train),
        "--cv",
        "3",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let metrics = Table::read(&train.join("metrics.csv")).unwrap();
    let folds: Vec<&str> = metrics.rows.iter().map(|r| r[1].as_str()).collect();
    assert_eq!(folds, ["1", "2", "3"]);
    let summary = Table::read(&train.join("cv_summary.csv")).unwrap();
    assert_eq!(summary.rows.len(), 1);
    assert_eq!(summary.rows[0][1], "3");
}

#[test]
fn seed_flag_beats_environment() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("tiny.toml");
    std::fs::write(
        &config,
        "seed = 1\n[cohort]\nn_participants = 1\ntrials_per_condition = 1\n",
    )
    .unwrap();
    let run = |sub: &str, env: Option<&str>, flag: Option<&str>| {
        let out_dir = dir.path().join(sub);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_tempora"));
        cmd.args(["synth", "--config", s(&config), "--out", s(&out_dir)]);
        if let Some(seed) = flag {
            cmd.args(["--seed", seed]);
        }
        match env {
            Some(v) => cmd.env("TEMPORA_SEED", v),
            None => cmd.env_remove("TEMPORA_SEED"),
        };
        assert!(cmd.output().unwrap().status.success());
        std::fs::read_to_string(out_dir.join(RESOLVED_CONFIG_FILE)).unwrap()
    };
    assert!(run("a", None, None).starts_with("seed = 1\n"));
    assert!(run("b", Some("8"), None).starts_with("seed = 8\n"));
    assert!(run("c", Some("8"), Some("9")).starts_with("seed = 9\n"));
}
