//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run a subset with `cargo test --test acceptance -- 3 5`.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use ndarray::Array2;
use serde_json::Value;
use tempora_cli::config::{Overrides, RunConfig};
use tempora_cli::pipeline::{prepare_dataset, train_models};
use tempora_core::baselines::{BiLstmBaseline, CnnBaseline};
use tempora_core::nn::{gradient_check, SequenceModel, TpmNet, TpmNetConfig};
use tempora_core::rng::Rng;
use tempora_core::signal::{
    emd, lowpass_filter, CubicSpline, EmdConfig, PreparedTrial, SplineBoundary, AUX_CHANNELS,
};
use tempora_core::stats::{
    pearson, rm_anova, rstc_report, shapiro_wilk, t_test_independent, t_test_paired, Pooling,
};
use tempora_core::synth::{condition_deltas, generate_cohort, CohortConfig};
use tempora_core::train::Metrics;
use tempora_core::trial::{bin_label, ConditionCode, Label, LightColor, MusicTempo};

type Check = Result<String, String>;
type Criterion = (u32, &'static str, fn() -> Check);

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn workspace() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn random_trial(len: usize, code: usize, label: Label, seed: u64) -> PreparedTrial {
    let mut r = Rng::new(seed);
    PreparedTrial {
        id: format!("r{seed}"),
        channels: Array2::from_shape_simple_fn((len, 2 + AUX_CHANNELS), || r.normal()),
        mask: vec![true; len],
        zeitgeber: ConditionCode::from_index(code).unwrap(),
        label,
    }
}

fn worst_gradient_error<M: SequenceModel>(mut model: M) -> f64 {
    model.params_mut().jitter(0.05, &mut Rng::new(12));
    let trials = [
        random_trial(32, 1, Label::Underestimated, 21),
        random_trial(29, 7, Label::AcceptablyAccurate, 22),
        random_trial(32, 4, Label::Overestimated, 23),
    ];
    let refs: Vec<&PreparedTrial> = trials.iter().collect();
    gradient_check(&mut model, &refs, None)
        .unwrap()
        .iter()
        .map(|g| g.rel_error)
        .fold(0.0, f64::max)
}

fn gradients() -> Check {
    let start = Instant::now();
    let cfg = TpmNetConfig::miniature();
    let errors = [
        (
            "TPM-Net",
            worst_gradient_error(TpmNet::new(cfg.clone(), 11).unwrap()),
        ),
        (
            "CNN",
            worst_gradient_error(CnnBaseline::new(cfg.clone(), 9).unwrap()),
        ),
        (
            "BiLSTM",
            worst_gradient_error(BiLstmBaseline::new(cfg, 3, 9).unwrap()),
        ),
    ];
    let elapsed = start.elapsed();
    let detail: Vec<String> = errors.iter().map(|(m, e)| format!("{m} {e:.2e}")).collect();
    ensure(
        errors.iter().all(|(_, e)| *e < 1e-4) && elapsed < Duration::from_secs(120),
        format!(
            "max relative error {}; {:.1}s",
            detail.join(", "),
            elapsed.as_secs_f64()
        ),
    )
}

/// Amplitude of the `cycles`-per-window DFT bin.
fn bin_amplitude(x: &[f64], cycles: f64) -> f64 {
    let n = x.len() as f64;
    let (mut re, mut im) = (0.0, 0.0);
    for (i, v) in x.iter().enumerate() {
        let phase = 2.0 * std::f64::consts::PI * cycles * i as f64 / n;
        re += v * phase.cos();
        im += v * phase.sin();
    }
    2.0 * (re * re + im * im).sqrt() / n
}

fn preprocessing() -> Check {
    let mut rng = Rng::new(5);
    let mut emd_err: f64 = 0.0;
    for _ in 0..100 {
        let n = 64 + (rng.uniform_in(0.0, 960.0) as usize);
        let x: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let d = emd(&x, &EmdConfig::default());
        for (a, b) in d.reconstruct().iter().zip(&x) {
            emd_err = emd_err.max((a - b).abs());
        }
    }

    let p = |t: f64| t * t * t - 2.0 * t;
    let dp = |t: f64| 3.0 * t * t - 2.0;
    let xs: Vec<f64> = (0..=16).map(|i| i as f64 / 4.0).collect();
    let ys: Vec<f64> = xs.iter().map(|&t| p(t)).collect();
    let spline = CubicSpline::new(&xs, &ys, SplineBoundary::Clamped(dp(0.0), dp(4.0))).unwrap();
    let spline_err = (1..64)
        .map(|i| i as f64 / 16.0)
        .map(|t| (spline.eval(t) - p(t)).abs())
        .fold(0.0, f64::max);

    let fs = 256.0;
    let sine = |f: f64| -> Vec<f64> {
        (0..1024)
            .map(|i| (2.0 * std::f64::consts::PI * f * i as f64 / fs).sin())
            .collect()
    };
    let ratio = |f: f64| {
        let x = sine(f);
        let y = lowpass_filter(&x, fs, 45.0).unwrap();
        let cycles = f * 512.0 / fs;
        bin_amplitude(&y[256..768], cycles) / bin_amplitude(&x[256..768], cycles)
    };
    let (pass, stop) = (ratio(2.0), ratio(100.0));
    let dc = lowpass_filter(&[3.0; 512], fs, 45.0).unwrap();
    let dc_err = dc.iter().map(|v| (v - 3.0).abs()).fold(0.0, f64::max);

    ensure(
        emd_err < 1e-8 && spline_err < 1e-9 && pass >= 0.99 && stop <= 0.1 && dc_err < 1e-9,
        format!(
            "EMD max error {emd_err:.1e}, spline cubic error {spline_err:.1e}, low-pass 2 Hz {pass:.4} / 100 Hz {stop:.2e} / DC {dc_err:.1e}"
        ),
    )
}

fn label_binning() -> Check {
    let below = |v: f64| f64::from_bits(v.to_bits() - 1);
    let cases = [
        (51.0, Label::AcceptablyAccurate),
        (below(51.0), Label::Overestimated),
        (69.0, Label::Underestimated),
        (below(69.0), Label::AcceptablyAccurate),
        (60.0, Label::AcceptablyAccurate),
        (10.0, Label::Overestimated),
        (180.0, Label::Underestimated),
    ];
    let wrong: Vec<String> = cases
        .iter()
        .filter(|(t, l)| bin_label(*t).ok() != Some(*l))
        .map(|(t, _)| format!("{t}"))
        .collect();
    let rejects = [0.0, -1.0, f64::NAN, f64::INFINITY]
        .iter()
        .all(|&t| bin_label(t).is_err());
    ensure(
        wrong.is_empty() && rejects,
        format!(
            "{} boundary cases, misbinned {:?}, invalid t rejected: {rejects}",
            cases.len(),
            wrong
        ),
    )
}

fn statistics_oracle() -> Check {
    let path = workspace().join("crates/core/tests/fixtures/stats_oracle.json");
    let oracle: Value =
        serde_json::from_str(&std::fs::read_to_string(&path).map_err(|e| e.to_string())?).unwrap();
    let vec = |v: &Value| -> Vec<f64> {
        v.as_array()
            .unwrap()
            .iter()
            .map(|x| x.as_f64().unwrap())
            .collect()
    };
    let (mut stat_err, mut p_err): (f64, f64) = (0.0, 0.0);
    let mut count = BTreeMap::new();
    let mut record = |kind: &str, stat: f64, want_stat: &Value, p: f64, want_p: &Value| {
        stat_err = stat_err.max((stat - want_stat.as_f64().unwrap()).abs());
        p_err = p_err.max((p - want_p.as_f64().unwrap()).abs());
        *count.entry(kind.to_string()).or_insert(0) += 1;
    };
    for c in oracle["shapiro"].as_array().unwrap() {
        let r = shapiro_wilk(&vec(&c["x"])).unwrap();
        record("shapiro", r.statistic, &c["w"], r.p, &c["p"]);
    }
    for c in oracle["welch"].as_array().unwrap() {
        let r = t_test_independent(&vec(&c["a"]), &vec(&c["b"])).unwrap();
        record("welch", r.statistic, &c["t"], r.p, &c["p"]);
    }
    for c in oracle["paired"].as_array().unwrap() {
        let r = t_test_paired(&vec(&c["a"]), &vec(&c["b"])).unwrap();
        record("paired", r.statistic, &c["t"], r.p, &c["p"]);
    }
    for c in oracle["anova"].as_array().unwrap() {
        let rows: Vec<Vec<f64>> = c["rows"].as_array().unwrap().iter().map(vec).collect();
        let r = rm_anova(&rows).unwrap();
        record("anova", r.statistic, &c["f"], r.p, &c["p"]);
    }
    for c in oracle["pearson"].as_array().unwrap() {
        let r = pearson(&vec(&c["x"]), &vec(&c["y"])).unwrap();
        record("pearson", r.r, &c["r"], r.p, &c["p"]);
    }
    ensure(
        count.values().all(|&n| n >= 20) && count.len() == 5 && stat_err <= 1e-6 && p_err <= 1e-4,
        format!("cases {count:?}, max statistic error {stat_err:.1e}, max p error {p_err:.1e}"),
    )
}

fn metric_identities() -> Check {
    let m = Metrics::from_confusion([[2, 0, 0], [0, 1, 1], [1, 0, 1]]);
    let shown = format!("{:.4} / {:.4} / {:.4}", m.accuracy, m.macro_f1, m.uar);
    let exact = m.accuracy == 4.0 / 6.0
        && m.uar == 2.0 / 3.0
        && (m.macro_f1 - (0.8 + 2.0 / 3.0 + 0.5) / 3.0).abs() < 1e-15;
    ensure(
        exact && shown == "0.6667 / 0.6556 / 0.6667",
        format!("accuracy / macro-F1 / UAR = {shown}"),
    )
}

fn benchmark() -> Check {
    let start = Instant::now();
    let cfg = RunConfig::resolve(
        Some(&workspace().join("configs/benchmark.toml")),
        None,
        &Overrides::default(),
    )
    .map_err(|e| e.to_string())?;
    let dataset = generate_cohort(&cfg.cohort).map_err(|e| e.to_string())?;
    let prep = prepare_dataset(&dataset, &cfg).map_err(|e| e.to_string())?;
    let runs = train_models(&prep, &cfg, false, &mut |line| eprintln!("  {line}"))
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let acc: BTreeMap<&str, f64> = runs.iter().map(|r| (r.model, r.metrics.accuracy)).collect();
    let get = |m: &str| acc.get(m).copied().unwrap_or(f64::NAN);
    let tpm = get("TPM-Net");
    let classical = ["NB", "SVM-LR", "SVM-RBF"]
        .map(get)
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    let sequence = ["CNN", "BiLSTM"]
        .map(get)
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let strictly_best = acc.iter().all(|(m, a)| *m == "TPM-Net" || *a < tpm);
    let table: Vec<String> = runs
        .iter()
        .map(|r| format!("{} {:.2}%", r.model, 100.0 * r.metrics.accuracy))
        .collect();
    ensure(
        prep.len() == 504
            && acc.len() == 6
            && tpm >= 0.80
            && tpm - get("NB") >= 0.10
            && strictly_best
            && sequence >= classical
            && elapsed < Duration::from_secs(30 * 60),
        format!(
            "{} trials; {}; {:.0}s",
            prep.len(),
            table.join(", "),
            elapsed.as_secs_f64()
        ),
    )
}

fn rstc_calibration() -> Check {
    let d = generate_cohort(&CohortConfig::default()).map_err(|e| e.to_string())?;
    let r = rstc_report(&d, Pooling::WithBaselines).map_err(|e| e.to_string())?;
    let row = |name: &str| {
        r.relative
            .iter()
            .find(|row| row.name == name)
            .and_then(|row| row.entry)
    };
    let (ux, eq) = (
        row("UX").ok_or("UX undefined")?,
        row("Emotion").ok_or("Emotion undefined")?,
    );
    ensure(
        (ux.r - 0.65).abs() <= 0.10 && ux.r > 0.0 && ux.p < 0.001 && eq.r.abs() < 0.15,
        format!(
            "relative UX r = {:.3} (p = {:.1e}, n = {}), Emotion r = {:.3}",
            ux.r, ux.p, ux.n, eq.r
        ),
    )
}

fn directional_effects() -> Check {
    let d = generate_cohort(&CohortConfig::default()).map_err(|e| e.to_string())?;
    let deltas = condition_deltas(&d).map_err(|e| e.to_string())?;
    let mean = |color, music| {
        let v = &deltas[&ConditionCode::new(true, color, music).unwrap()];
        v.iter().sum::<f64>() / v.len() as f64
    };
    let red = mean(LightColor::Red, MusicTempo::None);
    let blue = mean(LightColor::Blue, MusicTempo::None);
    let slow = mean(LightColor::White, MusicTempo::Slow);
    let fast = mean(LightColor::White, MusicTempo::Fast);
    ensure(
        d.participants().len() == 56 && red > 1.0 && blue < -1.0 && slow > 1.0 && fast < -1.0,
        format!(
            "mean Δt̂ red {red:+.2} s, blue {blue:+.2} s, 70 BPM {slow:+.2} s, 140 BPM {fast:+.2} s"
        ),
    )
}

fn files_under(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(
                    p.strip_prefix(root).unwrap().to_path_buf(),
                    std::fs::read(&p).unwrap(),
                );
            }
        }
    }
    out
}

fn tempora(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_tempora"))
        .args(args)
        .env_remove("TEMPORA_SEED")
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!(
            "tempora {} failed: {}",
            args.join(" "),
            String::from_utf8_lossy(&out.stderr)
        ))
    }
}

fn determinism() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = tmp.path().join("small.toml");
    std::fs::write(
        &config,
        "seed = 42\nbaselines = true\n[cohort]\nn_participants = 12\n[model]\npool_strides = [16, 16]\n[train]\nmax_epochs = 2\npatience = 1\n",
    )
    .unwrap();
    let config = config.to_str().unwrap();
    let mut snapshots = Vec::new();
    for run in ["a", "b"] {
        let root = tmp.path().join(run);
        let dir = |sub: &str| root.join(sub).to_str().unwrap().to_string();
        tempora(&[
            "synth",
            "--config",
            config,
            "--jobs",
            "1",
            "--out",
            &dir("data"),
        ])?;
        tempora(&[
            "train",
            "--config",
            config,
            "--jobs",
            "1",
            "--input",
            &dir("data"),
            "--out",
            &dir("train"),
        ])?;
        tempora(&[
            "analyze",
            "--config",
            config,
            "--jobs",
            "1",
            "--input",
            &dir("data"),
            "--out",
            &dir("analyze"),
        ])?;
        snapshots.push(files_under(&root));
    }
    let (a, b) = (&snapshots[0], &snapshots[1]);
    let differing: Vec<String> = a
        .iter()
        .filter(|(k, v)| b.get(*k) != Some(*v))
        .map(|(k, _)| k.display().to_string())
        .collect();
    ensure(
        a.len() == b.len() && differing.is_empty() && a.keys().any(|k| k.ends_with("metrics.csv")),
        format!(
            "{} files compared, {} differ {:?}",
            a.len(),
            differing.len(),
            differing.iter().take(3).collect::<Vec<_>>()
        ),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "analytic gradients match finite differences", gradients),
        (2, "preprocessing exactness", preprocessing),
        (3, "label binning boundaries", label_binning),
        (
            4,
            "statistics match the reference oracle",
            statistics_oracle,
        ),
        (5, "metric identities", metric_identities),
        (6, "end-to-end synthetic benchmark", benchmark),
        (
            7,
            "time-change / UX correlation calibration",
            rstc_calibration,
        ),
        (8, "directional zeitgeber effects", directional_effects),
        (9, "byte-identical reruns", determinism),
    ];
    let selected: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    for (n, name, check) in criteria {
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("acceptance {n} PASS {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("acceptance {n} FAIL {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
