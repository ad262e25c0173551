use std::collections::BTreeMap;
use std::sync::OnceLock;

use proptest::prelude::*;
use tempora_core::rng::Rng;
use tempora_core::stats::{rstc_report, Pooling};
use tempora_core::synth::{
    condition_deltas, generate_cohort, sample_participant, simulate_trial, CohortConfig,
};
use tempora_core::trial::{
    bin_label, load_dataset, store_dataset, validate_dataset, ConditionCode, Dataset, Label,
    LightColor, MusicTempo,
};

fn default_cohort() -> &'static Dataset {
    static COHORT: OnceLock<Dataset> = OnceLock::new();
    COHORT.get_or_init(|| generate_cohort(&CohortConfig::default()).unwrap())
}

fn task(color: LightColor, music: MusicTempo) -> ConditionCode {
    ConditionCode::new(true, color, music).unwrap()
}

#[test]
fn default_cohort_has_504_valid_trials() {
    let d = default_cohort();
    assert_eq!(d.trials.len(), 504);
    assert_eq!(d.participants().len(), 56);
    assert!(validate_dataset(d).is_empty());
    assert_eq!(d.valid_trials().count(), 504);
}

#[test]
fn class_mix_is_near_target() {
    let d = default_cohort();
    let mut counts = [0usize; 3];
    for t in &d.trials {
        counts[bin_label(t.t).unwrap().index()] += 1;
    }
    for (c, target) in counts.iter().zip([0.5, 0.4, 0.1]) {
        let share = *c as f64 / 504.0;
        assert!((share - target).abs() <= 0.05, "{counts:?}");
    }
}

#[test]
fn task_conditions_shift_time_in_the_expected_direction() {
    let deltas = condition_deltas(default_cohort()).unwrap();
    let mean = |c: ConditionCode| {
        let v = &deltas[&c];
        v.iter().sum::<f64>() / v.len() as f64
    };
    assert!(mean(task(LightColor::Red, MusicTempo::None)) > 1.0);
    assert!(mean(task(LightColor::Blue, MusicTempo::None)) < -1.0);
    assert!(mean(task(LightColor::White, MusicTempo::Slow)) > 1.0);
    assert!(mean(task(LightColor::White, MusicTempo::Fast)) < -1.0);
}

#[test]
fn monte_carlo_condition_means_are_ordered() {
    let cfg = CohortConfig::default();
    let mut rng = Rng::new(2024);
    let conditions = [
        task(LightColor::Red, MusicTempo::None),
        ConditionCode::baseline(true),
        task(LightColor::Blue, MusicTempo::None),
        task(LightColor::White, MusicTempo::Slow),
        task(LightColor::White, MusicTempo::Fast),
    ];
    let mut sums = [0.0; 5];
    let n = 20_000;
    for _ in 0..n {
        let p = sample_participant(&cfg, &mut rng);
        for (s, c) in sums.iter_mut().zip(&conditions) {
            *s += simulate_trial(&cfg, &p, c, &mut rng).t / n as f64;
        }
    }
    let [red, white, blue, slow, fast] = sums;
    assert!(red > white && white > blue, "{sums:?}");
    assert!(slow > white && white > fast, "{sums:?}");
}

#[test]
fn beta_power_is_lower_when_time_is_overestimated() {
    let mut by_label: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for t in &default_cohort().trials {
        let bw = &t.physio.bw.data;
        let beta =
            bw.column(1).iter().chain(bw.column(2).iter()).sum::<f64>() / (2 * bw.nrows()) as f64;
        let e = by_label.entry(bin_label(t.t).unwrap().index()).or_default();
        e.0 += beta;
        e.1 += 1;
    }
    let mean = |l: Label| {
        let (s, n) = by_label[&l.index()];
        s / n as f64
    };
    assert!(mean(Label::Overestimated) < mean(Label::Underestimated));
}

#[test]
fn relative_ux_correlation_is_calibrated() {
    let r = rstc_report(default_cohort(), Pooling::WithBaselines).unwrap();
    let ux = r.relative[0].entry.unwrap();
    assert_eq!(r.relative[0].name, "UX");
    assert!((ux.r - 0.65).abs() <= 0.10, "r = {}", ux.r);
    let eq = r
        .relative
        .iter()
        .find(|row| row.name == "Emotion")
        .unwrap()
        .entry
        .unwrap();
    assert!(eq.r.abs() < 0.15, "EQ r = {}", eq.r);
}

#[test]
fn zero_coupling_gives_no_ux_correlation() {
    let cfg = CohortConfig {
        ux_coupling: 0.0,
        seed: 7,
        ..CohortConfig::default()
    };
    let d = generate_cohort(&cfg).unwrap();
    let r = rstc_report(&d, Pooling::WithBaselines).unwrap();
    assert!(r.relative[0].entry.unwrap().r.abs() < 0.1);
}

#[test]
fn same_seed_gives_identical_files() {
    let cfg = CohortConfig {
        n_participants: 4,
        seed: 99,
        ..CohortConfig::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    store_dataset(&generate_cohort(&cfg).unwrap(), &a).unwrap();
    store_dataset(&generate_cohort(&cfg).unwrap(), &b).unwrap();
    let files = |root: &std::path::Path| {
        let mut out = BTreeMap::new();
        for entry in walk(root) {
            out.insert(
                entry.strip_prefix(root).unwrap().to_path_buf(),
                std::fs::read(&entry).unwrap(),
            );
        }
        out
    };
    let (fa, fb) = (files(&a), files(&b));
    assert_eq!(fa.len(), 1 + 36 * 4);
    assert!(fa == fb);
    assert_eq!(load_dataset(&a).unwrap().trials.len(), 36);
}

fn walk(dir: &std::path::Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn small_cohorts_satisfy_the_data_invariants(seed in any::<u64>(), n in 1usize..6) {
        let cfg = CohortConfig { seed, n_participants: n, trials_per_condition: 1, ..CohortConfig::default() };
        let d = generate_cohort(&cfg).unwrap();
        prop_assert!(validate_dataset(&d).is_empty());
        prop_assert_eq!(d.trials.len(), 3 * n);
        for t in &d.trials {
            prop_assert!((10.0..=180.0).contains(&t.t));
            prop_assert_eq!(t.physio.eeg.len(), (t.t * 256.0).round() as usize);
            prop_assert!(t.group.admits(&t.condition));
            let q = d.questionnaire(&t.participant_id, &t.condition).unwrap();
            prop_assert!(q.in_range());
        }
    }
}
