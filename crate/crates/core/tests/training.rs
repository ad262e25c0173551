use ndarray::Array2;
use tempora_core::nn::{SequenceModel, TpmNet, TpmNetConfig};
use tempora_core::rng::Rng;
use tempora_core::signal::{PreparedTrial, AUX_CHANNELS};
use tempora_core::stats::{rstc_report, Pooling};
use tempora_core::synth::{generate_cohort, CohortConfig};
use tempora_core::train::{evaluate, train, TrainConfig};
use tempora_core::trial::{ConditionCode, Label, QuestionnaireRecord};
use tempora_core::Error;

/// Equal-length trials whose class is the sign of a level shift on the first EEG channel.
fn toy_set(n: usize, seed: u64) -> Vec<PreparedTrial> {
    let mut rng = Rng::new(seed);
    let cols = 2 + AUX_CHANNELS;
    (0..n)
        .map(|i| {
            let label = Label::ALL[i % 3];
            let level = [-1.5, 0.0, 1.5][label.index()];
            let channels = Array2::from_shape_fn((48, cols), |(_, c)| {
                let noise = 0.3 * rng.normal();
                if c == 0 {
                    level + noise
                } else {
                    noise
                }
            });
            PreparedTrial {
                id: format!("toy{i}"),
                channels,
                mask: vec![true; 48],
                zeitgeber: ConditionCode::baseline(i % 2 == 0),
                label,
            }
        })
        .collect()
}

fn refs(v: &[PreparedTrial]) -> Vec<&PreparedTrial> {
    v.iter().collect()
}

fn quick(seed: u64) -> TrainConfig {
    TrainConfig {
        lr: 5e-3,
        batch_size: 8,
        max_epochs: 25,
        patience: 8,
        seed,
        ..TrainConfig::default()
    }
}

#[test]
fn separable_toy_set_is_learned() {
    let (fit, val, test) = (toy_set(48, 1), toy_set(15, 2), toy_set(30, 3));
    let mut net = TpmNet::new(TpmNetConfig::miniature(), 5).unwrap();
    let h = train(&mut net, &refs(&fit), &refs(&val), &quick(9), |_| {}).unwrap();
    assert!(h.best_val_macro_f1 > 0.9, "{h:?}");
    assert!(evaluate(&net, &refs(&test)).unwrap().accuracy >= 0.9);
}

#[test]
fn best_parameters_are_restored() {
    let (fit, val) = (toy_set(24, 4), toy_set(12, 5));
    let mut net = TpmNet::new(TpmNetConfig::miniature(), 6).unwrap();
    let h = train(&mut net, &refs(&fit), &refs(&val), &quick(3), |_| {}).unwrap();
    let best = h.epochs[h.best_epoch - 1];
    assert_eq!(best.val_macro_f1, h.best_val_macro_f1);
    assert!(h
        .epochs
        .iter()
        .all(|e| e.val_macro_f1 <= h.best_val_macro_f1));
    assert_eq!(
        evaluate(&net, &refs(&val)).unwrap().macro_f1,
        h.best_val_macro_f1
    );
}

#[test]
fn training_stops_after_patience_without_improvement() {
    let (fit, val) = (toy_set(12, 7), toy_set(9, 8));
    let mut net = TpmNet::new(TpmNetConfig::miniature(), 2).unwrap();
    let cfg = TrainConfig {
        lr: 1e-300,
        patience: 4,
        ..quick(1)
    };
    let mut seen = 0;
    let h = train(&mut net, &refs(&fit), &refs(&val), &cfg, |_| seen += 1).unwrap();
    assert_eq!(h.best_epoch, 1);
    assert_eq!(h.epochs.len(), 5);
    assert_eq!(seen, 5);
}

#[test]
fn same_seed_same_training() {
    let (fit, val) = (toy_set(18, 10), toy_set(9, 11));
    let run = || {
        let mut net = TpmNet::new(TpmNetConfig::miniature(), 8).unwrap();
        let cfg = TrainConfig {
            max_epochs: 3,
            ..quick(4)
        };
        let h = train(&mut net, &refs(&fit), &refs(&val), &cfg, |_| {}).unwrap();
        (h, net.params().clone())
    };
    let (a, b) = (run(), run());
    assert_eq!(a.0, b.0);
    for id in a.1.ids() {
        assert_eq!(a.1.get(id), b.1.get(id));
    }
}

#[test]
fn non_finite_parameters_are_a_numeric_failure() {
    let (fit, val) = (toy_set(6, 12), toy_set(3, 13));
    let mut net = TpmNet::new(TpmNetConfig::miniature(), 1).unwrap();
    let last = net.params().ids().last().unwrap();
    net.params_mut().get_mut(last).fill(f64::NAN);
    let e = train(&mut net, &refs(&fit), &refs(&val), &quick(2), |_| {}).unwrap_err();
    assert!(matches!(e, Error::Numeric(_)), "{e}");
}

fn small_cohort() -> tempora_core::trial::Dataset {
    generate_cohort(&CohortConfig {
        n_participants: 8,
        seed: 3,
        ..CohortConfig::default()
    })
    .unwrap()
}

#[test]
fn exactly_linear_time_change_correlates_perfectly() {
    let mut d = small_cohort();
    let shift = |p: &str, c: &ConditionCode| -> i32 {
        if c.is_baseline() {
            0
        } else {
            (p[1..].parse::<i32>().unwrap() + c.index() as i32) % 5 - 2
        }
    };
    for t in &mut d.trials {
        t.t = 60.0 + 3.0 * f64::from(shift(&t.participant_id, &t.condition));
    }
    for ((p, c), q) in d.questionnaires.iter_mut() {
        *q = QuestionnaireRecord::uniform((4 + shift(p, c)) as u8);
    }
    let r = rstc_report(&d, Pooling::WithBaselines).unwrap();
    let ux = r.relative[0].entry.unwrap();
    assert!((ux.r - 1.0).abs() < 1e-12, "{ux:?}");
    assert_eq!(ux.n, 16);
}

#[test]
fn zero_time_change_has_undefined_correlation() {
    let mut d = small_cohort();
    for t in &mut d.trials {
        t.t = 60.0;
    }
    let r = rstc_report(&d, Pooling::WithBaselines).unwrap();
    assert!(r.relative.iter().all(|row| row.entry.is_none()));
    assert!(r.absolute.iter().all(|row| row.entry.is_none()));
}
