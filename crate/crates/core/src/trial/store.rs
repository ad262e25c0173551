//! Dataset directory format.
//!
//! ```text
//! <dir>/manifest               schema_version=1
//!                              provenance=<free text to end of line>
//!                              participant=P01 group=1 cl=1 c=0 m=0 trial=1 t_seconds=.. label=.. ...
//! <dir>/<trial id>/eeg         timestamp,ch1,ch2,...
//! <dir>/<trial id>/bw          timestamp,alpha,low_beta,high_beta,theta,gamma
//! <dir>/<trial id>/hs          timestamp,stress,awareness,drowsiness,meditation
//! <dir>/<trial id>/hr          timestamp,hr
//! ```
//!
//! Numbers are written with Rust's shortest round-trip formatting, so a
//! store/load cycle is bit-exact.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::Array2;

use super::{
    bin_label, trial_id, ConditionCode, Dataset, Group, Label, QuestionnaireRecord, TrialRecord,
};
use crate::error::{Error, Result, Violation};
use crate::signal::{PhysioBundle, Stream};

pub const MANIFEST_FILE: &str = "manifest";
pub const SCHEMA_VERSION: u32 = 1;

const STREAM_FILES: [&str; 4] = ["eeg", "bw", "hs", "hr"];

pub fn store_dataset(dataset: &Dataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = String::new();
    writeln!(manifest, "schema_version={SCHEMA_VERSION}").unwrap();
    writeln!(
        manifest,
        "provenance={}",
        dataset.provenance.replace('\n', " ")
    )
    .unwrap();
    for trial in &dataset.trials {
        let q = dataset
            .questionnaire(&trial.participant_id, &trial.condition)
            .ok_or_else(|| {
                Error::Validation(vec![Violation::trial(
                    trial.id(),
                    "no questionnaire for condition",
                )])
            })?;
        manifest.push_str(&manifest_line(trial, q)?);
        manifest.push('\n');

        let tdir = dir.join(trial.id());
        fs::create_dir_all(&tdir).map_err(|e| Error::io(&tdir, e))?;
        for (name, stream) in trial.physio.streams() {
            write_stream(&tdir.join(name), stream)?;
        }
    }
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, manifest).map_err(|e| Error::io(path, e))
}

fn manifest_line(t: &TrialRecord, q: &QuestionnaireRecord) -> Result<String> {
    let label = bin_label(t.t).map(Label::name).unwrap_or("invalid");
    let join = |items: &[u8]| {
        items
            .iter()
            .map(u8::to_string)
            .collect::<Vec<_>>()
            .join(",")
    };
    Ok(format!(
        "participant={} group={} cl={} c={} m={} trial={} t_seconds={} label={} valid={} \
         rate_eeg={} rate_bw={} rate_hs={} rate_hr={} pq={} ues={} itq={} eq={} tlx={}",
        t.participant_id,
        t.group.number(),
        u8::from(t.condition.task),
        t.condition.color.code(),
        t.condition.music.code(),
        t.trial_index,
        t.t,
        label,
        u8::from(t.valid),
        t.physio.eeg.rate_hz,
        t.physio.bw.rate_hz,
        t.physio.hs.rate_hz,
        t.physio.hr.rate_hz,
        join(&q.pq),
        join(&q.ues),
        join(&q.itq),
        q.eq,
        join(&q.tlx),
    ))
}

fn write_stream(path: &Path, stream: &Stream) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut line = String::new();
    for (i, row) in stream.data.rows().into_iter().enumerate() {
        line.clear();
        write!(line, "{}", i as f64 / stream.rate_hz).unwrap();
        for v in row {
            write!(line, ",{v}").unwrap();
        }
        line.push('\n');
        w.write_all(line.as_bytes())
            .map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let mut lines = text.lines().enumerate();

    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.clone(),
        line,
        message,
    };
    let (_, first) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty manifest".into()))?;
    let version = first
        .strip_prefix("schema_version=")
        .and_then(|v| v.trim().parse::<u32>().ok())
        .ok_or_else(|| parse_err(1, "missing schema_version".into()))?;
    if version != SCHEMA_VERSION {
        return Err(Error::Validation(vec![Violation::global(format!(
            "schema version {version} is not supported (expected {SCHEMA_VERSION})"
        ))]));
    }
    let provenance = match lines.next() {
        Some((_, l)) if l.starts_with("provenance=") => l["provenance=".len()..].to_string(),
        _ => return Err(parse_err(2, "missing provenance line".into())),
    };

    let mut violations = Vec::new();
    let mut trials = Vec::new();
    let mut questionnaires: BTreeMap<(String, ConditionCode), QuestionnaireRecord> =
        BTreeMap::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let entry = match ManifestEntry::parse(line) {
            Ok(e) => e,
            Err(msg) => {
                violations.push(Violation::global(format!("manifest line {}: {msg}", i + 1)));
                continue;
            }
        };
        let id = trial_id(&entry.participant, &entry.condition, entry.trial_index);
        if let Ok(stored) = bin_label(entry.t) {
            if Some(stored) != entry.label {
                violations.push(Violation::trial(
                    &id,
                    "stored label disagrees with t_seconds",
                ));
            }
        }
        let key = (entry.participant.clone(), entry.condition);
        match questionnaires.get(&key) {
            Some(q) if *q != entry.questionnaire => violations.push(Violation::trial(
                &id,
                "questionnaire differs from other trials of the condition",
            )),
            Some(_) => {}
            None => {
                questionnaires.insert(key, entry.questionnaire);
            }
        }
        match load_bundle(&dir.join(&id), &entry.rates) {
            Ok(physio) => trials.push(TrialRecord {
                participant_id: entry.participant,
                group: entry.group,
                condition: entry.condition,
                trial_index: entry.trial_index,
                t: entry.t,
                physio,
                valid: entry.valid,
            }),
            Err(msg) => violations.push(Violation::trial(&id, msg)),
        }
    }
    let dataset = Dataset {
        trials,
        questionnaires,
        provenance,
    };
    violations.extend(super::validate_dataset(&dataset));
    if violations.is_empty() {
        Ok(dataset)
    } else {
        Err(Error::Validation(violations))
    }
}

struct ManifestEntry {
    participant: String,
    group: Group,
    condition: ConditionCode,
    trial_index: u8,
    t: f64,
    label: Option<Label>,
    valid: bool,
    rates: [f64; 4],
    questionnaire: QuestionnaireRecord,
}

impl ManifestEntry {
    fn parse(line: &str) -> std::result::Result<Self, String> {
        let mut kv: BTreeMap<&str, &str> = BTreeMap::new();
        for tok in line.split_whitespace() {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| format!("token `{tok}` is not key=value"))?;
            if kv.insert(k, v).is_some() {
                return Err(format!("duplicate key {k}"));
            }
        }
        let get = |k: &str| kv.get(k).copied().ok_or_else(|| format!("missing key {k}"));
        let num = |k: &str| -> std::result::Result<f64, String> {
            get(k)?
                .parse::<f64>()
                .map_err(|_| format!("{k} is not a number"))
        };
        let small = |k: &str| -> std::result::Result<u8, String> {
            get(k)?
                .parse::<u8>()
                .map_err(|_| format!("{k} is not a small integer"))
        };
        let items = |k: &str, n: usize| -> std::result::Result<Vec<u8>, String> {
            let v: std::result::Result<Vec<u8>, _> =
                get(k)?.split(',').map(str::parse::<u8>).collect();
            let v = v.map_err(|_| format!("{k} has a non-integer item"))?;
            if v.len() != n {
                return Err(format!("{k} has {} items, expected {n}", v.len()));
            }
            Ok(v)
        };

        let group = Group::new(small("group")?).map_err(|e| e.to_string())?;
        let condition = ConditionCode::from_codes(small("cl")?, small("c")?, small("m")?)
            .map_err(|e| e.to_string())?;
        let to3 = |v: Vec<u8>| [v[0], v[1], v[2]];
        let tlx = items("tlx", 2)?;
        Ok(Self {
            participant: get("participant")?.to_string(),
            group,
            condition,
            trial_index: small("trial")?,
            t: num("t_seconds")?,
            label: Label::from_name(get("label")?),
            valid: match get("valid")? {
                "1" => true,
                "0" => false,
                other => return Err(format!("valid must be 0 or 1, got {other}")),
            },
            rates: [
                num("rate_eeg")?,
                num("rate_bw")?,
                num("rate_hs")?,
                num("rate_hr")?,
            ],
            questionnaire: QuestionnaireRecord {
                pq: to3(items("pq", 3)?),
                ues: to3(items("ues", 3)?),
                itq: to3(items("itq", 3)?),
                eq: small("eq")?,
                tlx: [tlx[0], tlx[1]],
            },
        })
    }
}

fn load_bundle(tdir: &Path, rates: &[f64; 4]) -> std::result::Result<PhysioBundle, String> {
    let expected_cols = [None, Some(5), Some(4), Some(1)];
    let mut streams = Vec::with_capacity(4);
    for ((name, rate), cols) in STREAM_FILES.iter().zip(rates).zip(expected_cols) {
        let path = tdir.join(name);
        let text = fs::read_to_string(&path).map_err(|_| format!("missing {name} stream"))?;
        let data = parse_stream(&text, cols).map_err(|m| format!("{name} stream: {m}"))?;
        streams.push(Stream::new(*rate, data));
    }
    let mut it = streams.into_iter();
    Ok(PhysioBundle {
        eeg: it.next().unwrap(),
        bw: it.next().unwrap(),
        hs: it.next().unwrap(),
        hr: it.next().unwrap(),
    })
}

fn parse_stream(
    text: &str,
    expected_cols: Option<usize>,
) -> std::result::Result<Array2<f64>, String> {
    let mut values = Vec::new();
    let mut width = None;
    let mut rows = 0;
    let mut last_ts = f64::NEG_INFINITY;
    for (i, line) in text.lines().enumerate() {
        let mut fields = line.split(',');
        let ts: f64 = fields
            .next()
            .and_then(|f| f.parse().ok())
            .ok_or_else(|| format!("row {} has no timestamp", i + 1))?;
        if ts <= last_ts {
            return Err(format!("row {} timestamp not increasing", i + 1));
        }
        last_ts = ts;
        let before = values.len();
        for f in fields {
            values.push(
                f.parse::<f64>()
                    .map_err(|_| format!("row {} has a malformed value", i + 1))?,
            );
        }
        let n = values.len() - before;
        match width {
            None => width = Some(n),
            Some(w) if w != n => return Err(format!("row {} has {n} values, expected {w}", i + 1)),
            _ => {}
        }
        rows += 1;
    }
    let width = width.ok_or("stream is empty")?;
    if width == 0 {
        return Err("stream has no value columns".into());
    }
    if let Some(c) = expected_cols {
        if c != width {
            return Err(format!("{width} value columns, expected {c}"));
        }
    }
    Array2::from_shape_vec((rows, width), values).map_err(|e| e.to_string())
}


#[cfg(test)]
mod tests {
    use super::tests_support::tiny;
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let d = tiny();
        let dir = tempfile::tempdir().unwrap();
        store_dataset(&d, dir.path()).unwrap();
        let back = load_dataset(dir.path()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn missing_stream_names_trial() {
        let d = tiny();
        let dir = tempfile::tempdir().unwrap();
        store_dataset(&d, dir.path()).unwrap();
        let id = d.trials[0].id();
        fs::remove_file(dir.path().join(&id).join("eeg")).unwrap();
        match load_dataset(dir.path()) {
            Err(Error::Validation(v)) => {
                assert!(
                    v.iter()
                        .any(|x| x.trial.as_deref() == Some(id.as_str())
                            && x.message.contains("eeg")),
                    "{v:?}"
                );
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn schema_mismatch_is_rejected() {
        let d = tiny();
        let dir = tempfile::tempdir().unwrap();
        store_dataset(&d, dir.path()).unwrap();
        let m = dir.path().join(MANIFEST_FILE);
        let text =
            fs::read_to_string(&m)
                .unwrap()
                .replacen("schema_version=1", "schema_version=9", 1);
        fs::write(&m, text).unwrap();
        assert!(matches!(
            load_dataset(dir.path()),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn malformed_row_names_trial() {
        let d = tiny();
        let dir = tempfile::tempdir().unwrap();
        store_dataset(&d, dir.path()).unwrap();
        let id = d.trials[0].id();
        fs::write(dir.path().join(&id).join("hr"), "0,72\n1,abc\n").unwrap();
        match load_dataset(dir.path()) {
            Err(Error::Validation(v)) => {
                assert!(v.iter().any(|x| x.trial.as_deref() == Some(id.as_str())))
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }
}
