//! Markdown summary assembled from the CSV outputs of `train` and `analyze`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use tempora_core::Error;

use crate::commands::{EFFECTS_FILE, METRICS_FILE, RSTC_FILE};
use crate::pipeline::MODELS;
use crate::CliError;

/// Header and rows of a comma-separated table.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = text.lines().filter(|l| !l.is_empty());
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| Error::Parse {
                path: path.into(),
                line: 1,
                message: "missing header".into(),
            })?
            .split(',')
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let row: Vec<String> = line.split(',').map(str::to_string).collect();
            if row.len() != header.len() {
                return Err(Error::Parse {
                    path: path.into(),
                    line: i + 2,
                    message: format!("expected {} fields, found {}", header.len(), row.len()),
                }
                .into());
            }
            rows.push(row);
        }
        Ok(Self { header, rows })
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

fn find(dirs: &[PathBuf], file: &str) -> Option<PathBuf> {
    dirs.iter().map(|d| d.join(file)).find(|p| p.is_file())
}

fn field<'a>(t: &Table, row: &'a [String], name: &str, path: &Path) -> Result<&'a str, CliError> {
    let i = t.column(name).ok_or_else(|| Error::Parse {
        path: path.into(),
        line: 1,
        message: format!("no column `{name}`"),
    })?;
    Ok(&row[i])
}

fn number(s: &str) -> Option<f64> {
    s.parse().ok().filter(|v: &f64| v.is_finite())
}

fn pct(v: f64) -> String {
    format!("{:.2}", 100.0 * v)
}

fn p_cell(s: &str) -> String {
    match number(s) {
        Some(v) if v < 1e-4 => format!("{v:.1e}"),
        _ => cell(s, 4),
    }
}

fn cell(s: &str, digits: usize) -> String {
    match number(s) {
        Some(v) => format!("{v:.digits$}"),
        None => s.to_string(),
    }
}

/// Mean ± population sd across folds, or the single value.
fn spread(values: &[f64]) -> String {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return pct(mean);
    }
    let sd = (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
    format!("{} ± {}", pct(mean), pct(sd))
}

fn model_block(path: &Path, s: &mut String) -> Result<(), CliError> {
    let t = Table::read(path)?;
    let mut by_model: BTreeMap<String, Vec<[f64; 3]>> = BTreeMap::new();
    let mut n_test = BTreeMap::new();
    for row in &t.rows {
        let model = field(&t, row, "model", path)?.to_string();
        let get = |name: &str| -> Result<f64, CliError> {
            let v = field(&t, row, name, path)?;
            number(v).ok_or_else(|| {
                Error::Parse {
                    path: path.into(),
                    line: 0,
                    message: format!("`{v}` is not a number"),
                }
                .into()
            })
        };
        let m = [get("accuracy")?, get("macro_f1")?, get("uar")?];
        *n_test.entry(model.clone()).or_insert(0.0) += get("n")?;
        by_model.entry(model).or_default().push(m);
    }
    let _ = writeln!(s, "## Model comparison\n");
    let _ = writeln!(
        s,
        "| Model | Accuracy (%) | Macro-F1 (%) | UAR (%) | Folds | Test trials |"
    );
    let _ = writeln!(s, "|---|---|---|---|---|---|");
    let mut order: Vec<&String> = by_model.keys().collect();
    order.sort_by_key(|m| MODELS.iter().position(|k| k == m).unwrap_or(MODELS.len()));
    for model in order {
        let folds = &by_model[model];
        let col = |k: usize| spread(&folds.iter().map(|m| m[k]).collect::<Vec<_>>());
        let _ = writeln!(
            s,
            "| {model} | {} | {} | {} | {} | {} |",
            col(0),
            col(1),
            col(2),
            folds.len(),
            n_test[model]
        );
    }
    s.push('\n');
    Ok(())
}

fn rstc_block(path: &Path, s: &mut String) -> Result<(), CliError> {
    let t = Table::read(path)?;
    for panel in ["absolute", "relative"] {
        let title = if panel == "absolute" {
            "Estimated time vs. questionnaire scores"
        } else {
            "Relative subjective time change vs. questionnaire change"
        };
        let _ = writeln!(s, "## {title}\n");
        let _ = writeln!(s, "| Dimension | n | r | p | R² |");
        let _ = writeln!(s, "|---|---|---|---|---|");
        for row in &t.rows {
            if field(&t, row, "panel", path)? != panel {
                continue;
            }
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} | {} |",
                field(&t, row, "row", path)?,
                field(&t, row, "n", path)?,
                cell(field(&t, row, "r", path)?, 3),
                p_cell(field(&t, row, "p", path)?),
                cell(field(&t, row, "r2", path)?, 3)
            );
        }
        s.push('\n');
    }
    Ok(())
}

fn effects_block(path: &Path, s: &mut String) -> Result<(), CliError> {
    let t = Table::read(path)?;
    let _ = writeln!(s, "## Condition effects on estimated time\n");
    let _ = writeln!(s, "| Condition | n | Mean Δt̂ (s) | SD | Paired t | p |");
    let _ = writeln!(s, "|---|---|---|---|---|---|");
    for row in &t.rows {
        if field(&t, row, "kind", path)? != "paired_t" {
            continue;
        }
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {} | {} |",
            field(&t, row, "condition", path)?,
            field(&t, row, "n", path)?,
            cell(field(&t, row, "mean_dt", path)?, 2),
            cell(field(&t, row, "sd_dt", path)?, 2),
            cell(field(&t, row, "statistic", path)?, 3),
            p_cell(field(&t, row, "p", path)?)
        );
    }
    s.push('\n');
    Ok(())
}

/// Builds `summary.md` from whichever of metrics, correlation and effect tables
/// the directories hold. At least one must be present.
pub fn summarize(dirs: &[PathBuf]) -> Result<String, CliError> {
    let metrics = find(dirs, METRICS_FILE);
    let rstc = find(dirs, RSTC_FILE);
    let effects = find(dirs, EFFECTS_FILE);
    if metrics.is_none() && rstc.is_none() {
        let listed: Vec<String> = dirs.iter().map(|d| d.display().to_string()).collect();
        return Err(Error::invalid(format!(
            "neither {METRICS_FILE} nor {RSTC_FILE} found in {}",
            listed.join(", ")
        ))
        .into());
    }
    let mut s = String::from("# Tempora summary\n\n");
    match &metrics {
        Some(p) => model_block(p, &mut s)?,
        None => s.push_str("No model metrics found.\n\n"),
    }
    match &rstc {
        Some(p) => rstc_block(p, &mut s)?,
        None => s.push_str("No correlation report found.\n\n"),
    }
    if let Some(p) = &effects {
        effects_block(p, &mut s)?;
    }
    Ok(s)
}
