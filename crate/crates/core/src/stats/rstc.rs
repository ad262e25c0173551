use std::fmt::Write as _;

use super::tests::{
    pearson, rm_anova, shapiro_wilk, t_test_independent, t_test_paired, CorrelationEntry,
    TestResult,
};
use super::ux::{score_questionnaire, UxScores, UX_ROWS};
use crate::error::{Error, Result};
use crate::trial::{mean_estimate, ConditionCode, Dataset, Group};

/// Mean estimate and questionnaire scores of one participant under one condition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConditionScores {
    pub condition: ConditionCode,
    pub t_hat: f64,
    pub ux: UxScores,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParticipantScores {
    pub participant: String,
    pub group: Group,
    pub baseline: ConditionScores,
    /// Non-baseline conditions with at least one valid trial and a questionnaire.
    pub conditions: Vec<ConditionScores>,
}

impl ParticipantScores {
    /// `(condition, Δt̂, ΔUX)` for each scored condition.
    pub fn relative(&self) -> impl Iterator<Item = (ConditionCode, f64, UxScores)> + '_ {
        self.conditions.iter().map(|c| {
            (
                c.condition,
                c.t_hat - self.baseline.t_hat,
                c.ux - self.baseline.ux,
            )
        })
    }
}

fn condition_scores(
    d: &Dataset,
    participant: &str,
    condition: ConditionCode,
) -> Result<Option<ConditionScores>> {
    let trials = d.condition_trials(participant, &condition);
    let Some(q) = d.questionnaire(participant, &condition) else {
        return Ok(None);
    };
    if trials.is_empty() {
        return Ok(None);
    }
    Ok(Some(ConditionScores {
        condition,
        t_hat: mean_estimate(&trials)?,
        ux: score_questionnaire(q)?,
    }))
}

/// Per-participant scores; every participant needs a scored baseline.
pub fn collect_scores(d: &Dataset) -> Result<Vec<ParticipantScores>> {
    let mut out = Vec::new();
    let mut missing = Vec::new();
    for (p, group) in d.participants() {
        let Some(baseline) = condition_scores(d, &p, group.baseline())? else {
            missing.push(p);
            continue;
        };
        let mut conditions = Vec::new();
        for c in group.conditions() {
            conditions.extend(condition_scores(d, &p, c)?);
        }
        out.push(ParticipantScores {
            participant: p,
            group,
            baseline,
            conditions,
        });
    }
    if !missing.is_empty() {
        return Err(Error::invalid(format!(
            "participants without a scored baseline: {}",
            missing.join(", ")
        )));
    }
    Ok(out)
}

/// Which observations enter the absolute panel.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Pooling {
    /// Every scored condition, baselines included.
    #[default]
    WithBaselines,
    ConditionsOnly,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PanelRow {
    pub name: &'static str,
    /// `None` when the correlation is undefined (a constant column).
    pub entry: Option<CorrelationEntry>,
}

fn panel(t: &[f64], ux: &[UxScores]) -> [PanelRow; 6] {
    let cols: Vec<[f64; 6]> = ux.iter().map(UxScores::rows).collect();
    [0, 1, 2, 3, 4, 5].map(|k| {
        let y: Vec<f64> = cols.iter().map(|r| r[k]).collect();
        PanelRow {
            name: UX_ROWS[k],
            entry: pearson(t, &y).ok(),
        }
    })
}

/// Variables of the per-group correlation grid.
pub const MATRIX_VARS: [&str; 7] = ["dt", "dUX", "dPQ", "dUES", "dITQ", "dEQ", "dTLX"];

#[derive(Clone, Debug, PartialEq)]
pub struct GroupMatrix {
    pub group: Group,
    pub n: usize,
    pub r: [[Option<f64>; 7]; 7],
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionEffect {
    pub condition: ConditionCode,
    pub n: usize,
    pub mean_delta: f64,
    pub sd_delta: f64,
    pub normality: Option<TestResult>,
    /// Paired test of condition t̂ against baseline t̂.
    pub vs_baseline: Option<TestResult>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TaskContrast {
    /// Color or music scene compared between task and no-task groups.
    pub scene: ConditionCode,
    /// Welch test on Δt̂, task minus no-task.
    pub result: Option<TestResult>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RstcReport {
    pub absolute: [PanelRow; 6],
    pub relative: [PanelRow; 6],
    pub matrices: Vec<GroupMatrix>,
    pub effects: Vec<ConditionEffect>,
    /// Subjects × {baseline, condition 1, condition 2} t̂ per group.
    pub anova: Vec<(Group, Option<TestResult>)>,
    pub task_contrasts: Vec<TaskContrast>,
}

fn sd(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = x.iter().sum::<f64>() / x.len() as f64;
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64).sqrt()
}

pub fn rstc_report(d: &Dataset, pooling: Pooling) -> Result<RstcReport> {
    let people = collect_scores(d)?;

    let (mut t_abs, mut ux_abs) = (Vec::new(), Vec::new());
    let (mut t_rel, mut ux_rel) = (Vec::new(), Vec::new());
    for p in &people {
        if pooling == Pooling::WithBaselines {
            t_abs.push(p.baseline.t_hat);
            ux_abs.push(p.baseline.ux);
        }
        for c in &p.conditions {
            t_abs.push(c.t_hat);
            ux_abs.push(c.ux);
        }
        for (_, dt, dux) in p.relative() {
            t_rel.push(dt);
            ux_rel.push(dux);
        }
    }

    let mut matrices = Vec::new();
    let mut anova = Vec::new();
    for g in Group::ALL {
        let members: Vec<&ParticipantScores> = people.iter().filter(|p| p.group == g).collect();
        if members.is_empty() {
            continue;
        }
        let obs: Vec<[f64; 7]> = members
            .iter()
            .flat_map(|p| p.relative())
            .map(|(_, dt, u)| {
                let r = u.rows();
                [dt, r[0], r[1], r[2], r[3], r[4], r[5]]
            })
            .collect();
        let col = |k: usize| obs.iter().map(|o| o[k]).collect::<Vec<f64>>();
        let mut r = [[None; 7]; 7];
        for (a, row) in r.iter_mut().enumerate() {
            for (b, cell) in row.iter_mut().enumerate() {
                *cell = pearson(&col(a), &col(b)).ok().map(|e| e.r);
            }
        }
        matrices.push(GroupMatrix {
            group: g,
            n: obs.len(),
            r,
        });

        let conds = g.conditions();
        let rows: Vec<Vec<f64>> = members
            .iter()
            .filter_map(|p| {
                let mut row = vec![p.baseline.t_hat];
                for c in conds {
                    row.push(p.conditions.iter().find(|s| s.condition == c)?.t_hat);
                }
                Some(row)
            })
            .collect();
        anova.push((g, rm_anova(&rows).ok()));
    }

    let mut effects = Vec::new();
    for g in Group::ALL {
        for c in g.conditions() {
            let pairs: Vec<(f64, f64)> = people
                .iter()
                .filter_map(|p| {
                    let s = p.conditions.iter().find(|s| s.condition == c)?;
                    Some((s.t_hat, p.baseline.t_hat))
                })
                .collect();
            let deltas: Vec<f64> = pairs.iter().map(|(a, b)| a - b).collect();
            let (cond, base): (Vec<f64>, Vec<f64>) = pairs.iter().cloned().unzip();
            effects.push(ConditionEffect {
                condition: c,
                n: deltas.len(),
                mean_delta: if deltas.is_empty() {
                    0.0
                } else {
                    deltas.iter().sum::<f64>() / deltas.len() as f64
                },
                sd_delta: sd(&deltas),
                normality: shapiro_wilk(&deltas).ok(),
                vs_baseline: t_test_paired(&cond, &base).ok(),
            });
        }
    }

    let delta_of = |c: ConditionCode| -> Vec<f64> {
        people
            .iter()
            .flat_map(|p| p.relative())
            .filter(|(code, _, _)| *code == c)
            .map(|(_, dt, _)| dt)
            .collect()
    };
    let task_contrasts = [Group::ALL[0], Group::ALL[1]]
        .iter()
        .flat_map(|g| g.conditions())
        .map(|c| {
            let off = ConditionCode { task: false, ..c };
            TaskContrast {
                scene: c,
                result: t_test_independent(&delta_of(c), &delta_of(off)).ok(),
            }
        })
        .collect();

    Ok(RstcReport {
        absolute: panel(&t_abs, &ux_abs),
        relative: panel(&t_rel, &ux_rel),
        matrices,
        effects,
        anova,
        task_contrasts,
    })
}

fn num(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |x| format!("{x:.6e}"))
}

impl RstcReport {
    /// `panel,row,n,r,p,r2` with both panels.
    pub fn panels_csv(&self) -> String {
        let mut s = String::from("panel,row,n,r,p,r2\n");
        for (name, rows) in [("absolute", &self.absolute), ("relative", &self.relative)] {
            for row in rows.iter() {
                let e = row.entry;
                let _ = writeln!(
                    s,
                    "{name},{},{},{},{},{}",
                    row.name,
                    e.map_or(0, |e| e.n),
                    num(e.map(|e| e.r)),
                    num(e.map(|e| e.p)),
                    num(e.map(|e| e.r2))
                );
            }
        }
        s
    }

    /// One block per group: `group,var,<one column per variable>`.
    pub fn matrix_csv(&self) -> String {
        let mut s = format!("group,n,var,{}\n", MATRIX_VARS.join(","));
        for m in &self.matrices {
            for (a, row) in m.r.iter().enumerate() {
                let cells: Vec<String> = row.iter().map(|v| num(*v)).collect();
                let _ = writeln!(
                    s,
                    "{},{},{},{}",
                    m.group.number(),
                    m.n,
                    MATRIX_VARS[a],
                    cells.join(",")
                );
            }
        }
        s
    }

    /// Per-condition Δt̂ summary with normality and paired tests, group ANOVAs and task contrasts.
    pub fn effects_csv(&self) -> String {
        let mut s = String::from("kind,condition,n,mean_dt,sd_dt,statistic,df1,df2,p,flag\n");
        let test = |r: &Option<TestResult>| match r {
            Some(r) => format!(
                "{:.6e},{},{},{:.6e},{}",
                r.statistic,
                r.df1,
                r.df2.map_or(String::new(), |d| d.to_string()),
                r.p,
                if r.degenerate.is_some() {
                    "zero_variance"
                } else {
                    ""
                }
            ),
            None => "undefined,,,undefined,".to_string(),
        };
        for e in &self.effects {
            let base = format!(
                "{},{},{:.6e},{:.6e}",
                e.condition.tag(),
                e.n,
                e.mean_delta,
                e.sd_delta
            );
            let _ = writeln!(s, "shapiro_wilk,{base},{}", test(&e.normality));
            let _ = writeln!(s, "paired_t,{base},{}", test(&e.vs_baseline));
        }
        for (g, r) in &self.anova {
            let _ = writeln!(s, "rm_anova,group{},,,,{}", g.number(), test(r));
        }
        for c in &self.task_contrasts {
            let _ = writeln!(
                s,
                "welch_task_vs_no_task,{},,,,{}",
                c.scene.tag(),
                test(&c.result)
            );
        }
        s
    }
}
