use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trial::Label;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Kernel {
    Linear,
    /// `exp(−γ‖x−y‖²)`; `None` picks `1/(width · variance of all entries)`.
    Rbf {
        gamma: Option<f64>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmConfig {
    pub c: f64,
    /// Subgradient iterations for the linear kernel.
    pub linear_iters: usize,
    /// Dual solver budget, in passes over the training set.
    pub max_passes: usize,
    /// Stopping tolerance on the dual optimality gap.
    pub tol: f64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            linear_iters: 10_000,
            max_passes: 1_000,
            tol: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Binary {
    /// Weights with the bias as the last entry.
    Linear(Vec<f64>),
    Rbf {
        gamma: f64,
        support: Vec<Vec<f64>>,
        coef: Vec<f64>,
        rho: f64,
    },
}

impl Binary {
    fn decision(&self, x: &[f64]) -> f64 {
        match self {
            Binary::Linear(w) => dot(&w[..x.len()], x) + w[x.len()],
            Binary::Rbf {
                gamma,
                support,
                coef,
                rho,
            } => {
                support
                    .iter()
                    .zip(coef)
                    .map(|(s, a)| a * rbf(*gamma, s, x))
                    .sum::<f64>()
                    - rho
            }
        }
    }
}

/// One-vs-rest support vector machine.
#[derive(Clone, Debug, PartialEq)]
pub struct Svm {
    machines: [Option<Binary>; 3],
    /// False when some binary problem hit its iteration cap.
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d).exp()
}

/// `1 / (width · variance of every entry)`, or 1 for constant data.
pub fn default_gamma(features: &[Vec<f64>]) -> f64 {
    let all: Vec<f64> = features.iter().flatten().cloned().collect();
    let n = all.len() as f64;
    let mean = all.iter().sum::<f64>() / n;
    let var = all.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let width = features[0].len() as f64;
    if var > 0.0 {
        1.0 / (width * var)
    } else {
        1.0
    }
}

/// Full-batch projected subgradient descent on `λ/2‖w‖² + mean hinge`, `λ = 1/(C·n)`,
/// with the bias folded into `w` through a constant feature. Returns the best iterate.
fn fit_linear(x: &[Vec<f64>], y: &[f64], cfg: &SvmConfig) -> (Binary, bool) {
    let n = x.len();
    let d = x[0].len() + 1;
    let lambda = 1.0 / (cfg.c * n as f64);
    let objective = |w: &[f64]| {
        let hinge: f64 = x
            .iter()
            .zip(y)
            .map(|(xi, yi)| (1.0 - yi * (dot(&w[..d - 1], xi) + w[d - 1])).max(0.0))
            .sum();
        0.5 * lambda * dot(w, w) + hinge / n as f64
    };
    let mut w = vec![0.0; d];
    let mut best = w.clone();
    let mut best_obj = objective(&w);
    let mut since = 0;
    const STALL: usize = 500;
    for t in 1..=cfg.linear_iters {
        let eta = 1.0 / (lambda * t as f64);
        let mut g = vec![0.0; d];
        for (xi, yi) in x.iter().zip(y) {
            if yi * (dot(&w[..d - 1], xi) + w[d - 1]) < 1.0 {
                for (gj, xj) in g.iter_mut().zip(xi) {
                    *gj += yi * xj;
                }
                g[d - 1] += yi;
            }
        }
        let shrink = 1.0 - eta * lambda;
        for (wj, gj) in w.iter_mut().zip(&g) {
            *wj = shrink * *wj + eta * gj / n as f64;
        }
        let norm = dot(&w, &w).sqrt();
        let radius = 1.0 / lambda.sqrt();
        if norm > radius {
            w.iter_mut().for_each(|v| *v *= radius / norm);
        }
        let obj = objective(&w);
        if obj < best_obj - 1e-9 * best_obj.abs().max(1e-12) {
            best_obj = obj;
            best.clone_from(&w);
            since = 0;
        } else {
            since += 1;
            if since >= STALL {
                return (Binary::Linear(best), true);
            }
        }
    }
    (Binary::Linear(best), false)
}

/// C-SVC dual solved by sequential minimal optimisation with second-order working-set selection.
fn fit_rbf(x: &[Vec<f64>], y: &[f64], gamma: f64, cfg: &SvmConfig) -> (Binary, bool) {
    let n = x.len();
    let c = cfg.c;
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = rbf(gamma, &x[i], &x[j]);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    let q = |i: usize, j: usize| y[i] * y[j] * k[i * n + j];
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let mut converged = false;
    const TAU: f64 = 1e-12;
    for _ in 0..cfg.max_passes.saturating_mul(n) {
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        for t in 0..n {
            let up = if y[t] > 0.0 {
                alpha[t] < c
            } else {
                alpha[t] > 0.0
            };
            if up && -y[t] * grad[t] >= gmax {
                gmax = -y[t] * grad[t];
                i_sel = t;
            }
        }
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = usize::MAX;
        let mut best = f64::INFINITY;
        for t in 0..n {
            let low = if y[t] > 0.0 {
                alpha[t] > 0.0
            } else {
                alpha[t] < c
            };
            if !low {
                continue;
            }
            let v = y[t] * grad[t];
            gmax2 = gmax2.max(v);
            let diff = gmax + v;
            if i_sel != usize::MAX && diff > 0.0 {
                let mut quad = k[i_sel * n + i_sel] + k[t * n + t] - 2.0 * k[i_sel * n + t];
                if quad <= 0.0 {
                    quad = TAU;
                }
                let obj = -diff * diff / quad;
                if obj <= best {
                    best = obj;
                    j_sel = t;
                }
            }
        }
        if gmax + gmax2 < cfg.tol || j_sel == usize::MAX {
            converged = true;
            break;
        }
        let (i, j) = (i_sel, j_sel);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let mut quad = q(i, i) + q(j, j) + 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = q(i, i) + q(j, j) - 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += q(t, i) * di + q(t, j) * dj;
        }
    }
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut sum_free) = (0usize, 0.0);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    let rho = if free > 0 {
        sum_free / free as f64
    } else {
        (ub + lb) / 2.0
    };
    let (support, coef) = (0..n)
        .filter(|&t| alpha[t] > 0.0)
        .map(|t| (x[t].clone(), alpha[t] * y[t]))
        .unzip();
    (
        Binary::Rbf {
            gamma,
            support,
            coef,
            rho,
        },
        converged,
    )
}

impl Svm {
    pub fn fit(
        features: &[Vec<f64>],
        labels: &[Label],
        kernel: Kernel,
        cfg: &SvmConfig,
    ) -> Result<Self> {
        if features.is_empty() || features.len() != labels.len() {
            return Err(Error::invalid("SVM needs one label per feature row"));
        }
        if !(cfg.c > 0.0) {
            return Err(Error::invalid(format!(
                "SVM C must be positive, got {}",
                cfg.c
            )));
        }
        let present: Vec<usize> = (0..3)
            .filter(|&c| labels.iter().any(|l| l.index() == c))
            .collect();
        if present.len() < 2 {
            return Err(Error::invalid("SVM needs at least two classes"));
        }
        let gamma = match kernel {
            Kernel::Rbf { gamma: Some(g) } => g,
            _ => default_gamma(features),
        };
        let mut machines = [None, None, None];
        let mut converged = true;
        for &c in &present {
            let y: Vec<f64> = labels
                .iter()
                .map(|l| if l.index() == c { 1.0 } else { -1.0 })
                .collect();
            let (m, ok) = match kernel {
                Kernel::Linear => fit_linear(features, &y, cfg),
                Kernel::Rbf { .. } => fit_rbf(features, &y, gamma, cfg),
            };
            converged &= ok;
            machines[c] = Some(m);
        }
        Ok(Self {
            machines,
            converged,
        })
    }

    /// Decision value per class; classes absent at training time score −∞.
    pub fn decision(&self, x: &[f64]) -> [f64; 3] {
        [0, 1, 2].map(|c| {
            self.machines[c]
                .as_ref()
                .map_or(f64::NEG_INFINITY, |m| m.decision(x))
        })
    }

    pub fn predict(&self, x: &[f64]) -> Label {
        crate::train::argmax_label(&self.decision(x))
    }
}
