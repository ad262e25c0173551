//! Empirical mode decomposition by envelope sifting.
//!
//! Each intrinsic mode function is sifted out of the running residual by
//! repeatedly subtracting the mean of the cubic-spline envelopes through the
//! local maxima and minima. Extrema are mirrored about the end samples before
//! fitting the envelopes, which keeps the splines from flaring at the edges.

use serde::{Deserialize, Serialize};

use super::spline::{CubicSpline, SplineBoundary};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmdConfig {
    /// Sifting stops once `Σ(h_prev - h)² / Σ h_prev²` falls below this.
    pub sd_threshold: f64,
    pub max_sifts: usize,
    pub max_imfs: usize,
}

impl Default for EmdConfig {
    fn default() -> Self {
        Self {
            sd_threshold: 0.2,
            max_sifts: 10,
            max_imfs: 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Emd {
    pub imfs: Vec<Vec<f64>>,
    pub residual: Vec<f64>,
}

impl Emd {
    pub fn reconstruct(&self) -> Vec<f64> {
        let mut out = self.residual.clone();
        for imf in &self.imfs {
            for (o, v) in out.iter_mut().zip(imf) {
                *o += v;
            }
        }
        out
    }
}

/// Indices of local maxima and minima; flat runs report their midpoint.
pub fn extrema(x: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let mut maxima = Vec::new();
    let mut minima = Vec::new();
    // Last non-zero step: (index of the step, rising?).
    let mut prev: Option<(usize, bool)> = None;
    for j in 0..x.len().saturating_sub(1) {
        let d = x[j + 1] - x[j];
        if d == 0.0 {
            continue;
        }
        let rising = d > 0.0;
        if let Some((pj, prising)) = prev {
            if prising != rising {
                let at = (pj + 1 + j) / 2;
                if prising {
                    maxima.push(at);
                } else {
                    minima.push(at);
                }
            }
        }
        prev = Some((j, rising));
    }
    (maxima, minima)
}

/// Envelope through `idx` extrema of `x`, mirrored about both ends.
fn envelope(x: &[f64], idx: &[usize]) -> Vec<f64> {
    let n = x.len();
    let last = (n - 1) as f64;
    let k = idx.len().min(2);
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(idx.len() + 2 * k);
    for &i in idx[..k].iter().rev() {
        if i > 0 {
            pts.push((-(i as f64), x[i]));
        }
    }
    pts.extend(idx.iter().map(|&i| (i as f64, x[i])));
    for &i in idx[idx.len() - k..].iter().rev() {
        if i < n - 1 {
            pts.push((2.0 * last - i as f64, x[i]));
        }
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.dedup_by(|a, b| a.0 == b.0);
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    if xs.len() < 2 {
        return vec![ys[0]; n];
    }
    CubicSpline::new(&xs, &ys, SplineBoundary::Natural)
        .expect("envelope knots are strictly increasing")
        .eval_grid(n)
}

/// Extracts one IMF candidate from `x`; `None` when `x` lacks the extrema to sift.
fn sift(x: &[f64], cfg: &EmdConfig) -> Option<Vec<f64>> {
    let mut h = x.to_vec();
    for _ in 0..cfg.max_sifts {
        let (maxima, minima) = extrema(&h);
        if maxima.is_empty() || minima.is_empty() {
            break;
        }
        let upper = envelope(&h, &maxima);
        let lower = envelope(&h, &minima);
        let mut num = 0.0;
        let mut den = 0.0;
        for ((v, u), l) in h.iter_mut().zip(&upper).zip(&lower) {
            let mean = 0.5 * (u + l);
            num += mean * mean;
            den += *v * *v;
            *v -= mean;
        }
        if den == 0.0 || num / den < cfg.sd_threshold {
            break;
        }
    }
    // A candidate identical to its input removed nothing.
    (h != x).then_some(h)
}

pub fn emd(x: &[f64], cfg: &EmdConfig) -> Emd {
    let mut residual = x.to_vec();
    let mut imfs = Vec::new();
    if x.len() < 4 {
        return Emd { imfs, residual };
    }
    while imfs.len() < cfg.max_imfs {
        let (maxima, minima) = extrema(&residual);
        if maxima.len() + minima.len() < 2 {
            break;
        }
        let Some(imf) = sift(&residual, cfg) else {
            break;
        };
        for (r, v) in residual.iter_mut().zip(&imf) {
            *r -= v;
        }
        imfs.push(imf);
    }
    Emd { imfs, residual }
}
