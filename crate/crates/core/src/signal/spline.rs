//! Cubic spline interpolation and resampling.

use crate::error::{Error, Result};

/// End condition of a cubic spline.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SplineBoundary {
    /// Zero second derivative at both ends.
    Natural,
    /// Prescribed first derivatives at the first and last knot.
    Clamped(f64, f64),
}

/// Interpolating cubic spline stored as knot values plus second derivatives.
#[derive(Clone, Debug)]
pub struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(xs: &[f64], ys: &[f64], boundary: SplineBoundary) -> Result<Self> {
        let n = xs.len();
        if n != ys.len() {
            return Err(Error::invalid("spline knots and values differ in length"));
        }
        if n < 2 {
            return Err(Error::invalid("spline needs at least two knots"));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("spline knots must be strictly increasing"));
        }
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let slope: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();

        // Tridiagonal system for the second derivatives.
        let mut sub = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        match boundary {
            SplineBoundary::Natural => {
                diag[0] = 1.0;
                diag[n - 1] = 1.0;
            }
            SplineBoundary::Clamped(d0, dn) => {
                diag[0] = 2.0 * h[0];
                sup[0] = h[0];
                rhs[0] = 6.0 * (slope[0] - d0);
                sub[n - 1] = h[n - 2];
                diag[n - 1] = 2.0 * h[n - 2];
                rhs[n - 1] = 6.0 * (dn - slope[n - 2]);
            }
        }
        for i in 1..n - 1 {
            sub[i] = h[i - 1];
            diag[i] = 2.0 * (h[i - 1] + h[i]);
            sup[i] = h[i];
            rhs[i] = 6.0 * (slope[i] - slope[i - 1]);
        }
        let m = solve_tridiagonal(&sub, &diag, &sup, &rhs);
        Ok(Self {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            m,
        })
    }

    fn segment_value(&self, i: usize, x: f64) -> f64 {
        let h = self.xs[i + 1] - self.xs[i];
        let t = x - self.xs[i];
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let b = (self.ys[i + 1] - self.ys[i]) / h - h * (2.0 * m0 + m1) / 6.0;
        self.ys[i] + t * (b + t * (m0 / 2.0 + t * (m1 - m0) / (6.0 * h)))
    }

    fn segment_of(&self, x: f64) -> usize {
        let last = self.xs.len() - 2;
        match self.xs.partition_point(|&k| k <= x) {
            0 => 0,
            p => (p - 1).min(last),
        }
    }

    /// Value at `x`; outside the knot range the end cubic is extended.
    pub fn eval(&self, x: f64) -> f64 {
        self.segment_value(self.segment_of(x), x)
    }

    /// Values at `0, 1, .., n-1` in one sweep.
    pub fn eval_grid(&self, n: usize) -> Vec<f64> {
        self.eval_sorted((0..n).map(|i| i as f64))
    }

    /// Values at ascending query points.
    pub fn eval_sorted(&self, queries: impl Iterator<Item = f64>) -> Vec<f64> {
        let last = self.xs.len() - 2;
        let mut seg = 0;
        queries
            .map(|x| {
                while seg < last && x >= self.xs[seg + 1] {
                    seg += 1;
                }
                self.segment_value(seg, x)
            })
            .collect()
    }
}

/// Thomas algorithm; the system is diagonally dominant for every use here.
fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let den = diag[i] - sub[i] * c[i - 1];
        c[i] = if i + 1 < n { sup[i] / den } else { 0.0 };
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / den;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Natural-spline resampling; output holds `round(n·fs_out/fs_in)` samples.
pub fn resample_cubic(x: &[f64], fs_in: f64, fs_out: f64) -> Result<Vec<f64>> {
    let len = (x.len() as f64 * fs_out / fs_in).round() as usize;
    resample_cubic_to_len(x, fs_in, fs_out, len)
}

/// Natural-spline resampling onto exactly `len` output samples at `fs_out`.
pub fn resample_cubic_to_len(x: &[f64], fs_in: f64, fs_out: f64, len: usize) -> Result<Vec<f64>> {
    if !(fs_in > 0.0 && fs_out > 0.0 && fs_in.is_finite() && fs_out.is_finite()) {
        return Err(Error::invalid(format!(
            "sample rates must be positive, got {fs_in} and {fs_out}"
        )));
    }
    if fs_in == fs_out && len == x.len() {
        return Ok(x.to_vec());
    }
    if x.len() < 4 {
        return Err(Error::invalid(format!(
            "cubic resampling needs at least 4 samples, got {}",
            x.len()
        )));
    }
    let knots: Vec<f64> = (0..x.len()).map(|i| i as f64).collect();
    let spline = CubicSpline::new(&knots, x, SplineBoundary::Natural)?;
    let step = fs_in / fs_out;
    Ok(spline.eval_sorted((0..len).map(|k| k as f64 * step)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_when_rates_match() {
        let x = vec![1.0, 5.0, -2.0, 0.5, 3.0];
        assert_eq!(resample_cubic(&x, 10.0, 10.0).unwrap(), x);
    }

    #[test]
    fn exact_at_knots() {
        let x: Vec<f64> = (0..40).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
        let y = resample_cubic(&x, 4.0, 16.0).unwrap();
        assert_eq!(y.len(), 160);
        for (i, v) in x.iter().enumerate() {
            assert_eq!(y[4 * i], *v);
        }
    }

    #[test]
    fn clamped_spline_reproduces_cubic() {
        let p = |t: f64| t * t * t - 2.0 * t;
        let dp = |t: f64| 3.0 * t * t - 2.0;
        let xs: Vec<f64> = (0..21).map(|i| i as f64 / 4.0).collect();
        let ys: Vec<f64> = xs.iter().map(|&t| p(t)).collect();
        let s = CubicSpline::new(&xs, &ys, SplineBoundary::Clamped(dp(0.0), dp(5.0))).unwrap();
        for k in 0..=80 {
            let t = k as f64 / 16.0;
            assert!((s.eval(t) - p(t)).abs() < 1e-9, "t={t}");
        }
    }

    #[test]
    fn upsampled_sine_tracks_analytic() {
        let f = |t: f64| (2.0 * std::f64::consts::PI * t).sin();
        let x: Vec<f64> = (0..128).map(|i| f(i as f64 / 32.0)).collect();
        let y = resample_cubic(&x, 32.0, 256.0).unwrap();
        assert_eq!(y.len(), 1024);
        let mse = y
            .iter()
            .enumerate()
            .map(|(k, v)| (v - f(k as f64 / 256.0)).powi(2))
            .sum::<f64>()
            / y.len() as f64;
        assert!(mse.sqrt() < 1e-3, "rmse {}", mse.sqrt());
    }

    #[test]
    fn short_input_is_rejected() {
        assert!(resample_cubic(&[1.0, 2.0, 3.0], 1.0, 256.0).is_err());
        assert!(resample_cubic(&[1.0, 2.0, 3.0, 4.0], 0.0, 256.0).is_err());
    }

    #[test]
    fn two_knot_natural_is_linear() {
        let s = CubicSpline::new(&[0.0, 2.0], &[1.0, 5.0], SplineBoundary::Natural).unwrap();
        assert!((s.eval(1.0) - 3.0).abs() < 1e-12);
        assert!((s.eval(3.0) - 7.0).abs() < 1e-12);
    }

    proptest::proptest! {
        #[test]
        fn time_span_preserved(n in 4usize..300, fs_in in 1.0f64..64.0, fs_out in 1.0f64..512.0) {
            let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
            let y = resample_cubic(&x, fs_in, fs_out).unwrap();
            let span_in = n as f64 / fs_in;
            let span_out = y.len() as f64 / fs_out;
            proptest::prop_assert!((span_in - span_out).abs() <= 1.0 / fs_out + 1e-9);
        }
    }
}
