//! Zero-phase Butterworth low-pass filtering.

use crate::error::{Error, Result};

/// One second-order section, coefficients normalized so `a0 = 1`.
#[derive(Clone, Copy, Debug)]
struct Biquad {
    b: [f64; 3],
    a: [f64; 2],
}

impl Biquad {
    fn lowpass(fs: f64, cutoff: f64, q: f64) -> Self {
        let w0 = 2.0 * std::f64::consts::PI * cutoff / fs;
        let (sin, cos) = w0.sin_cos();
        let alpha = sin / (2.0 * q);
        let a0 = 1.0 + alpha;
        let b0 = (1.0 - cos) / 2.0 / a0;
        Biquad {
            b: [b0, (1.0 - cos) / a0, b0],
            a: [-2.0 * cos / a0, (1.0 - alpha) / a0],
        }
    }

    fn dc_gain(&self) -> f64 {
        (self.b[0] + self.b[1] + self.b[2]) / (1.0 + self.a[0] + self.a[1])
    }

    /// Transposed direct-form II state that makes a constant input `x` a fixed point.
    fn steady_state(&self, x: f64) -> [f64; 2] {
        let y = self.dc_gain() * x;
        let z2 = self.b[2] * x - self.a[1] * y;
        let z1 = self.b[1] * x - self.a[0] * y + z2;
        [z1, z2]
    }

    fn run(&self, data: &mut [f64], mut z: [f64; 2]) {
        for v in data.iter_mut() {
            let x = *v;
            let y = self.b[0] * x + z[0];
            z[0] = self.b[1] * x - self.a[0] * y + z[1];
            z[1] = self.b[2] * x - self.a[1] * y;
            *v = y;
        }
    }
}

/// Even-order Butterworth low-pass realised as a cascade of biquads.
#[derive(Clone, Debug)]
pub struct Butterworth {
    sections: Vec<Biquad>,
    order: usize,
}

impl Butterworth {
    pub fn lowpass(order: usize, fs: f64, cutoff: f64) -> Result<Self> {
        if !(fs > 0.0 && fs.is_finite()) {
            return Err(Error::invalid(format!(
                "sample rate must be positive, got {fs}"
            )));
        }
        if !(cutoff > 0.0 && cutoff < fs / 2.0) {
            return Err(Error::invalid(format!(
                "cutoff {cutoff} Hz outside (0, {}) Hz",
                fs / 2.0
            )));
        }
        if order == 0 || order % 2 != 0 {
            return Err(Error::invalid(format!(
                "filter order must be even and positive, got {order}"
            )));
        }
        let sections = (0..order / 2)
            .map(|k| {
                let theta = std::f64::consts::PI * (2 * k + 1) as f64 / (2 * order) as f64;
                Biquad::lowpass(fs, cutoff, 1.0 / (2.0 * theta.cos()))
            })
            .collect();
        Ok(Self { sections, order })
    }

    fn run_once(&self, data: &mut [f64]) {
        for s in &self.sections {
            let z = s.steady_state(data[0]);
            s.run(data, z);
        }
    }

    /// Forward-backward application: squared magnitude response, zero phase.
    pub fn filtfilt(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = x.len();
        if n < self.order {
            return Err(Error::invalid(format!(
                "signal of length {n} shorter than filter order {}",
                self.order
            )));
        }
        let pad = (3 * (2 * self.order + 1)).min(n - 1);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        // Odd extension about both end samples.
        ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

        self.run_once(&mut ext);
        ext.reverse();
        self.run_once(&mut ext);
        ext.reverse();
        Ok(ext[pad..pad + n].to_vec())
    }
}

/// Zero-phase 4th-order Butterworth low-pass.
pub fn lowpass_filter(x: &[f64], fs: f64, cutoff: f64) -> Result<Vec<f64>> {
    Butterworth::lowpass(4, fs, cutoff)?.filtfilt(x)
}
