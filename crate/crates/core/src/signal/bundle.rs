use ndarray::Array2;

/// Brainwave band channels in stream order.
pub const BW_CHANNELS: [&str; 5] = ["alpha", "low_beta", "high_beta", "theta", "gamma"];
/// Human-state channels in stream order.
pub const HS_CHANNELS: [&str; 4] = ["stress", "awareness", "drowsiness", "meditation"];

/// A uniformly sampled multichannel stream, `samples × channels`.
#[derive(Clone, Debug, PartialEq)]
pub struct Stream {
    pub rate_hz: f64,
    pub data: Array2<f64>,
}

impl Stream {
    pub fn new(rate_hz: f64, data: Array2<f64>) -> Self {
        Self { rate_hz, data }
    }

    pub fn len(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.nrows() == 0
    }

    pub fn channels(&self) -> usize {
        self.data.ncols()
    }

    /// Wall-clock span covered, treating each sample as one period long.
    pub fn span_seconds(&self) -> f64 {
        self.len() as f64 / self.rate_hz
    }
}

/// Raw physiological recording of one trial.
#[derive(Clone, Debug, PartialEq)]
pub struct PhysioBundle {
    pub eeg: Stream,
    /// Band powers: α, low β, high β, θ, γ.
    pub bw: Stream,
    /// Stress, awareness, drowsiness, meditation.
    pub hs: Stream,
    pub hr: Stream,
}

impl PhysioBundle {
    /// A bundle with no samples; `n_eeg` fixes the EEG channel count.
    pub fn empty(n_eeg: usize) -> Self {
        Self {
            eeg: Stream::new(256.0, Array2::zeros((0, n_eeg))),
            bw: Stream::new(10.0, Array2::zeros((0, BW_CHANNELS.len()))),
            hs: Stream::new(1.0, Array2::zeros((0, HS_CHANNELS.len()))),
            hr: Stream::new(1.0, Array2::zeros((0, 1))),
        }
    }

    pub fn streams(&self) -> [(&'static str, &Stream); 4] {
        [
            ("eeg", &self.eeg),
            ("bw", &self.bw),
            ("hs", &self.hs),
            ("hr", &self.hr),
        ]
    }

    /// Human-readable problems with the bundle; empty when well formed.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, s) in self.streams() {
            if s.is_empty() {
                out.push(format!("stream {name} is empty"));
            }
            if !(s.rate_hz.is_finite() && s.rate_hz > 0.0) {
                out.push(format!("stream {name} has non-positive rate {}", s.rate_hz));
            }
            if s.data.iter().any(|v| !v.is_finite()) {
                out.push(format!("stream {name} has non-finite samples"));
            }
        }
        if self.eeg.channels() == 0 {
            out.push("eeg has no channels".into());
        }
        if self.bw.channels() != BW_CHANNELS.len() {
            out.push(format!(
                "bw has {} channels, expected 5",
                self.bw.channels()
            ));
        }
        if self.hs.channels() != HS_CHANNELS.len() {
            out.push(format!(
                "hs has {} channels, expected 4",
                self.hs.channels()
            ));
        }
        if self.hr.channels() != 1 {
            out.push(format!(
                "hr has {} channels, expected 1",
                self.hr.channels()
            ));
        }
        if out.is_empty() {
            let eeg_span = self.eeg.span_seconds();
            for (name, s) in self.streams() {
                let period = 1.0 / s.rate_hz;
                if (s.span_seconds() - eeg_span).abs() > period.max(1.0 / self.eeg.rate_hz) + 1e-9 {
                    out.push(format!(
                        "stream {name} spans {:.3} s but eeg spans {:.3} s",
                        s.span_seconds(),
                        eeg_span
                    ));
                }
            }
        }
        out
    }
}
