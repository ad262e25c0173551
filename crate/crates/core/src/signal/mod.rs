//! Preprocessing of raw physiological recordings into model-ready sequences.

mod bundle;
mod emd;
mod filter;
mod prepare;
mod spline;

pub use bundle::{PhysioBundle, Stream, BW_CHANNELS, HS_CHANNELS};
pub use emd::{emd, extrema, Emd, EmdConfig};
pub use filter::{lowpass_filter, Butterworth};
pub use prepare::{
    detrend_eeg, pad_batch, prepare_trial, prepare_trials, znormalize, PrepConfig, PreparedBatch,
    PreparedTrial, AUX_CHANNELS,
};
pub use spline::{resample_cubic, resample_cubic_to_len, CubicSpline, SplineBoundary};
