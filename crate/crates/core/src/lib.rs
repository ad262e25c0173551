//! Time-perception modeling from multimodal physiological sequences.

pub mod baselines;
pub mod error;
pub mod nn;
pub mod rng;
pub mod signal;
pub mod stats;
pub mod synth;
pub mod train;
pub mod trial;

pub use error::{Error, Result, Violation};
