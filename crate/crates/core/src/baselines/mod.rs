//! Comparison models: Gaussian naive Bayes and SVMs on trial summaries, and
//! CNN/BiLSTM sequence models sharing TPM-Net's encoders.

mod features;
mod nb;
mod seq;
mod svm;

pub use features::{
    band_powers, summarize, FeatureVector, Standardizer, BANDS, BAND_NAMES, CHANNEL_STATS,
};
pub use nb::{NaiveBayes, VAR_FLOOR};
pub use seq::{BiLstmBaseline, CnnBaseline};
pub use svm::{default_gamma, Kernel, Svm, SvmConfig};
