//! Neural network components: autodiff tape, layers, TPM-Net and shared model plumbing.

pub mod layers;
mod model;
mod params;
mod tape;
mod tpm;

pub use model::{
    batch_loss, batch_loss_grads, gradient_check, predict_logits, GroupCheck, Mode, SequenceModel,
};
pub use params::{Grads, ParamId, ParamStore};
pub use tape::{Tape, Var};
pub use tpm::{init_params, Frontend, Modality, PerModality, TpmNet, TpmNetConfig, ZEITGEBER_DIM};
