//! Decoder-only transformer over the 26-letter vocabulary, trained from scratch.

mod adamw;
mod checkpoint;
mod linalg;
mod params;
mod transformer;

pub use adamw::{adamw_step, adamw_update, AdamWConfig, OptimizerState};
pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_MAGIC,
    CHECKPOINT_VERSION,
};
pub use linalg::Scalar;
pub use params::{Gradients, Init, ModelConfig, ModelParams, TensorSpec, INIT_STD, MLP_RATIO};
pub use transformer::{backward, batch_loss, batch_loss_and_grad, forward, masked_loss, softmax};
