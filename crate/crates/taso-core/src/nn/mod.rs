//! Minimal from-scratch neural-network engine: forward, backward, and the
//! softmax-cross-entropy loss, sufficient to train LeNet5-class models.
//! Parameters and gradients are exposed as flat tensor collections for the
//! optimizer.

mod layer;
mod linalg;
mod models;
mod network;

pub use layer::{Conv2d, Dense, Init, Layer, MaxPool2d};
pub use models::{build_lenet5, build_mlp};
pub use network::{evaluate_logits, softmax_cross_entropy, ForwardPass, Network};
