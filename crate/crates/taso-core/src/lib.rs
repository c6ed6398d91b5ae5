//! Training-aware sigmoidal learning-rate schedule (TASO), the classic
//! first-order optimizers it is compared against, a small from-scratch f64
//! neural-network engine, analytic benchmark landscapes, and a reproducible
//! experiment harness.
//!
//! The schedule holds a high learning rate through the first part of
//! training and drops it sigmoidally toward a small final rate at a
//! configurable fraction of the *planned* epoch budget:
//!
//! ```text
//! lr(k) = lr_initial / (1 + exp(alpha * (k / total_epochs - beta))) + lr_final
//! ```
//!
//! Everything is 64-bit, seeded, and bit-deterministic: a `(config, seed)`
//! pair fixes every emitted byte.

pub mod benchfn;
pub mod checkpoint;
pub mod data;
pub mod error;
pub mod harness;
pub mod nn;
pub mod optim;
pub mod schedule;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::Tensor;

pub use data::{BatchPlan, Dataset, Split, SyntheticKind};
pub use harness::{AggregateRecord, ExperimentConfig, RunRecord};
pub use nn::{build_lenet5, build_mlp, Network};
pub use optim::{make_optimizer, Optimizer, OptimizerSpec};
pub use schedule::{default_config, lr_for_epoch, taso_lr, ScheduleConfig, ScheduleKind};
