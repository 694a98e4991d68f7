//! Learning substrate: dense networks with manual backpropagation, Adam,
//! experience replay, the squashed Gaussian policy head and checkpoints.

mod adam;
pub mod checkpoint;
mod dense;
mod matrix;
mod replay;
mod squashed;

pub use adam::AdamState;
pub use checkpoint::{AlgorithmTag, Checkpoint, Section, SectionKind};
pub use dense::{param_count, DenseNet, Gradients};
pub use matrix::Matrix;
pub use replay::{ReplayBuffer, Transition, ACT_DIM, OBS_DIM};
pub use squashed::{SquashedGaussianHead, SquashedSample, LOG_STD_MAX, LOG_STD_MIN, SQUASH_EPS};
