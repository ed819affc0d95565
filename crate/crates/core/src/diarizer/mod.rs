//! Frame-wise FG/BG/S classification with a small residual 1-D CNN.
//!
//! The student maps a window of MFCC frames to per-frame class posteriors. It
//! is trained on reference labels plus a weighted KL term towards frozen
//! teacher posteriors, `ce + alpha * KL(teacher || student)`, with gradients
//! derived by hand.

mod checkpoint;
mod infer;
mod loss;
mod model;
mod train;

use thiserror::Error;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, write_training_log};
pub use infer::{argmax_label, infer_labels, window_spans};
pub use loss::{distill_loss, LossBreakdown, POSTERIOR_FLOOR};
pub use model::{ParamShape, StudentConfig, StudentModel};
pub use train::{train, train_from, windows_from_stream, TrainConfig, TrainingWindow};

#[derive(Debug, Error)]
pub enum DiarizerError {
    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },
    #[error("window of {frames} frames is shorter than the kernel width {kernel}")]
    TooShort { frames: usize, kernel: usize },
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error("non-finite loss")]
    NonFiniteLoss,
    #[error("non-finite loss in epoch {0}")]
    NonFiniteLossAtEpoch(usize),
    #[error("no labeled training windows")]
    EmptyDataset,
    #[error("invalid checkpoint: {0}")]
    Checkpoint(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
