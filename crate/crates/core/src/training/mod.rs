//! Surrogate-gradient training: MSE, Adam, session-level k-fold CV, evaluation.

mod adam;
mod eval;
mod folds;
mod loss;
mod train;

use std::path::PathBuf;

pub use adam::{adam_step, AdamState, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use eval::{evaluate_model, flip_counts, Evaluation, FlipCounts, StepRecord};
pub use folds::{kfold_split, FoldSplit};
pub use loss::{mse_grad, mse_loss};
pub use train::{
    kinematics_stats, mean_std, train_fold, train_folds, train_model, FoldReport, TrainConfig,
    TrainOutcome, TrainReport,
};

use crate::dataset::DatasetError;
use crate::snn::ModelError;

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("{sessions} sessions cannot fill {folds} folds")]
    TooFewSessions { sessions: usize, folds: usize },
    #[error("{predictions} predictions but {labels} labels")]
    LengthMismatch { predictions: usize, labels: usize },
    #[error("non-finite gradient in tensor {0:?}")]
    NonFiniteGradient(String),
    #[error("non-finite loss in fold {fold}, epoch {epoch}, batch {batch}")]
    NonFiniteLoss { fold: usize, epoch: usize, batch: usize },
    #[error("no evaluation windows in the test set")]
    EmptyTestSet,
    #[error("unknown session {0:?}")]
    UnknownSession(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
