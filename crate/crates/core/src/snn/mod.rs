//! LIF neurons, layer primitives, the fusion network and its CNN twin, and BPTT.

mod layers;
mod lif;
mod mlp;
mod network;
mod tensor;
mod weights;

use std::path::PathBuf;

pub use layers::{remap_output, Activation, Conv3x3, Dense, MaxPool2};
pub use lif::{
    lif_backward, lif_step, lif_step_into, smooth_spike, spike_grad_factor, surrogate_grad,
    InputScaling, LifLayerState, LifParams, SpikeFn, SURROGATE_PEAK,
};
pub use mlp::SpikingMlp;
pub use network::{
    ActivityCounts, Architecture, ForwardTrace, LayerKind, LayerSpec, Mode, NetworkModel,
    NetworkState, StepOutput, KIN_DIM, KIN_GUARD_SIGMAS, OUT_DIM,
};
pub use tensor::{ParamSet, Tensor};
pub use weights::{load_weights, read_weights, save_weights, write_weights, WEIGHTS_FORMAT};

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("shape mismatch in {context}: expected {expected}, found {found}")]
    ShapeMismatch {
        context: String,
        expected: usize,
        found: usize,
    },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("kinematics input {0:?} is not z-score normalized")]
    UnnormalizedKinematics([f64; 5]),
    #[error("backward pass needs a recorded forward trace")]
    MissingTrace,
    #[error("weights file: {0}")]
    Format(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ModelError {
    pub(crate) fn expect_len(context: &str, expected: usize, found: usize) -> Result<(), Self> {
        if expected == found {
            Ok(())
        } else {
            Err(Self::ShapeMismatch {
                context: context.into(),
                expected,
                found,
            })
        }
    }
}
