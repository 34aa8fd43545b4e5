//! Analyses on top of training: α sweep, Welch's t-test, FLOP accounting,
//! report artifacts and the command-line front end.

pub mod cli;
mod flops;
mod plot;
mod report;
mod stats;
mod sweep;

use std::path::PathBuf;

pub use flops::{
    cost_layers, count_flops, count_flops_layers, measure_activity, Activity, CostLayer,
    FlopsReport, LayerFlops, ACCOUNTING,
};
pub use plot::{bar_chart, line_chart, Series};
pub use report::{
    compare_models, export_report, flops_csv, outputs_csv, ModelComparison, ReportInputs,
};
pub use stats::{student_t_cdf, welch_from_samples, welch_t_test, WelchInput, WelchResult};
pub use sweep::{alpha_sweep, config_for_alpha, default_alphas, SweepEntry, SweepResult};

use crate::dataset::DatasetError;
use crate::simgen::SimError;
use crate::snn::ModelError;
use crate::training::TrainError;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("{0}")]
    InvalidInput(String),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
