//! Synthetic session generator: a differential-drive rover with a raycast LIDAR,
//! driven around wall obstacles by a scripted operator.

mod generate;
pub mod geometry;
mod lidar;
mod oracle;
mod robot;
mod world;

pub use generate::{
    balanced_counts, generate_dataset, generate_dataset_counts, generate_session, generate_sessions, jitter_start,
    session_seed, SimConfig, FRAME_RATE_HZ,
};
pub use lidar::{forward_range, raycast, LidarModel};
pub use oracle::{current_waypoint, oracle_policy, OracleConfig};
pub use robot::{step_dynamics, step_in_world, RobotState};
pub use world::{default_scenarios, StartPose, WorldSpec};

use crate::dataset::DatasetError;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid world: {0}")]
    InvalidWorld(String),
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}
