//! Spiking-network obstacle avoidance from 2D LIDAR.
//!
//! * [`dataset`]: spike-frame rasterization and the session file format
//! * [`simgen`]: synthetic sessions from a simulated rover
//! * [`snn`]: LIF dynamics, the fusion network and its CNN twin, BPTT
//! * [`training`]: Adam, k-fold cross-validation, evaluation metrics
//! * [`experiments`]: leak sweep, Welch's t-test, FLOP accounting, CLI

pub mod dataset;
pub mod experiments;
pub mod simgen;
pub mod snn;
pub mod training;
