//! Session data: LIDAR rasterization, the on-disk session format, and windowing.

mod scan;
mod session;
mod window;

use std::path::PathBuf;

pub use scan::{
    cell_center, cell_of, cell_size, polar_to_cartesian, rasterize_points, rasterize_scan,
    CartesianPoint, LidarDetection, SpikeFrame, DEFAULT_HALF_EXTENT_M, GRID_CELLS, GRID_SIZE,
};
pub use session::{
    load_dataset, load_session, read_manifest, save_session, write_manifest, CommandVector,
    KinematicsVector, Manifest, Session, SessionSource, CMD_FILE, KIN_FILE, MANIFEST_FILE,
    META_FILE, SCAN_FILE,
};
pub use window::{make_windows, Window, DEFAULT_WINDOW_LEN};

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("missing file {0}")]
    MissingFile(PathBuf),
    #[error("malformed row in {file} line {line}: {reason}")]
    MalformedRow {
        file: String,
        line: usize,
        reason: String,
    },
    #[error("frame index gap in {file}: expected frame {expected}, found {found}")]
    FrameIndexGap {
        file: String,
        expected: usize,
        found: usize,
    },
    #[error("invalid command value ({right}, {left}) at cmd.csv line {line}")]
    InvalidCommand { line: usize, right: i64, left: i64 },
    #[error(
        "stream lengths differ: {scans} scans, {spikes} spike frames, {kinematics} kinematics, {commands} commands"
    )]
    StreamLengthMismatch {
        scans: usize,
        spikes: usize,
        kinematics: usize,
        commands: usize,
    },
    #[error("invalid session: {0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[source] serde_json::Error),
}
