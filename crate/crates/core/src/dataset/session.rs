//! Session types and the on-disk session directory format.
//!
//! A session directory holds four files:
//!
//! ```text
//! meta.json  {"id", "fps", "grid", "half_extent_m", "num_frames", "source", "seed", "goal_reached"}
//! scan.csv   frame,angle_deg,range_m   (one row per detection, frames nondecreasing)
//! kin.csv    frame,x,y,vx,vy,theta     (one row per frame)
//! cmd.csv    frame,right,left          (one row per frame, values in {-1, 1})
//! ```
//!
//! Floats are written with Rust's shortest round-trip formatting, so a save
//! followed by a load reproduces every value bit-for-bit.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::scan::{rasterize_scan, LidarDetection, SpikeFrame, GRID_SIZE};
use super::DatasetError;

pub const META_FILE: &str = "meta.json";
pub const SCAN_FILE: &str = "scan.csv";
pub const KIN_FILE: &str = "kin.csv";
pub const CMD_FILE: &str = "cmd.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

const SCAN_HEADER: &str = "frame,angle_deg,range_m";
const KIN_HEADER: &str = "frame,x,y,vx,vy,theta";
const CMD_HEADER: &str = "frame,right,left";

/// Robot state estimate: position, velocity and heading.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct KinematicsVector {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub pose: f64,
}

impl KinematicsVector {
    pub fn to_array(&self) -> [f64; 5] {
        [self.x, self.y, self.vx, self.vy, self.pose]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        Self {
            x: a[0],
            y: a[1],
            vx: a[2],
            vy: a[3],
            pose: a[4],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Rotation directions of the right and left motor channels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CommandVector {
    right: i8,
    left: i8,
}

impl CommandVector {
    pub const FORWARD: Self = Self { right: 1, left: 1 };
    pub const REVERSE: Self = Self { right: -1, left: -1 };
    /// Right wheel forward, left wheel back: counter-clockwise rotation.
    pub const TURN_LEFT: Self = Self { right: 1, left: -1 };
    pub const TURN_RIGHT: Self = Self { right: -1, left: 1 };

    pub const ALL: [Self; 4] = [Self::FORWARD, Self::TURN_RIGHT, Self::TURN_LEFT, Self::REVERSE];

    pub fn new(right: i64, left: i64) -> Option<Self> {
        let ok = |v: i64| v == 1 || v == -1;
        if ok(right) && ok(left) {
            Some(Self {
                right: right as i8,
                left: left as i8,
            })
        } else {
            None
        }
    }

    pub fn right(&self) -> i8 {
        self.right
    }

    pub fn left(&self) -> i8 {
        self.left
    }

    pub fn to_f64(&self) -> [f64; 2] {
        [f64::from(self.right), f64::from(self.left)]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionSource {
    Synthetic,
    Imported,
}

/// One recorded run: aligned LIDAR scans, kinematics and command labels.
///
/// The four streams are parallel; index `k` of each belongs to frame `k`.
/// `spikes` is derived from `scans` and `half_extent_m`.
#[derive(Clone, Debug, PartialEq)]
pub struct Session {
    pub id: String,
    pub fps: f64,
    pub half_extent_m: f64,
    pub source: SessionSource,
    pub seed: Option<u64>,
    /// Set by the simulator; `Some(false)` marks a run that hit its frame cap.
    pub goal_reached: Option<bool>,
    pub scans: Vec<Vec<LidarDetection>>,
    pub spikes: Vec<SpikeFrame>,
    pub kinematics: Vec<KinematicsVector>,
    pub commands: Vec<CommandVector>,
}

impl Session {
    /// Builds a session from raw streams, rasterizing each scan.
    #[allow(clippy::too_many_arguments)]
    pub fn from_streams(
        id: impl Into<String>,
        fps: f64,
        half_extent_m: f64,
        source: SessionSource,
        seed: Option<u64>,
        scans: Vec<Vec<LidarDetection>>,
        kinematics: Vec<KinematicsVector>,
        commands: Vec<CommandVector>,
    ) -> Result<Self, DatasetError> {
        let spikes = scans
            .iter()
            .enumerate()
            .map(|(k, s)| rasterize_scan(s, half_extent_m).with_index(k))
            .collect();
        let session = Self {
            id: id.into(),
            fps,
            half_extent_m,
            source,
            seed,
            goal_reached: None,
            scans,
            spikes,
            kinematics,
            commands,
        };
        session.validate()?;
        Ok(session)
    }

    pub fn len(&self) -> usize {
        self.commands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.commands.is_empty()
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        let n = self.commands.len();
        if self.scans.len() != n || self.kinematics.len() != n || self.spikes.len() != n {
            return Err(DatasetError::StreamLengthMismatch {
                scans: self.scans.len(),
                spikes: self.spikes.len(),
                kinematics: self.kinematics.len(),
                commands: n,
            });
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(DatasetError::Invalid(format!("fps must be positive, got {}", self.fps)));
        }
        if !(self.half_extent_m.is_finite() && self.half_extent_m > 0.0) {
            return Err(DatasetError::Invalid(format!(
                "half_extent_m must be positive, got {}",
                self.half_extent_m
            )));
        }
        if let Some(k) = self.spikes.iter().enumerate().position(|(k, f)| f.frame_index() != k) {
            return Err(DatasetError::FrameIndexGap {
                file: "spikes".into(),
                expected: k,
                found: self.spikes[k].frame_index(),
            });
        }
        if let Some(k) = self.kinematics.iter().position(|v| !v.is_finite()) {
            return Err(DatasetError::Invalid(format!("non-finite kinematics at frame {k}")));
        }
        if self.id.is_empty() || self.id.contains(['/', '\\']) {
            return Err(DatasetError::Invalid(format!("bad session id {:?}", self.id)));
        }
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Meta {
    id: String,
    fps: f64,
    grid: usize,
    half_extent_m: f64,
    num_frames: usize,
    source: SessionSource,
    seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    goal_reached: Option<bool>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn save_session(s: &Session, dir: &Path) -> Result<(), DatasetError> {
    s.validate()?;
    fs::create_dir_all(dir).map_err(io_err(dir))?;

    let meta = Meta {
        id: s.id.clone(),
        fps: s.fps,
        grid: GRID_SIZE,
        half_extent_m: s.half_extent_m,
        num_frames: s.len(),
        source: s.source,
        seed: s.seed,
        goal_reached: s.goal_reached,
    };
    let mut meta_text = serde_json::to_string_pretty(&meta).map_err(DatasetError::Json)?;
    meta_text.push('\n');

    let mut scan = String::from(SCAN_HEADER);
    scan.push('\n');
    for (k, dets) in s.scans.iter().enumerate() {
        for d in dets {
            let _ = writeln!(scan, "{k},{},{}", d.angle_deg(), d.range_m());
        }
    }

    let mut kin = String::from(KIN_HEADER);
    kin.push('\n');
    for (k, v) in s.kinematics.iter().enumerate() {
        let _ = writeln!(kin, "{k},{},{},{},{},{}", v.x, v.y, v.vx, v.vy, v.pose);
    }

    let mut cmd = String::from(CMD_HEADER);
    cmd.push('\n');
    for (k, c) in s.commands.iter().enumerate() {
        let _ = writeln!(cmd, "{k},{},{}", c.right(), c.left());
    }

    for (name, text) in [
        (META_FILE, meta_text),
        (SCAN_FILE, scan),
        (KIN_FILE, kin),
        (CMD_FILE, cmd),
    ] {
        let path = dir.join(name);
        fs::write(&path, text).map_err(io_err(&path))?;
    }
    Ok(())
}

fn read_file(dir: &Path, name: &str) -> Result<String, DatasetError> {
    let path = dir.join(name);
    if !path.is_file() {
        return Err(DatasetError::MissingFile(path));
    }
    fs::read_to_string(&path).map_err(io_err(&path))
}

/// Splits a CSV body into data rows, checking the header. Yields
/// `(line_number, fields)` with 1-based line numbers.
fn csv_rows<'a>(
    text: &'a str,
    file: &'a str,
    header: &str,
) -> Result<impl Iterator<Item = (usize, Vec<&'a str>)> + 'a, DatasetError> {
    let mut lines = text.lines();
    let first = lines.next().unwrap_or("");
    if first.trim_end_matches('\r') != header {
        return Err(DatasetError::MalformedRow {
            file: file.into(),
            line: 1,
            reason: format!("expected header {header:?}, found {first:?}"),
        });
    }
    Ok(lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 2, l.trim_end_matches('\r').split(',').collect())))
}

fn parse_field<T: std::str::FromStr>(
    file: &str,
    line: usize,
    fields: &[&str],
    idx: usize,
    name: &str,
) -> Result<T, DatasetError> {
    let raw = fields.get(idx).ok_or_else(|| DatasetError::MalformedRow {
        file: file.into(),
        line,
        reason: format!("missing column {name}"),
    })?;
    raw.trim().parse().map_err(|_| DatasetError::MalformedRow {
        file: file.into(),
        line,
        reason: format!("cannot parse {name} from {raw:?}"),
    })
}

fn check_width(file: &str, line: usize, fields: &[&str], n: usize) -> Result<(), DatasetError> {
    if fields.len() != n {
        return Err(DatasetError::MalformedRow {
            file: file.into(),
            line,
            reason: format!("expected {n} columns, found {}", fields.len()),
        });
    }
    Ok(())
}

pub fn load_session(dir: &Path) -> Result<Session, DatasetError> {
    let meta_text = read_file(dir, META_FILE)?;
    let scan_text = read_file(dir, SCAN_FILE)?;
    let kin_text = read_file(dir, KIN_FILE)?;
    let cmd_text = read_file(dir, CMD_FILE)?;

    let meta: Meta = serde_json::from_str(&meta_text).map_err(DatasetError::Json)?;
    if meta.grid != GRID_SIZE {
        return Err(DatasetError::Invalid(format!(
            "grid size {} unsupported (expected {GRID_SIZE})",
            meta.grid
        )));
    }
    let n = meta.num_frames;

    let mut scans: Vec<Vec<LidarDetection>> = vec![Vec::new(); n];
    let mut last_frame = 0usize;
    for (line, fields) in csv_rows(&scan_text, SCAN_FILE, SCAN_HEADER)? {
        check_width(SCAN_FILE, line, &fields, 3)?;
        let frame: usize = parse_field(SCAN_FILE, line, &fields, 0, "frame")?;
        let angle: f64 = parse_field(SCAN_FILE, line, &fields, 1, "angle_deg")?;
        let range: f64 = parse_field(SCAN_FILE, line, &fields, 2, "range_m")?;
        if frame < last_frame {
            return Err(DatasetError::MalformedRow {
                file: SCAN_FILE.into(),
                line,
                reason: format!("frame {frame} after frame {last_frame}"),
            });
        }
        if frame >= n {
            return Err(DatasetError::MalformedRow {
                file: SCAN_FILE.into(),
                line,
                reason: format!("frame {frame} beyond num_frames {n}"),
            });
        }
        last_frame = frame;
        let det = LidarDetection::from_degrees(range, angle).ok_or_else(|| {
            DatasetError::MalformedRow {
                file: SCAN_FILE.into(),
                line,
                reason: format!("invalid detection (range {range}, angle {angle})"),
            }
        })?;
        scans[frame].push(det);
    }

    let mut kinematics = Vec::with_capacity(n);
    for (line, fields) in csv_rows(&kin_text, KIN_FILE, KIN_HEADER)? {
        check_width(KIN_FILE, line, &fields, 6)?;
        let frame: usize = parse_field(KIN_FILE, line, &fields, 0, "frame")?;
        if frame != kinematics.len() {
            return Err(DatasetError::FrameIndexGap {
                file: KIN_FILE.into(),
                expected: kinematics.len(),
                found: frame,
            });
        }
        let mut v = [0.0; 5];
        for (i, name) in ["x", "y", "vx", "vy", "theta"].iter().enumerate() {
            v[i] = parse_field(KIN_FILE, line, &fields, i + 1, name)?;
        }
        kinematics.push(KinematicsVector::from_array(v));
    }
    if kinematics.len() != n {
        return Err(DatasetError::FrameIndexGap {
            file: KIN_FILE.into(),
            expected: kinematics.len(),
            found: n,
        });
    }

    let mut commands = Vec::with_capacity(n);
    for (line, fields) in csv_rows(&cmd_text, CMD_FILE, CMD_HEADER)? {
        check_width(CMD_FILE, line, &fields, 3)?;
        let frame: usize = parse_field(CMD_FILE, line, &fields, 0, "frame")?;
        if frame != commands.len() {
            return Err(DatasetError::FrameIndexGap {
                file: CMD_FILE.into(),
                expected: commands.len(),
                found: frame,
            });
        }
        let right: i64 = parse_field(CMD_FILE, line, &fields, 1, "right")?;
        let left: i64 = parse_field(CMD_FILE, line, &fields, 2, "left")?;
        let cmd = CommandVector::new(right, left)
            .ok_or(DatasetError::InvalidCommand { line, right, left })?;
        commands.push(cmd);
    }
    if commands.len() != n {
        return Err(DatasetError::FrameIndexGap {
            file: CMD_FILE.into(),
            expected: commands.len(),
            found: n,
        });
    }

    let mut session = Session::from_streams(
        meta.id,
        meta.fps,
        meta.half_extent_m,
        meta.source,
        meta.seed,
        scans,
        kinematics,
        commands,
    )?;
    session.goal_reached = meta.goal_reached;
    Ok(session)
}

#[derive(Debug, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub sessions: Vec<String>,
}

pub fn write_manifest(root: &Path, manifest: &Manifest) -> Result<PathBuf, DatasetError> {
    fs::create_dir_all(root).map_err(io_err(root))?;
    let path = root.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(manifest).map_err(DatasetError::Json)?;
    text.push('\n');
    fs::write(&path, text).map_err(io_err(&path))?;
    Ok(path)
}

pub fn read_manifest(root: &Path) -> Result<Manifest, DatasetError> {
    let text = read_file(root, MANIFEST_FILE)?;
    serde_json::from_str(&text).map_err(DatasetError::Json)
}

/// Loads every session listed in `root/manifest.json`, in manifest order.
pub fn load_dataset(root: &Path) -> Result<Vec<Session>, DatasetError> {
    read_manifest(root)?
        .sessions
        .iter()
        .map(|rel| load_session(&root.join(rel)))
        .collect()
}
