//! LIDAR detections and their rasterization into binary spike frames.

use std::f64::consts::TAU;

/// Side length of a spike frame in cells.
pub const GRID_SIZE: usize = 59;

/// Number of cells in a spike frame.
pub const GRID_CELLS: usize = GRID_SIZE * GRID_SIZE;

/// Default half-width of the square world window covered by a frame, in meters.
pub const DEFAULT_HALF_EXTENT_M: f64 = 5.0;

/// A single LIDAR return in sensor-relative polar form.
///
/// The bearing is kept in degrees, the sensor's native unit, so that detections
/// survive a text round trip bit-for-bit. Use [`LidarDetection::angle_rad`] for
/// the radian value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LidarDetection {
    range_m: f64,
    angle_deg: f64,
}

impl LidarDetection {
    /// Returns `None` if the range is negative or either value is not finite.
    /// The angle is wrapped into `[0, 360)`.
    pub fn from_degrees(range_m: f64, angle_deg: f64) -> Option<Self> {
        if !range_m.is_finite() || range_m < 0.0 || !angle_deg.is_finite() {
            return None;
        }
        let mut wrapped = angle_deg.rem_euclid(360.0);
        if wrapped >= 360.0 {
            wrapped = 0.0;
        }
        Some(Self {
            range_m,
            angle_deg: wrapped,
        })
    }

    pub fn from_radians(range_m: f64, angle_rad: f64) -> Option<Self> {
        Self::from_degrees(range_m, angle_rad.to_degrees())
    }

    pub fn range_m(&self) -> f64 {
        self.range_m
    }

    pub fn angle_deg(&self) -> f64 {
        self.angle_deg
    }

    /// Bearing in radians, in `[0, 2π)`.
    pub fn angle_rad(&self) -> f64 {
        let rad = self.angle_deg.to_radians();
        if rad >= TAU {
            0.0
        } else {
            rad
        }
    }
}

/// A detection projected onto the sensor's Cartesian plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CartesianPoint {
    pub x_m: f64,
    pub y_m: f64,
}

pub fn polar_to_cartesian(d: &LidarDetection) -> CartesianPoint {
    let theta = d.angle_rad();
    CartesianPoint {
        x_m: d.range_m * theta.cos(),
        y_m: d.range_m * theta.sin(),
    }
}

/// A 59×59 binary occupancy image for one scan.
///
/// Row 0 is the most negative `y`, column 0 the most negative `x`; the sensor
/// sits at the center cell.
#[derive(Clone, PartialEq, Eq)]
pub struct SpikeFrame {
    cells: Vec<u8>,
    frame_index: usize,
}

impl std::fmt::Debug for SpikeFrame {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpikeFrame")
            .field("frame_index", &self.frame_index)
            .field("popcount", &self.popcount())
            .finish()
    }
}

impl SpikeFrame {
    pub fn empty(frame_index: usize) -> Self {
        Self {
            cells: vec![0; GRID_CELLS],
            frame_index,
        }
    }

    pub fn frame_index(&self) -> usize {
        self.frame_index
    }

    pub fn with_index(mut self, frame_index: usize) -> Self {
        self.frame_index = frame_index;
        self
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.cells[row * GRID_SIZE + col] != 0
    }

    pub fn set(&mut self, row: usize, col: usize) {
        self.cells[row * GRID_SIZE + col] = 1;
    }

    pub fn popcount(&self) -> usize {
        self.cells.iter().filter(|&&c| c != 0).count()
    }

    /// `(row, col)` of every set cell in row-major order.
    pub fn set_cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(i, _)| (i / GRID_SIZE, i % GRID_SIZE))
    }

    /// Row-major `0.0`/`1.0` values, the network's single input channel.
    pub fn to_f64(&self) -> Vec<f64> {
        self.cells.iter().map(|&c| f64::from(c)).collect()
    }
}

/// Cell edge length for a window of half-width `half_extent_m`.
pub fn cell_size(half_extent_m: f64) -> f64 {
    2.0 * half_extent_m / GRID_SIZE as f64
}

/// `(row, col)` of the cell containing `p`, or `None` when `p` falls outside the
/// open window `(-R, R)²`.
pub fn cell_of(p: CartesianPoint, half_extent_m: f64) -> Option<(usize, usize)> {
    let r = half_extent_m;
    if !(p.x_m.abs() < r && p.y_m.abs() < r) {
        return None;
    }
    let rho = cell_size(r);
    let col = ((p.x_m + r) / rho).floor();
    let row = ((p.y_m + r) / rho).floor();
    // Floating rounding can push a point just inside +R onto index 59.
    if col < 0.0 || row < 0.0 || col >= GRID_SIZE as f64 || row >= GRID_SIZE as f64 {
        return None;
    }
    Some((row as usize, col as usize))
}

/// Center of cell `(row, col)` in sensor coordinates.
pub fn cell_center(row: usize, col: usize, half_extent_m: f64) -> CartesianPoint {
    let rho = cell_size(half_extent_m);
    CartesianPoint {
        x_m: (col as f64 + 0.5) * rho - half_extent_m,
        y_m: (row as f64 + 0.5) * rho - half_extent_m,
    }
}

/// Rasterizes points already in Cartesian form.
pub fn rasterize_points<I>(points: I, half_extent_m: f64) -> SpikeFrame
where
    I: IntoIterator<Item = CartesianPoint>,
{
    assert!(half_extent_m > 0.0, "half extent must be positive");
    let mut frame = SpikeFrame::empty(0);
    for p in points {
        if let Some((row, col)) = cell_of(p, half_extent_m) {
            frame.set(row, col);
        }
    }
    frame
}

/// Converts one scan into a spike frame. Detections outside the window are
/// dropped, not clamped onto the border.
pub fn rasterize_scan(detections: &[LidarDetection], half_extent_m: f64) -> SpikeFrame {
    rasterize_points(detections.iter().map(polar_to_cartesian), half_extent_m)
}
