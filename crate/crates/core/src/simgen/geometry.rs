//! Planar geometry for walls, rays and visibility.

use serde::{Deserialize, Serialize};

pub type Point = [f64; 2];

pub fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut w = a.rem_euclid(TAU);
    if w > PI {
        w -= TAU;
    }
    w
}

/// Distance along the ray `origin + t·dir` (unit `dir`) to segment `a–b`, if hit.
pub fn ray_segment(origin: Point, dir: Point, a: Point, b: Point) -> Option<f64> {
    let e = [b[0] - a[0], b[1] - a[1]];
    let denom = dir[0] * e[1] - dir[1] * e[0];
    if denom.abs() < 1e-15 {
        return None;
    }
    let w = [a[0] - origin[0], a[1] - origin[1]];
    let t = (w[0] * e[1] - w[1] * e[0]) / denom;
    let u = (w[0] * dir[1] - w[1] * dir[0]) / denom;
    if t >= 0.0 && (0.0..=1.0).contains(&u) {
        Some(t)
    } else {
        None
    }
}

/// A possibly rotated rectangle. `width` runs along the local x axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub center: Point,
    pub width: f64,
    pub height: f64,
    #[serde(default)]
    pub yaw: f64,
}

impl Rect {
    pub fn to_local(&self, p: Point) -> Point {
        let (s, c) = self.yaw.sin_cos();
        let d = [p[0] - self.center[0], p[1] - self.center[1]];
        [c * d[0] + s * d[1], -s * d[0] + c * d[1]]
    }

    pub fn to_world(&self, p: Point) -> Point {
        let (s, c) = self.yaw.sin_cos();
        [
            self.center[0] + c * p[0] - s * p[1],
            self.center[1] + s * p[0] + c * p[1],
        ]
    }

    /// Strict interior test after growing every side by `margin`.
    pub fn contains_inflated(&self, p: Point, margin: f64) -> bool {
        let l = self.to_local(p);
        l[0].abs() < self.width / 2.0 + margin && l[1].abs() < self.height / 2.0 + margin
    }

    pub fn contains(&self, p: Point) -> bool {
        self.contains_inflated(p, 0.0)
    }

    /// Corners in counter-clockwise order, each pushed out by `margin` along both local axes.
    pub fn corners_inflated(&self, margin: f64) -> [Point; 4] {
        let hw = self.width / 2.0 + margin;
        let hh = self.height / 2.0 + margin;
        [[hw, hh], [-hw, hh], [-hw, -hh], [hw, -hh]].map(|c| self.to_world(c))
    }

    pub fn corners(&self) -> [Point; 4] {
        self.corners_inflated(0.0)
    }

    pub fn edges(&self) -> [(Point, Point); 4] {
        let c = self.corners();
        [(c[0], c[1]), (c[1], c[2]), (c[2], c[3]), (c[3], c[0])]
    }

    /// Whether segment `a–b` passes through the rectangle grown by `margin`.
    pub fn blocks_segment(&self, a: Point, b: Point, margin: f64) -> bool {
        let la = self.to_local(a);
        let lb = self.to_local(b);
        let half = [self.width / 2.0 + margin, self.height / 2.0 + margin];
        // Liang–Barsky clip of the local segment against the box.
        let d = [lb[0] - la[0], lb[1] - la[1]];
        let (mut t0, mut t1) = (0.0f64, 1.0f64);
        for axis in 0..2 {
            if d[axis].abs() < 1e-15 {
                if la[axis].abs() >= half[axis] {
                    return false;
                }
                continue;
            }
            let mut ta = (-half[axis] - la[axis]) / d[axis];
            let mut tb = (half[axis] - la[axis]) / d[axis];
            if ta > tb {
                std::mem::swap(&mut ta, &mut tb);
            }
            t0 = t0.max(ta);
            t1 = t1.min(tb);
            if t0 >= t1 {
                return false;
            }
        }
        true
    }
}

/// Axis-aligned outer boundary of the arena.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: Point,
    pub max: Point,
}

impl Bounds {
    pub fn contains(&self, p: Point) -> bool {
        p[0] > self.min[0] && p[0] < self.max[0] && p[1] > self.min[1] && p[1] < self.max[1]
    }

    pub fn contains_rect(&self, r: &Rect) -> bool {
        r.corners().iter().all(|&c| {
            c[0] >= self.min[0] && c[0] <= self.max[0] && c[1] >= self.min[1] && c[1] <= self.max[1]
        })
    }

    pub fn edges(&self) -> [(Point, Point); 4] {
        let (a, b) = (self.min, self.max);
        let c = [[a[0], a[1]], [b[0], a[1]], [b[0], b[1]], [a[0], b[1]]];
        [(c[0], c[1]), (c[1], c[2]), (c[2], c[3]), (c[3], c[0])]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    #[test]
    fn ray_hits_perpendicular_segment() {
        let t = ray_segment([0.0, 0.0], [1.0, 0.0], [2.0, -1.0], [2.0, 1.0]).unwrap();
        assert_eq!(t, 2.0);
        assert!(ray_segment([0.0, 0.0], [-1.0, 0.0], [2.0, -1.0], [2.0, 1.0]).is_none());
        assert!(ray_segment([0.0, 0.0], [0.0, 1.0], [2.0, -1.0], [2.0, 1.0]).is_none());
    }

    #[test]
    fn rotated_rect_contains() {
        let r = Rect { center: [1.0, 1.0], width: 2.0, height: 0.2, yaw: FRAC_PI_2 };
        assert!(r.contains([1.0, 1.9]));
        assert!(!r.contains([1.9, 1.0]));
        assert!(r.contains_inflated([1.15, 1.0], 0.1));
    }

    #[test]
    fn segment_blocking() {
        let r = Rect { center: [1.0, 0.0], width: 0.1, height: 1.0, yaw: 0.0 };
        assert!(r.blocks_segment([0.0, 0.0], [2.0, 0.0], 0.0));
        assert!(!r.blocks_segment([0.0, 0.8], [2.0, 0.8], 0.0));
        assert!(r.blocks_segment([0.0, 0.55], [2.0, 0.55], 0.1));
        assert!(!r.blocks_segment([0.0, 0.0], [0.9, 0.0], 0.0));
        let rr = Rect { yaw: FRAC_PI_4, ..r };
        assert!(rr.blocks_segment([0.0, 0.0], [2.0, 0.0], 0.0));
    }

    #[test]
    fn wrap() {
        assert!((wrap_angle(3.0 * PI / 2.0) + FRAC_PI_2).abs() < 1e-12);
        assert!((wrap_angle(PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-12);
    }
}
