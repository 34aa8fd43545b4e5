use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::LidarDetection;

use super::geometry::ray_segment;
use super::robot::RobotState;
use super::world::WorldSpec;

/// Planar scanner model: evenly spaced beams starting at the robot's heading.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LidarModel {
    pub num_beams: usize,
    pub max_range_m: f64,
    pub range_noise_sigma_m: f64,
}

impl Default for LidarModel {
    fn default() -> Self {
        Self {
            num_beams: 360,
            max_range_m: 6.0,
            range_noise_sigma_m: 0.01,
        }
    }
}

impl LidarModel {
    pub fn beam_angle_deg(&self, i: usize) -> f64 {
        i as f64 * 360.0 / self.num_beams as f64
    }
}

/// Casts every beam against walls and arena bounds. Beams with no hit inside
/// `max_range_m` produce no detection. Angles are relative to the robot heading.
pub fn raycast<R: Rng + ?Sized>(
    world: &WorldSpec,
    robot: &RobotState,
    lidar: &LidarModel,
    rng: &mut R,
) -> Vec<LidarDetection> {
    assert!(lidar.num_beams >= 1 && lidar.max_range_m > 0.0 && lidar.range_noise_sigma_m >= 0.0);
    let noise = (lidar.range_noise_sigma_m > 0.0)
        .then(|| Normal::new(0.0, lidar.range_noise_sigma_m).expect("finite sigma"));
    let origin = robot.position();
    let segments: Vec<_> = world
        .walls
        .iter()
        .flat_map(|w| w.edges())
        .chain(world.bounds.edges())
        .collect();

    let mut out = Vec::new();
    for i in 0..lidar.num_beams {
        let rel_deg = lidar.beam_angle_deg(i);
        let (s, c) = (robot.pose + rel_deg.to_radians()).sin_cos();
        let hit = segments
            .iter()
            .filter_map(|&(a, b)| ray_segment(origin, [c, s], a, b))
            .fold(f64::INFINITY, f64::min);
        if hit > lidar.max_range_m {
            continue;
        }
        let mut range = hit;
        if let Some(n) = &noise {
            range += n.sample(rng);
        }
        let range = range.clamp(0.0, lidar.max_range_m);
        out.extend(LidarDetection::from_degrees(range, rel_deg));
    }
    out
}

/// Smallest range among detections within `half_cone_deg` of straight ahead.
pub fn forward_range(scan: &[LidarDetection], half_cone_deg: f64) -> Option<f64> {
    scan.iter()
        .filter(|d| d.angle_deg() <= half_cone_deg || d.angle_deg() >= 360.0 - half_cone_deg)
        .map(|d| d.range_m())
        .min_by(f64::total_cmp)
}
