//! Scripted driver that stands in for the human operator.
//!
//! The policy is bang-bang pursuit of a waypoint: the goal when it is in line of
//! sight, otherwise the best detour point just outside a wall corner.

use crate::dataset::{CommandVector, LidarDetection};

use super::geometry::{dist, wrap_angle, Point};
use super::lidar::forward_range;
use super::robot::RobotState;
use super::world::WorldSpec;

/// Half-width of the forward cone used for the reverse rule.
const FORWARD_CONE_DEG: f64 = 5.0;
/// Extra clearance around walls when checking line of sight.
const SIGHT_MARGIN_M: f64 = 0.12;
/// Added to the detour cost when the goal is not visible from a corner.
const HIDDEN_GOAL_PENALTY_M: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OracleConfig {
    pub heading_deadband_rad: f64,
    pub reverse_clearance_m: f64,
    pub waypoint_offset_m: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            heading_deadband_rad: 0.15,
            reverse_clearance_m: 0.25,
            waypoint_offset_m: 0.5,
        }
    }
}

fn visible(world: &WorldSpec, a: Point, b: Point) -> bool {
    !world.walls.iter().any(|w| w.blocks_segment(a, b, SIGHT_MARGIN_M))
}

/// The point the robot should currently head for.
pub fn current_waypoint(world: &WorldSpec, robot: &RobotState, cfg: &OracleConfig) -> Point {
    let here = robot.position();
    if visible(world, here, world.goal) {
        return world.goal;
    }
    world
        .walls
        .iter()
        .flat_map(|w| w.corners_inflated(cfg.waypoint_offset_m / std::f64::consts::SQRT_2))
        .filter(|&c| world.is_free(c))
        .filter(|&c| !world.walls.iter().any(|w| w.contains_inflated(c, SIGHT_MARGIN_M)))
        .filter(|&c| visible(world, here, c))
        .map(|c| {
            let mut cost = dist(here, c) + dist(c, world.goal);
            if !visible(world, c, world.goal) {
                cost += HIDDEN_GOAL_PENALTY_M;
            }
            (cost, c)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, c)| c)
        .unwrap_or(world.goal)
}

pub fn oracle_policy(
    world: &WorldSpec,
    robot: &RobotState,
    last_scan: &[LidarDetection],
    cfg: &OracleConfig,
) -> CommandVector {
    if forward_range(last_scan, FORWARD_CONE_DEG).is_some_and(|r| r < cfg.reverse_clearance_m) {
        return CommandVector::REVERSE;
    }
    let wp = current_waypoint(world, robot, cfg);
    let bearing = (wp[1] - robot.y).atan2(wp[0] - robot.x);
    let err = wrap_angle(bearing - robot.pose);
    if err.abs() <= cfg.heading_deadband_rad {
        CommandVector::FORWARD
    } else if err > 0.0 {
        CommandVector::TURN_LEFT
    } else {
        CommandVector::TURN_RIGHT
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simgen::geometry::{Bounds, Rect};
    use crate::simgen::world::StartPose;

    fn open_world(goal: Point) -> WorldSpec {
        WorldSpec {
            name: String::new(),
            walls: vec![],
            goal,
            start: StartPose { x: 0.0, y: 0.0, pose: 0.0 },
            bounds: Bounds { min: [-3.0, -3.0], max: [3.0, 3.0] },
            seed: 0,
        }
    }

    fn robot() -> RobotState {
        RobotState::at(StartPose { x: 0.0, y: 0.0, pose: 0.0 })
    }

    fn clear_scan() -> Vec<LidarDetection> {
        vec![LidarDetection::from_degrees(2.0, 0.0).unwrap()]
    }

    #[test]
    fn aligned_goes_forward() {
        let w = open_world([2.0, 0.0]);
        let cmd = oracle_policy(&w, &robot(), &clear_scan(), &OracleConfig::default());
        assert_eq!(cmd, CommandVector::FORWARD);
    }

    #[test]
    fn goal_on_left_turns_left() {
        let w = open_world([0.0, 2.0]);
        let cmd = oracle_policy(&w, &robot(), &clear_scan(), &OracleConfig::default());
        assert_eq!(cmd, CommandVector::TURN_LEFT);
        let w = open_world([0.0, -2.0]);
        let cmd = oracle_policy(&w, &robot(), &clear_scan(), &OracleConfig::default());
        assert_eq!(cmd, CommandVector::TURN_RIGHT);
    }

    #[test]
    fn close_obstacle_reverses() {
        let w = open_world([2.0, 0.0]);
        let scan = vec![LidarDetection::from_degrees(0.2, 0.0).unwrap()];
        let cmd = oracle_policy(&w, &robot(), &scan, &OracleConfig::default());
        assert_eq!(cmd, CommandVector::REVERSE);
    }

    #[test]
    fn blocked_goal_detours_around_corner() {
        let mut w = open_world([2.0, 0.0]);
        w.walls.push(Rect { center: [1.0, 0.2], width: 0.08, height: 1.0, yaw: 0.0 });
        let wp = current_waypoint(&w, &robot(), &OracleConfig::default());
        // Shorter way round is below the wall, whose lower end is at y = -0.3.
        assert!(wp[1] < -0.3, "{wp:?}");
    }
}
