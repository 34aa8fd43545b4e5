use std::f64::consts::TAU;

use crate::dataset::{CommandVector, KinematicsVector};

use super::geometry::wrap_angle;
use super::world::{StartPose, WorldSpec};

/// Differential-drive rover state. Both wheels always spin at `wheel_speed_rad_s`;
/// commands only pick each wheel's direction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RobotState {
    pub x: f64,
    pub y: f64,
    pub pose: f64,
    pub vx: f64,
    pub vy: f64,
    pub wheel_radius_m: f64,
    pub wheel_base_m: f64,
    pub wheel_speed_rad_s: f64,
}

impl RobotState {
    pub const DEFAULT_WHEEL_RADIUS_M: f64 = 0.03;
    pub const DEFAULT_WHEEL_BASE_M: f64 = 0.15;
    pub const WHEEL_SPEED_RAD_S: f64 = TAU;

    pub fn at(start: StartPose) -> Self {
        Self {
            x: start.x,
            y: start.y,
            pose: start.pose,
            vx: 0.0,
            vy: 0.0,
            wheel_radius_m: Self::DEFAULT_WHEEL_RADIUS_M,
            wheel_base_m: Self::DEFAULT_WHEEL_BASE_M,
            wheel_speed_rad_s: Self::WHEEL_SPEED_RAD_S,
        }
    }

    pub fn position(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    /// Reported pose is wrapped to (−π, π].
    pub fn kinematics(&self) -> KinematicsVector {
        KinematicsVector {
            x: self.x,
            y: self.y,
            vx: self.vx,
            vy: self.vy,
            pose: wrap_angle(self.pose),
        }
    }

    /// Linear speed when both wheels turn forward.
    pub fn forward_speed(&self) -> f64 {
        self.wheel_radius_m * self.wheel_speed_rad_s
    }
}

/// Pure kinematic update: rotate first, then advance along the new heading.
pub fn step_dynamics(robot: &RobotState, cmd: CommandVector, dt: f64) -> RobotState {
    assert!(dt > 0.0, "dt must be positive");
    let [right, left] = cmd.to_f64();
    let rim = robot.wheel_radius_m * robot.wheel_speed_rad_s;
    let v = rim * (right + left) / 2.0;
    let yaw_rate = rim * (right - left) / robot.wheel_base_m;
    let pose = robot.pose + yaw_rate * dt;
    let (s, c) = pose.sin_cos();
    RobotState {
        x: robot.x + v * dt * c,
        y: robot.y + v * dt * s,
        pose,
        vx: v * c,
        vy: v * s,
        ..*robot
    }
}

/// Steps the robot and refuses any translation that would end inside a wall or
/// outside the arena; the heading change still applies.
pub fn step_in_world(world: &WorldSpec, robot: &RobotState, cmd: CommandVector, dt: f64) -> RobotState {
    let next = step_dynamics(robot, cmd, dt);
    if world.is_free(next.position()) {
        next
    } else {
        RobotState {
            x: robot.x,
            y: robot.y,
            vx: 0.0,
            vy: 0.0,
            ..next
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn origin() -> RobotState {
        RobotState::at(StartPose { x: 0.0, y: 0.0, pose: 0.0 })
    }

    #[test]
    fn forward_is_straight() {
        let r = step_dynamics(&origin(), CommandVector::FORWARD, 0.1);
        assert_eq!(r.pose, 0.0);
        assert_eq!(r.y, 0.0);
        // r_w·ω·dt = 0.03·2π·0.1
        assert!((r.x - 0.018849555921538757).abs() < 1e-15);
        assert!((r.x - 0.01885).abs() < 1e-5);
        assert!((r.vx - 0.18849555921538757).abs() < 1e-15);
    }

    #[test]
    fn opposite_wheels_rotate_in_place() {
        let r = step_dynamics(&origin(), CommandVector::TURN_LEFT, 0.1);
        assert_eq!((r.x, r.y), (0.0, 0.0));
        assert!(r.pose > 0.0);
        // 0.03·2π·2/0.15·0.1
        assert!((r.pose - 0.25132741228718347).abs() < 1e-15);
        let r = step_dynamics(&origin(), CommandVector::TURN_RIGHT, 0.1);
        assert!(r.pose < 0.0);
    }

    #[test]
    fn reverse_undoes_forward() {
        let start = RobotState { pose: 0.7, x: 0.3, y: -1.1, ..origin() };
        let a = step_dynamics(&start, CommandVector::FORWARD, 0.1);
        let b = step_dynamics(&a, CommandVector::REVERSE, 0.1);
        assert!((b.x - start.x).abs() < 1e-9);
        assert!((b.y - start.y).abs() < 1e-9);
        assert!((b.pose - start.pose).abs() < 1e-9);
        let back = step_dynamics(&start, CommandVector::REVERSE, 0.1);
        assert!(((back.x - start.x) + (a.x - start.x)).abs() < 1e-15);
    }
}
