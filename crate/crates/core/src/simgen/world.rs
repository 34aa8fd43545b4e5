use serde::{Deserialize, Serialize};

use super::geometry::{Bounds, Point, Rect};
use super::SimError;

/// Initial robot placement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StartPose {
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub pose: f64,
}

/// One obstacle scenario: walls, a goal behind them, and the arena bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldSpec {
    #[serde(default)]
    pub name: String,
    pub walls: Vec<Rect>,
    pub goal: Point,
    pub start: StartPose,
    pub bounds: Bounds,
    #[serde(default)]
    pub seed: u64,
}

impl WorldSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        let start = [self.start.x, self.start.y];
        if !self.bounds.contains(self.goal) {
            return Err(SimError::InvalidWorld("goal outside bounds".into()));
        }
        if !self.bounds.contains(start) {
            return Err(SimError::InvalidWorld("start outside bounds".into()));
        }
        for (i, w) in self.walls.iter().enumerate() {
            if !(w.width > 0.0 && w.height > 0.0) {
                return Err(SimError::InvalidWorld(format!("wall {i} has non-positive size")));
            }
            if !self.bounds.contains_rect(w) {
                return Err(SimError::InvalidWorld(format!("wall {i} leaves the bounds")));
            }
            if w.contains(start) {
                return Err(SimError::InvalidWorld(format!("start inside wall {i}")));
            }
            if w.contains(self.goal) {
                return Err(SimError::InvalidWorld(format!("goal inside wall {i}")));
            }
        }
        Ok(())
    }

    /// True when `p` is inside the bounds and outside every wall.
    pub fn is_free(&self, p: Point) -> bool {
        self.bounds.contains(p) && !self.walls.iter().any(|w| w.contains(p))
    }

    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let w: Self = serde_json::from_str(text).map_err(|e| SimError::InvalidWorld(e.to_string()))?;
        w.validate()?;
        Ok(w)
    }
}

fn wall(cx: f64, cy: f64, length: f64, yaw_deg: f64) -> Rect {
    // Walls are thin boards; `length` is the span facing the robot.
    Rect {
        center: [cx, cy],
        width: 0.08,
        height: length,
        yaw: yaw_deg.to_radians(),
    }
}

/// The six built-in obstacle families: straight and angled walls of several widths.
pub fn default_scenarios() -> Vec<WorldSpec> {
    let bounds = Bounds {
        min: [-1.2, -2.2],
        max: [3.8, 2.2],
    };
    let start = StartPose {
        x: 0.0,
        y: 0.0,
        pose: 0.0,
    };
    let goal = [2.7, 0.0];
    let mk = |name: &str, walls: Vec<Rect>, seed: u64| WorldSpec {
        name: name.into(),
        walls,
        goal,
        start,
        bounds,
        seed,
    };
    vec![
        mk("straight_narrow", vec![wall(1.3, 0.0, 0.7, 0.0)], 1),
        mk("straight_wide", vec![wall(1.3, 0.1, 1.3, 0.0)], 2),
        mk("angled_left", vec![wall(1.3, 0.0, 1.0, 30.0)], 3),
        mk("angled_right", vec![wall(1.3, 0.0, 1.0, -30.0)], 4),
        mk("offset", vec![wall(1.3, 0.45, 1.2, 0.0)], 5),
        mk(
            "wedge",
            vec![wall(1.3, 0.3, 0.7, -35.0), wall(1.3, -0.3, 0.7, 35.0)],
            6,
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let s = default_scenarios();
        assert_eq!(s.len(), 6);
        for w in &s {
            w.validate().unwrap();
        }
    }

    #[test]
    fn json_round_trip() {
        let w = &default_scenarios()[2];
        let text = serde_json::to_string(w).unwrap();
        assert_eq!(&WorldSpec::from_json(&text).unwrap(), w);
    }

    #[test]
    fn rejects_goal_outside() {
        let mut w = default_scenarios()[0].clone();
        w.goal = [10.0, 0.0];
        assert!(w.validate().is_err());
    }
}
