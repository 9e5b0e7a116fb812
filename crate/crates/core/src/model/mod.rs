//! Shared geometric and dynamic primitives.

pub mod config;
pub mod dynamics;
pub mod obstacle;
pub mod path;
pub mod spline;
pub mod workspace;

pub use config::{
    Backend, DecisionRule, GoalGrid, PlannerConfig, SolverSettings, Weights, WindingRule,
};
pub use dynamics::{dynamics_step, InputLimits, RobotInput, RobotState, StepOutcome};
pub use obstacle::ObstaclePrediction;
pub use path::{PathSample, ReferencePath};
pub use workspace::{HalfPlane, Workspace};

use serde::{Deserialize, Serialize};

/// A point `(p, t)` of the space-time state space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimePoint {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

impl SpaceTimePoint {
    pub const fn new(x: f64, y: f64, t: f64) -> Self {
        SpaceTimePoint { x, y, t }
    }

    pub fn pos(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    pub fn dist_xy(&self, other: &SpaceTimePoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Wraps an angle into (-pi, pi].
pub fn normalize_angle(a: f64) -> f64 {
    use std::f64::consts::PI;
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}
