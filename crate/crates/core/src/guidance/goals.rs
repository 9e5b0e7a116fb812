use serde::{Deserialize, Serialize};

use super::GuidanceError;
use crate::model::{PlannerConfig, ReferencePath, RobotState, SpaceTimePoint, Workspace};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Goal {
    pub point: SpaceTimePoint,
    /// Distance to the ideal goal (m).
    pub deviation: f64,
}

/// Grid of horizon-end goals around the point reached at `v_ref`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalSet {
    pub goals: Vec<Goal>,
    pub ideal: [f64; 2],
}

pub fn goal_grid(
    path: &ReferencePath,
    state: &RobotState,
    cfg: &PlannerConfig,
    workspace: &Workspace,
) -> Result<GoalSet, GuidanceError> {
    let horizon = cfg.horizon();
    let s_c = state.s + cfg.v_ref * horizon;
    let ideal = path.frame(s_c).pos;
    let g = &cfg.goal_grid;
    let mut goals = Vec::with_capacity(g.longitudinal * g.lateral);
    for i in 0..g.longitudinal {
        let ds = (i as f64 - (g.longitudinal - 1) as f64 / 2.0) * g.longitudinal_spacing;
        let s = s_c + ds;
        let frame = path.frame(s);
        let normal = path.normal(s);
        for j in 0..g.lateral {
            let dl = (j as f64 - (g.lateral - 1) as f64 / 2.0) * g.lateral_spacing;
            let p = [frame.pos[0] + dl * normal[0], frame.pos[1] + dl * normal[1]];
            if !workspace.contains(p, cfg.robot_radius) {
                continue;
            }
            let deviation = (p[0] - ideal[0]).hypot(p[1] - ideal[1]);
            goals.push(Goal { point: SpaceTimePoint::new(p[0], p[1], horizon), deviation });
        }
    }
    if goals.is_empty() {
        return Err(GuidanceError::NoGoals);
    }
    Ok(GoalSet { goals, ideal })
}
