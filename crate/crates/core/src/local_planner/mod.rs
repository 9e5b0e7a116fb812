//! Homotopy-preserving local planner: contouring cost, collision, chance and
//! homotopy constraints, solved by an elastic SQP over the input sequence.

mod constraints;
mod cost;
mod program;
mod sqp;
mod warm;

pub use constraints::{
    chance_constraint, collision_constraint, collision_constraint_ellipse, homotopy_constraint, risk_factor,
    ConstraintError,
};
pub use cost::{path_errors, stage_cost, terminal_cost, PathErrors};
pub use program::{assemble, Linearization, PlanProblem, Program, Row, RowCounts, RowKind};
pub use sqp::{solve, SolveDiagnostics, SolveStatus};
pub use warm::{reference_inputs, shifted_inputs, tracking_inputs};

use serde::{Deserialize, Serialize};

use crate::clock::Deadline;
use crate::homotopy::{HomotopyId, PolylineTrajectory};
use crate::model::{RobotInput, RobotState, SpaceTimePoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizedTrajectory {
    pub states: Vec<RobotState>,
    pub inputs: Vec<RobotInput>,
    /// Attained cost; infinite when infeasible.
    #[serde(with = "crate::serde_float")]
    pub cost: f64,
    pub feasible: bool,
    pub iterations: usize,
    pub solve_time_s: f64,
    pub dt: f64,
    pub homotopy_id: Option<HomotopyId>,
    /// Id of the guidance trajectory this solve followed, if any.
    pub guidance_id: Option<u64>,
    pub diagnostics: SolveDiagnostics,
}

impl OptimizedTrajectory {
    /// Planned positions as a space-time polyline.
    pub fn polyline(&self) -> PolylineTrajectory {
        let pts = self.states.iter().enumerate().map(|(k, s)| SpaceTimePoint::new(s.x, s.y, k as f64 * self.dt)).collect();
        PolylineTrajectory::new(pts).expect("increasing step times")
    }
}

/// Builds the warm start and solves one problem.
///
/// Guided problems track their guidance; the non-guided problem uses
/// `previous` (already time-shifted) or, failing that, reference tracking.
pub fn plan(problem: &PlanProblem, previous: Option<&[RobotInput]>, deadline: &Deadline) -> OptimizedTrajectory {
    let cfg = problem.config;
    let limits = cfg.limits();
    let guess = match (problem.guidance, previous) {
        (Some(g), _) => {
            let targets: Vec<[f64; 2]> = (0..=cfg.horizon_steps).map(|k| g.position_at(k as f64 * cfg.dt)).collect();
            tracking_inputs(&problem.initial, &targets, cfg.dt, &limits)
        }
        (None, Some(prev)) if !prev.is_empty() => prev.to_vec(),
        _ => reference_inputs(&problem.initial, problem.path, cfg.v_ref, cfg.horizon_steps, cfg.dt, &limits),
    };
    let program = assemble(problem);
    solve(&program, &guess, &cfg.solver, deadline)
}
