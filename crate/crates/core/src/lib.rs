//! Topology-driven model predictive control.
//!
//! A guidance planner enumerates homotopy-distinct space-time trajectories
//! through the free space of predicted obstacles, a set of local planners
//! refines each of them under homotopy-preserving constraints (optionally
//! alongside one non-guided planner), and the executed plan is chosen by
//! cost. The [`sim_bench`] module closes the loop in a social-forces crowd.
//!
//! Module map:
//!
//! * [`model`]: robot dynamics, reference path, workspace, obstacles, config
//! * [`homotopy`]: H-signature, winding number and UVD comparison functions
//! * [`guidance`]: Visibility-PRM with goals, path search, filtering, smoothing
//! * [`local_planner`]: contouring cost, constraints and the SQP solver
//! * [`orchestrator`]: the receding-horizon planning step and decision rules
//! * [`sim_bench`]: pedestrian simulation, scenarios, metrics and batches

pub mod clock;
pub mod error;
pub mod guidance;
pub mod homotopy;
pub mod local_planner;
pub mod model;
pub mod orchestrator;
pub mod sim_bench;
pub(crate) mod serde_float;

pub use error::{Error, Result};
pub use model::{
    ObstaclePrediction, PlannerConfig, ReferencePath, RobotInput, RobotState, SpaceTimePoint,
    Workspace,
};
