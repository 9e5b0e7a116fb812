//! Closed-loop benchmark: social-forces pedestrians, motion predictors,
//! corridor and open-square scenarios, metrics, batches and sweeps.

mod batch;
mod episode;
mod metrics;
mod pedestrians;
mod predict;
mod scenario;

pub use batch::{
    consistency_sweep_specs, path_sweep_specs, run_batch, run_batch_with, sweep_consistency, sweep_paths, BatchReport,
    Comparison, PlannerSpec, RunRow,
};
pub use episode::{
    braking_input, run_episode, CandidateSummary, Episode, EpisodeOptions, PedestrianState, RunTrace, StepRecord, TraceHeader,
    TRACE_SCHEMA, TRACE_SCHEMA_VERSION,
};
pub use metrics::{mann_whitney, mean, std_dev, MetricsSummary, RankSum, RunMetrics, SIGNIFICANCE};
pub use pedestrians::{
    arrived, social_force, social_forces_step, Agent, Pedestrian, SocialForceParams, PEDESTRIAN_RADIUS,
    PLANNER_PEDESTRIAN_RADIUS,
};
pub use predict::{gaussian_covariance, predict, PredictionInput, PredictionModel};
pub use scenario::{Scenario, ScenarioConfig, ScenarioKind};
