//! Planner configuration. Defaults are the reference experimental settings.

use serde::{Deserialize, Serialize};

use super::dynamics::InputLimits;

/// Homotopy comparison backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    HSignature,
    Winding,
    Uvd,
}

/// How winding numbers separate classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindingRule {
    /// Distinct only if some obstacle is passed on opposite sides by both.
    SidesOnly,
    /// Additionally distinct if one trajectory passes an obstacle and the other does not.
    PassingDistinct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecisionRule {
    MinimalCost,
    Consistent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GoalGrid {
    pub longitudinal: usize,
    pub lateral: usize,
    pub longitudinal_spacing: f64,
    pub lateral_spacing: f64,
}

impl Default for GoalGrid {
    fn default() -> Self {
        GoalGrid { longitudinal: 5, lateral: 5, longitudinal_spacing: 1.0, lateral_spacing: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Weights {
    pub contour: f64,
    pub lag: f64,
    pub velocity: f64,
    pub omega: f64,
    pub acceleration: f64,
    pub terminal: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Weights { contour: 0.05, lag: 0.75, velocity: 0.55, omega: 0.85, acceleration: 0.34, terminal: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    pub max_iterations: usize,
    pub tol_kkt: f64,
    pub tol_ineq: f64,
    /// Per-solve wall-clock budget (s).
    pub deadline: Option<f64>,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings { max_iterations: 100, tol_kkt: 1e-6, tol_ineq: 1e-6, deadline: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    /// Horizon steps `N`.
    pub horizon_steps: usize,
    /// Integration step `dT` (s).
    pub dt: f64,
    /// Planning step `h` (s) by which graph nodes are propagated.
    pub planning_step: f64,
    /// Number of distinct guidance trajectories `P`.
    pub num_paths: usize,
    /// Visibility-PRM sample limit `n`.
    pub prm_samples: usize,
    /// Visibility-PRM time limit (s).
    pub prm_time_limit: Option<f64>,
    pub goal_grid: GoalGrid,
    pub v_ref: f64,
    pub v_max: f64,
    pub a_max: f64,
    pub omega_max: f64,
    /// Combined robot and obstacle radius `r` (m).
    pub radius: f64,
    /// Robot radius used for wall clearance (m).
    pub robot_radius: f64,
    /// Homotopy constraint relaxation `beta` in [0, 1].
    pub beta: f64,
    pub weights: Weights,
    /// Discount `c_i` for the previously followed homotopy class.
    pub consistency: f64,
    pub backend: Backend,
    pub decision: DecisionRule,
    pub winding_rule: WindingRule,
    pub lambda_pass: f64,
    pub uvd_samples: usize,
    /// Risk `epsilon`; `Some` switches the local planner to chance constraints.
    pub risk: Option<f64>,
    /// Half-width of the sampling band around the reference path (m).
    pub sampling_band: f64,
    /// Weight on the goal deviation in the guidance heuristic cost.
    pub goal_weight: f64,
    /// Only the nearest obstacles are constrained in the local planner.
    pub max_obstacles: usize,
    /// Semi-axes (along, across the obstacle's motion) replacing the disc collision constraint.
    pub collision_ellipse: Option<[f64; 2]>,
    pub solver: SolverSettings,
    pub seed: u64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            horizon_steps: 30,
            dt: 0.2,
            planning_step: 0.05,
            num_paths: 4,
            prm_samples: 30,
            prm_time_limit: Some(0.010),
            goal_grid: GoalGrid::default(),
            v_ref: 2.0,
            v_max: 2.0,
            a_max: 2.0,
            omega_max: 2.0,
            radius: 0.725,
            robot_radius: 0.325,
            beta: 0.1,
            weights: Weights::default(),
            consistency: 0.75,
            backend: Backend::HSignature,
            decision: DecisionRule::Consistent,
            winding_rule: WindingRule::SidesOnly,
            lambda_pass: 1.0 / (4.0 * std::f64::consts::PI),
            uvd_samples: 20,
            risk: None,
            sampling_band: 8.0,
            goal_weight: 2.0,
            max_obstacles: 12,
            collision_ellipse: None,
            solver: SolverSettings::default(),
            seed: 0,
        }
    }
}

impl PlannerConfig {
    /// Time horizon `T = N dT`.
    pub fn horizon(&self) -> f64 {
        self.horizon_steps as f64 * self.dt
    }

    pub fn limits(&self) -> InputLimits {
        InputLimits { v_max: self.v_max, a_max: self.a_max, omega_max: self.omega_max }
    }

    pub fn from_toml(text: &str) -> crate::Result<Self> {
        let cfg: PlannerConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> crate::Result<()> {
        let bad = |m: &str| Err(crate::Error::Config(m.to_string()));
        if self.horizon_steps == 0 {
            return bad("horizon_steps must be positive");
        }
        for (name, v) in [
            ("dt", self.dt),
            ("planning_step", self.planning_step),
            ("v_ref", self.v_ref),
            ("v_max", self.v_max),
            ("a_max", self.a_max),
            ("omega_max", self.omega_max),
            ("radius", self.radius),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(&format!("{name} must be positive"));
            }
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return bad("beta must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.consistency) {
            return bad("consistency must lie in [0, 1]");
        }
        if let Some(eps) = self.risk {
            if !(eps > 0.0 && eps < 1.0) {
                return bad("risk must lie in (0, 1)");
            }
        }
        if self.goal_grid.longitudinal == 0 || self.goal_grid.lateral == 0 {
            return bad("goal grid dimensions must be positive");
        }
        let w = &self.weights;
        if [w.contour, w.lag, w.velocity, w.omega, w.acceleration, w.terminal].iter().any(|x| *x < 0.0) {
            return bad("weights must be non-negative");
        }
        if self.uvd_samples < 2 {
            return bad("uvd_samples must be at least 2");
        }
        Ok(())
    }
}
