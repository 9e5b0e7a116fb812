use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::pedestrians::{Pedestrian, SocialForceParams, PEDESTRIAN_RADIUS};
use super::predict::PredictionModel;
use crate::model::{PlannerConfig, ReferencePath, RobotState, Workspace};

/// Goals drawn per corridor pedestrian; they shuttle between the walls.
const CORRIDOR_GOALS: usize = 12;
/// Extent of the robot's workspace past the far corner of the square (m).
const EXIT_EXTENSION: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    /// Straight corridor between two walls; pedestrians cross from both sides.
    Corridor,
    /// Square room traversed diagonally; pedestrians are removed at their goal.
    OpenSquare,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub pedestrians: usize,
    /// Corridor length (m) for the corridor, diagonal length for the square.
    pub length: f64,
    /// Corridor width (m); ignored for the square.
    pub width: f64,
    pub v_ref: f64,
    /// Control rate (Hz); also sets the planner's planning step.
    pub control_rate: f64,
    pub seed: u64,
    pub prediction: PredictionModel,
    /// Pedestrian desired speeds are drawn uniformly from this range (m/s).
    pub pedestrian_speed: [f64; 2],
    /// Episode timeout (s).
    pub timeout: f64,
    /// Optional cap on the number of control steps.
    pub max_steps: Option<usize>,
    pub social_forces: SocialForceParams,
    pub planner: PlannerConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            kind: ScenarioKind::Corridor,
            pedestrians: 12,
            length: 25.8,
            width: 6.0,
            v_ref: 2.0,
            control_rate: 20.0,
            seed: 0,
            prediction: PredictionModel::ConstantVelocity,
            pedestrian_speed: [1.0, 1.4],
            timeout: 60.0,
            max_steps: None,
            social_forces: SocialForceParams::default(),
            planner: PlannerConfig { v_max: 3.0, ..PlannerConfig::default() },
        }
    }
}

impl ScenarioConfig {
    pub fn corridor(pedestrians: usize) -> Self {
        ScenarioConfig { pedestrians, ..Default::default() }
    }

    /// Diagonal traversal of a square with a 20 m diagonal at 1.5 m/s.
    pub fn open_square(pedestrians: usize) -> Self {
        ScenarioConfig {
            kind: ScenarioKind::OpenSquare,
            pedestrians,
            length: 20.0,
            v_ref: 1.5,
            ..Default::default()
        }
    }

    pub fn from_toml(text: &str) -> crate::Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> crate::Result<()> {
        let bad = |m: &str| Err(crate::Error::Config(m.to_string()));
        for (name, v) in [("length", self.length), ("v_ref", self.v_ref), ("control_rate", self.control_rate), ("timeout", self.timeout)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(&format!("{name} must be positive"));
            }
        }
        if self.kind == ScenarioKind::Corridor && self.width <= 2.0 * self.planner.robot_radius {
            return bad("corridor narrower than the robot");
        }
        let [lo, hi] = self.pedestrian_speed;
        if !(lo > 0.0 && lo <= hi) {
            return bad("pedestrian_speed must be an increasing positive range");
        }
        if let PredictionModel::Gaussian { sigma } = self.prediction {
            if !(sigma > 0.0) {
                return bad("gaussian sigma must be positive");
            }
        }
        self.planner_config().validate()
    }

    /// Control period (s).
    pub fn control_period(&self) -> f64 {
        1.0 / self.control_rate
    }

    /// Planner configuration with the scenario's reference speed and control period.
    pub fn planner_config(&self) -> PlannerConfig {
        PlannerConfig { v_ref: self.v_ref, planning_step: self.control_period(), ..self.planner.clone() }
    }

    /// Builds the scenario geometry and seeded pedestrian spawns.
    pub fn build(&self) -> Scenario {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let [slo, shi] = self.pedestrian_speed;
        let speed = |rng: &mut ChaCha8Rng| if shi > slo { rng.random_range(slo..shi) } else { slo };
        match self.kind {
            ScenarioKind::Corridor => {
                let half = 0.5 * self.width;
                let band = half - 0.5;
                let pedestrians = (0..self.pedestrians)
                    .map(|i| {
                        let side = if i % 2 == 0 { 1.0 } else { -1.0 };
                        let x = rng.random_range(4.0..self.length - 2.0);
                        let pos = [x, side * band];
                        let mut goals = Vec::with_capacity(CORRIDOR_GOALS);
                        let mut gx = x;
                        for g in 0..CORRIDOR_GOALS {
                            gx = (gx + rng.random_range(-4.0..4.0)).clamp(1.0, self.length + 4.0);
                            let gside = if g % 2 == 0 { -side } else { side };
                            goals.push([gx, gside * band]);
                        }
                        let first = goals.remove(0);
                        Pedestrian {
                            id: i as u64,
                            pos,
                            vel: [0.0, 0.0],
                            goal: first,
                            later_goals: goals,
                            desired_speed: speed(&mut rng),
                            radius: PEDESTRIAN_RADIUS,
                        }
                    })
                    .collect();
                let path = ReferencePath::straight([0.0, 0.0], [self.length + 25.0, 0.0]).expect("distinct points");
                Scenario {
                    workspace: Workspace::corridor(half),
                    path,
                    goal_progress: self.length,
                    start: RobotState::new(0.0, 0.0, 0.0, self.v_ref, 0.0),
                    pedestrians,
                    remove_at_goal: false,
                }
            }
            ScenarioKind::OpenSquare => {
                let side = self.length / std::f64::consts::SQRT_2;
                let margin = 1.5;
                let (lo, hi) = (-margin, side + margin);
                let border = |rng: &mut ChaCha8Rng, edge: usize| -> [f64; 2] {
                    let u = rng.random_range(lo + 0.5..hi - 0.5);
                    match edge {
                        0 => [u, lo + 0.5],
                        1 => [hi - 0.5, u],
                        2 => [u, hi - 0.5],
                        _ => [lo + 0.5, u],
                    }
                };
                let pedestrians = (0..self.pedestrians)
                    .map(|i| {
                        let edge = rng.random_range(0..4usize);
                        let pos = border(&mut rng, edge);
                        let goal = border(&mut rng, (edge + 2) % 4);
                        Pedestrian {
                            id: i as u64,
                            pos,
                            vel: [0.0, 0.0],
                            goal,
                            later_goals: Vec::new(),
                            desired_speed: speed(&mut rng),
                            radius: PEDESTRIAN_RADIUS,
                        }
                    })
                    .collect();
                let dir = std::f64::consts::FRAC_1_SQRT_2;
                let far = self.length + 25.0;
                let path = ReferencePath::straight([0.0, 0.0], [far * dir, far * dir]).expect("distinct points");
                // The robot exits through the far corner, so its workspace extends beyond the room.
                let exit = hi + EXIT_EXTENSION;
                Scenario {
                    workspace: Workspace::rectangle(lo, exit, lo, exit).expect("non-empty square"),
                    path,
                    goal_progress: self.length,
                    start: RobotState::new(0.0, 0.0, std::f64::consts::FRAC_PI_4, self.v_ref, 0.0),
                    pedestrians,
                    remove_at_goal: true,
                }
            }
        }
    }
}

/// Materialized scenario: geometry, start state and initial crowd.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub workspace: Workspace,
    /// Reference path, extended beyond the goal so the horizon never runs off it.
    pub path: ReferencePath,
    /// Path progress at which the task is complete (m).
    pub goal_progress: f64,
    pub start: RobotState,
    pub pedestrians: Vec<Pedestrian>,
    pub remove_at_goal: bool,
}
