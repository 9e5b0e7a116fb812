//! Browser bindings: interactive static-scene planning, a steppable crowd
//! simulation and homotopy comparison of two sketched paths. All exchange
//! is JSON text; the plain `*_json` functions carry the logic and are
//! usable (and tested) natively.

use serde::{Deserialize, Serialize};
use tmpc::homotopy::{HomotopyParams, HomotopyScene, PolylineTrajectory};
use tmpc::local_planner::OptimizedTrajectory;
use tmpc::model::{Backend, ObstaclePrediction, PlannerConfig, ReferencePath, RobotState, Workspace};
use tmpc::orchestrator::{Orchestrator, PlannerMode, StepResult, Variant};
use tmpc::sim_bench::{Episode, EpisodeOptions, ScenarioConfig, ScenarioKind, PLANNER_PEDESTRIAN_RADIUS};
use wasm_bindgen::prelude::*;

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleInput {
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub vx: f64,
    #[serde(default)]
    pub vy: f64,
}

fn default_variant() -> String {
    "t-mpc++".into()
}

fn default_paths() -> usize {
    4
}

fn default_backend() -> String {
    "h-signature".into()
}

/// A robot at the origin heading along +x in a corridor with the given obstacles.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneInput {
    pub obstacles: Vec<ObstacleInput>,
    #[serde(default = "default_variant")]
    pub variant: String,
    #[serde(default = "default_paths")]
    pub num_paths: usize,
    #[serde(default = "default_backend")]
    pub backend: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub half_width: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PlanOutput {
    pub class_id: Option<u64>,
    pub guided: bool,
    pub feasible: bool,
    pub selected: bool,
    pub cost: f64,
    pub points: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GuidanceOutput {
    pub class_id: u64,
    pub points: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SceneOutput {
    pub plans: Vec<PlanOutput>,
    pub guidance: Vec<GuidanceOutput>,
    pub obstacles: Vec<Vec<[f64; 2]>>,
    pub radius: f64,
    pub half_width: Option<f64>,
}

fn parse_backend(s: &str) -> Result<Backend, String> {
    match s {
        "h-signature" => Ok(Backend::HSignature),
        "winding" => Ok(Backend::Winding),
        "uvd" => Ok(Backend::Uvd),
        _ => Err(format!("unknown backend `{s}`")),
    }
}

fn finite(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        -1.0
    }
}

fn plans(result: &StepResult) -> Vec<PlanOutput> {
    let selected = result.record.selected;
    result
        .candidates
        .iter()
        .zip(&result.record.candidates)
        .enumerate()
        .map(|(i, (c, r)): (usize, (&OptimizedTrajectory, _))| PlanOutput {
            class_id: r.class_id,
            guided: !r.non_guided,
            feasible: c.feasible,
            selected: selected == Some(i),
            cost: finite(c.cost),
            points: c.states.iter().map(|s| s.pos()).collect(),
        })
        .collect()
}

fn guidance_of(orch: &Orchestrator) -> Vec<GuidanceOutput> {
    orch.guidance()
        .previous()
        .iter()
        .map(|g| GuidanceOutput {
            class_id: g.id.id,
            points: g.smoothed.points().iter().map(|p| [p.x, p.y]).collect(),
        })
        .collect()
}

/// Plans one step in a static or constant-velocity scene.
pub fn plan_scene_json(input: &str) -> Result<String, String> {
    let input: SceneInput = serde_json::from_str(input).map_err(|e| e.to_string())?;
    let variant: Variant = input.variant.parse()?;
    let cfg = PlannerConfig {
        v_max: 3.0,
        num_paths: input.num_paths.max(1),
        backend: parse_backend(&input.backend)?,
        seed: input.seed,
        ..PlannerConfig::default()
    };
    cfg.validate().map_err(|e| e.to_string())?;
    let obstacles: Vec<ObstaclePrediction> = input
        .obstacles
        .iter()
        .enumerate()
        .map(|(i, o)| ObstaclePrediction::constant_velocity(i as u64, [o.x, o.y], [o.vx, o.vy], PLANNER_PEDESTRIAN_RADIUS, cfg.horizon_steps, cfg.dt))
        .collect();
    let workspace = match input.half_width {
        Some(h) => Workspace::corridor(h),
        None => Workspace::unbounded(),
    };
    let path = ReferencePath::straight([-5.0, 0.0], [60.0, 0.0]).map_err(|e| e.to_string())?;
    let state = RobotState::new(0.0, 0.0, 0.0, cfg.v_ref, 0.0);
    let mut orch = Orchestrator::new(cfg.clone(), PlannerMode::new(variant, &cfg));
    orch.set_deterministic(true);
    let result = orch.plan_step(&state, &obstacles, &path, &workspace);
    let out = SceneOutput {
        plans: plans(&result),
        guidance: guidance_of(&orch),
        obstacles: obstacles.iter().map(|o| o.positions.clone()).collect(),
        radius: cfg.radius,
        half_width: input.half_width,
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareInput {
    pub obstacles: Vec<ObstacleInput>,
    /// Two sketched paths, sampled uniformly in time over the horizon.
    pub a: Vec<[f64; 2]>,
    pub b: Vec<[f64; 2]>,
    #[serde(default = "default_backend")]
    pub backend: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareOutput {
    pub same_class: bool,
    pub invariants_a: Vec<f64>,
    pub invariants_b: Vec<f64>,
}

/// Whether two sketched paths lie in the same homotopy class.
pub fn compare_paths_json(input: &str) -> Result<String, String> {
    let input: CompareInput = serde_json::from_str(input).map_err(|e| e.to_string())?;
    let backend = parse_backend(&input.backend)?;
    let cfg = PlannerConfig { backend, ..PlannerConfig::default() };
    let horizon = cfg.horizon();
    let traj = |pts: &[[f64; 2]]| -> Result<PolylineTrajectory, String> {
        if pts.len() < 2 {
            return Err("a path needs at least two points".into());
        }
        PolylineTrajectory::from_positions(pts, horizon / (pts.len() - 1) as f64).map_err(|e| e.to_string())
    };
    let (a, b) = (traj(&input.a)?, traj(&input.b)?);
    let obstacles = input
        .obstacles
        .iter()
        .enumerate()
        .map(|(i, o)| ObstaclePrediction::constant_velocity(i as u64, [o.x, o.y], [o.vx, o.vy], PLANNER_PEDESTRIAN_RADIUS, cfg.horizon_steps, cfg.dt))
        .collect();
    let scene = HomotopyScene::new(obstacles, cfg.dt, HomotopyParams::from_config(&cfg));
    let same_class = scene.compare(&a, &b, backend).map_err(|e| e.to_string())?;
    let out = CompareOutput { same_class, invariants_a: scene.invariants(&a, backend), invariants_b: scene.invariants(&b, backend) };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrowdInput {
    #[serde(default)]
    pub open_square: bool,
    pub pedestrians: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_variant")]
    pub variant: String,
    #[serde(default = "default_paths")]
    pub num_paths: usize,
    #[serde(default)]
    pub consistency: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Frame {
    pub t: f64,
    pub finished: bool,
    pub robot: [f64; 3],
    pub pedestrians: Vec<[f64; 2]>,
    pub plans: Vec<PlanOutput>,
    pub view: [f64; 4],
    pub walls: Vec<([f64; 2], f64)>,
    pub infeasible_steps: usize,
    pub collisions: usize,
}

/// Closed-loop crowd simulation advanced one control step per call.
pub struct Crowd {
    episode: Episode,
    view: [f64; 4],
    period: f64,
}

impl Crowd {
    pub fn from_json(input: &str) -> Result<Self, String> {
        let input: CrowdInput = serde_json::from_str(input).map_err(|e| e.to_string())?;
        let variant: Variant = input.variant.parse()?;
        let mut scenario =
            if input.open_square { ScenarioConfig::open_square(input.pedestrians) } else { ScenarioConfig::corridor(input.pedestrians) };
        scenario.seed = input.seed;
        scenario.planner.seed = input.seed;
        scenario.planner.num_paths = input.num_paths.max(1);
        if let Some(c) = input.consistency {
            scenario.planner.consistency = c;
        }
        scenario.validate().map_err(|e| e.to_string())?;
        let view = match scenario.kind {
            ScenarioKind::Corridor => [-2.0, scenario.length + 2.0, -0.5 * scenario.width - 0.5, 0.5 * scenario.width + 0.5],
            ScenarioKind::OpenSquare => {
                let side = scenario.length / std::f64::consts::SQRT_2;
                [-2.0, side + 2.0, -2.0, side + 2.0]
            }
        };
        let mode = PlannerMode::new(variant, &scenario.planner);
        let options = EpisodeOptions { record_pedestrians: false, record_decisions: false, ..EpisodeOptions::default() };
        Ok(Crowd { episode: Episode::new(&scenario, mode, variant.name(), &options), view, period: scenario.control_period() })
    }

    pub fn step(&mut self) -> bool {
        self.episode.step()
    }

    pub fn frame(&self) -> Frame {
        let r = self.episode.robot();
        let metrics = self.episode.metrics();
        Frame {
            t: self.episode.steps().len() as f64 * self.period,
            finished: self.episode.finished(),
            robot: [r.x, r.y, r.psi],
            pedestrians: self.episode.pedestrians().iter().map(|p| p.pos).collect(),
            plans: self.episode.last_result().map(plans).unwrap_or_default(),
            view: self.view,
            walls: self.episode.world().workspace.planes().iter().map(|h| (h.normal, h.offset)).collect(),
            infeasible_steps: metrics.infeasible_steps,
            collisions: metrics.collisions,
        }
    }
}

fn js(e: String) -> JsError {
    JsError::new(&e)
}

/// Plans one step for a JSON scene; returns plans and guidance as JSON.
#[wasm_bindgen(js_name = planScene)]
pub fn plan_scene(input: &str) -> Result<String, JsError> {
    plan_scene_json(input).map_err(js)
}

/// Compares the homotopy classes of two sketched paths.
#[wasm_bindgen(js_name = comparePaths)]
pub fn compare_paths(input: &str) -> Result<String, JsError> {
    compare_paths_json(input).map_err(js)
}

#[wasm_bindgen]
pub struct CrowdDemo {
    inner: Crowd,
}

#[wasm_bindgen]
impl CrowdDemo {
    #[wasm_bindgen(constructor)]
    pub fn new(input: &str) -> Result<CrowdDemo, JsError> {
        Ok(CrowdDemo { inner: Crowd::from_json(input).map_err(js)? })
    }

    /// Advances one control step; `false` once the episode is over.
    pub fn step(&mut self) -> bool {
        self.inner.step()
    }

    /// Current state as JSON.
    pub fn frame(&self) -> Result<String, JsError> {
        serde_json::to_string(&self.inner.frame()).map_err(|e| js(e.to_string()))
    }
}
