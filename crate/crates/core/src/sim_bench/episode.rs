use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::metrics::{episode_metrics, RunMetrics};
use super::pedestrians::{arrived, social_forces_step, Agent, Pedestrian, PLANNER_PEDESTRIAN_RADIUS};
use super::predict::{predict, PredictionInput, PredictionModel};
use super::scenario::{Scenario, ScenarioConfig};
use crate::clock::Stopwatch;
use crate::guidance::GuidanceDump;
use crate::model::{dynamics_step, ObstaclePrediction, PlannerConfig, RobotInput, RobotState};
use crate::orchestrator::{DecisionRecord, ExecutionMode, Orchestrator, PlannerMode, StepResult};

/// Version of the JSONL trace layout.
pub const TRACE_SCHEMA_VERSION: u32 = 1;
pub const TRACE_SCHEMA: &str = "tmpc-trace";

/// Per-episode switches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeOptions {
    /// No wall-clock budgets and sequential solves: bit-reproducible traces.
    pub deterministic: bool,
    pub record_pedestrians: bool,
    pub record_decisions: bool,
    pub record_guidance: bool,
    /// Ablation: execute a uniformly random feasible candidate each step,
    /// drawn from a generator with this seed.
    pub random_switching: Option<u64>,
}

impl Default for EpisodeOptions {
    fn default() -> Self {
        EpisodeOptions { deterministic: true, record_pedestrians: true, record_decisions: true, record_guidance: false, random_switching: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSummary {
    pub class_id: Option<u64>,
    pub non_guided: bool,
    #[serde(with = "crate::serde_float")]
    pub cost: f64,
    pub feasible: bool,
    pub solve_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PedestrianState {
    pub id: u64,
    pub pos: [f64; 2],
    pub vel: [f64; 2],
}

/// One control step of the closed loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub robot: RobotState,
    pub input: RobotInput,
    /// Class of the executed plan.
    pub selected_class: Option<u64>,
    /// Cost of the executed plan; infinite on infeasible steps.
    #[serde(with = "crate::serde_float")]
    pub cost: f64,
    pub infeasible: bool,
    /// Wall-clock time of the planning step (s).
    pub runtime_s: f64,
    pub candidates: Vec<CandidateSummary>,
    /// Closest robot to pedestrian centre distance (m).
    pub min_distance: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pedestrians: Vec<PedestrianState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decision: Option<DecisionRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guidance: Option<GuidanceDump>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub schema: String,
    pub version: u32,
    pub label: String,
    pub mode: PlannerMode,
    pub seed: u64,
    pub scenario: ScenarioConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub header: TraceHeader,
    pub steps: Vec<StepRecord>,
    pub metrics: RunMetrics,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum Line {
    Header(TraceHeader),
    Step(StepRecord),
    Summary(RunMetrics),
}

impl RunTrace {
    /// Writes the trace as one JSON object per line: header, steps, summary.
    pub fn write_jsonl<W: std::io::Write>(&self, mut w: W) -> crate::Result<()> {
        serde_json::to_writer(&mut w, &Line::Header(self.header.clone()))?;
        writeln!(w)?;
        for s in &self.steps {
            serde_json::to_writer(&mut w, &Line::Step(s.clone()))?;
            writeln!(w)?;
        }
        serde_json::to_writer(&mut w, &Line::Summary(self.metrics.clone()))?;
        writeln!(w)?;
        Ok(())
    }

    pub fn read_jsonl<R: std::io::BufRead>(r: R) -> crate::Result<Self> {
        let mut header = None;
        let mut steps = Vec::new();
        let mut metrics = None;
        for line in r.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str(&line)? {
                Line::Header(h) => {
                    if h.schema != TRACE_SCHEMA || h.version != TRACE_SCHEMA_VERSION {
                        return Err(crate::Error::Config(format!("unsupported trace schema {} v{}", h.schema, h.version)));
                    }
                    header = Some(h)
                }
                Line::Step(s) => steps.push(s),
                Line::Summary(m) => metrics = Some(m),
            }
        }
        let missing = |what: &str| crate::Error::Config(format!("trace without {what}"));
        Ok(RunTrace { header: header.ok_or_else(|| missing("header"))?, steps, metrics: metrics.ok_or_else(|| missing("summary"))? })
    }

    /// Copy with all wall-clock measurements zeroed, for reproducibility checks.
    pub fn without_timing(&self) -> RunTrace {
        let mut t = self.clone();
        for s in &mut t.steps {
            s.runtime_s = 0.0;
            for c in &mut s.candidates {
                c.solve_time_s = 0.0;
            }
            if let Some(d) = &mut s.decision {
                for c in &mut d.candidates {
                    c.solve_time_s = 0.0;
                }
            }
            if let Some(g) = &mut s.guidance {
                g.stats.runtime_s = 0.0;
            }
        }
        t.metrics.runtime_mean_ms = 0.0;
        t.metrics.runtime_max_ms = 0.0;
        t
    }
}

/// Braking fallback: maximal deceleration, no rotation.
pub fn braking_input(state: &RobotState, a_max: f64, dt: f64) -> RobotInput {
    RobotInput::new(-a_max.min(state.v / dt), 0.0)
}

fn nearest(obstacles: Vec<ObstaclePrediction>, p: [f64; 2], m: usize) -> Vec<ObstaclePrediction> {
    let mut obs = obstacles;
    obs.sort_by(|a, b| {
        let da = (a.positions[0][0] - p[0]).hypot(a.positions[0][1] - p[1]);
        let db = (b.positions[0][0] - p[0]).hypot(b.positions[0][1] - p[1]);
        da.total_cmp(&db).then(a.id.cmp(&b.id))
    });
    obs.truncate(m);
    obs
}

/// Closed-loop episode driven one control step at a time: predict, plan,
/// apply the first input for one control period, advance the crowd.
pub struct Episode {
    scenario: ScenarioConfig,
    world: Scenario,
    cfg: PlannerConfig,
    mode: PlannerMode,
    label: String,
    options: EpisodeOptions,
    orch: Orchestrator,
    noise: Option<Normal<f64>>,
    noise_rng: ChaCha8Rng,
    switch_rng: Option<ChaCha8Rng>,
    robot: RobotState,
    robot_vel: [f64; 2],
    pedestrians: Vec<Pedestrian>,
    max_steps: usize,
    steps: Vec<StepRecord>,
    reached: bool,
    last: Option<StepResult>,
}

impl Episode {
    pub fn new(scenario: &ScenarioConfig, mode: PlannerMode, label: &str, options: &EpisodeOptions) -> Self {
        let cfg = scenario.planner_config();
        let world = scenario.build();
        let h = scenario.control_period();
        let mut orch = Orchestrator::new(cfg.clone(), mode);
        orch.set_deterministic(options.deterministic);
        orch.record_dump = options.record_guidance;
        if options.deterministic {
            orch.execution = ExecutionMode::Sequential;
        }
        let noise = match scenario.prediction {
            PredictionModel::Gaussian { sigma } => Normal::new(0.0, sigma.sqrt()).ok(),
            _ => None,
        };
        let robot = world.start;
        Episode {
            scenario: scenario.clone(),
            pedestrians: world.pedestrians.clone(),
            robot,
            robot_vel: [robot.v * robot.psi.cos(), robot.v * robot.psi.sin()],
            world,
            cfg,
            mode,
            label: label.to_string(),
            options: *options,
            orch,
            noise,
            noise_rng: ChaCha8Rng::seed_from_u64(scenario.seed ^ 0x5eed_0f_c0ffee),
            switch_rng: options.random_switching.map(ChaCha8Rng::seed_from_u64),
            max_steps: scenario.max_steps.unwrap_or(usize::MAX).min((scenario.timeout / h).ceil() as usize),
            steps: Vec::new(),
            reached: false,
            last: None,
        }
    }

    pub fn world(&self) -> &Scenario {
        &self.world
    }

    pub fn robot(&self) -> &RobotState {
        &self.robot
    }

    pub fn pedestrians(&self) -> &[Pedestrian] {
        &self.pedestrians
    }

    pub fn steps(&self) -> &[StepRecord] {
        &self.steps
    }

    /// Full planner output of the latest step.
    pub fn last_result(&self) -> Option<&StepResult> {
        self.last.as_ref()
    }

    pub fn finished(&self) -> bool {
        self.reached || self.steps.len() >= self.max_steps
    }

    /// Executes one control step; returns `false` once the episode is over.
    pub fn step(&mut self) -> bool {
        if self.finished() {
            return false;
        }
        if self.world.path.project(self.robot.pos()) >= self.world.goal_progress {
            self.reached = true;
            return false;
        }
        let h = self.scenario.control_period();
        let params = self.scenario.social_forces;
        let robot = self.robot;
        let agent = Agent { pos: robot.pos(), vel: self.robot_vel, radius: self.cfg.robot_radius };
        let input = PredictionInput { pedestrians: &self.pedestrians, robot: agent, walls: &self.world.workspace, params: &params };
        let preds = predict(&input, self.scenario.prediction, self.cfg.horizon_steps, self.cfg.dt, PLANNER_PEDESTRIAN_RADIUS);
        let preds = nearest(preds, robot.pos(), self.cfg.max_obstacles);
        let clock = Stopwatch::start();
        let result = self.orch.plan_step(&robot, &preds, &self.world.path, &self.world.workspace);
        let runtime_s = clock.elapsed_secs();
        let executed = match (&mut self.switch_rng, &result.selected) {
            (Some(rng), Some(_)) => {
                let feasible: Vec<&_> = result.candidates.iter().filter(|c| c.feasible).collect();
                Some(feasible[rng.random_range(0..feasible.len())])
            }
            _ => result.selected.as_ref(),
        };
        let (u, cost, class) = match executed {
            Some(sel) => (sel.inputs[0], sel.cost, sel.homotopy_id.as_ref().map(|h| h.id)),
            None => {
                self.orch.clear_warm_start();
                (braking_input(&robot, self.cfg.a_max, h), f64::INFINITY, None)
            }
        };
        let min_distance = self
            .pedestrians
            .iter()
            .map(|p| (p.pos[0] - robot.x).hypot(p.pos[1] - robot.y))
            .fold(f64::INFINITY, f64::min);
        let options = self.options;
        self.steps.push(StepRecord {
            step: self.steps.len(),
            t: self.steps.len() as f64 * h,
            robot,
            input: u,
            selected_class: class,
            cost,
            infeasible: result.selected.is_none(),
            runtime_s,
            candidates: result
                .record
                .candidates
                .iter()
                .map(|c| CandidateSummary {
                    class_id: c.class_id,
                    non_guided: c.non_guided,
                    cost: c.cost,
                    feasible: c.feasible,
                    solve_time_s: c.solve_time_s,
                })
                .collect(),
            min_distance,
            pedestrians: if options.record_pedestrians {
                self.pedestrians.iter().map(|p| PedestrianState { id: p.id, pos: p.pos, vel: p.vel }).collect()
            } else {
                Vec::new()
            },
            decision: options.record_decisions.then(|| result.record.clone()),
            guidance: if options.record_guidance { self.orch.last_dump().cloned() } else { None },
        });
        let mut next = dynamics_step(&robot, &u, h, &self.cfg.limits()).state;
        next.s = self.world.path.project(next.pos());
        self.robot_vel = [(next.x - robot.x) / h, (next.y - robot.y) / h];
        self.robot = next;
        self.pedestrians = social_forces_step(&self.pedestrians, Some(&agent), &self.world.workspace, &params, h);
        if let Some(n) = &self.noise {
            for p in &mut self.pedestrians {
                p.pos[0] += n.sample(&mut self.noise_rng) * h;
                p.pos[1] += n.sample(&mut self.noise_rng) * h;
            }
        }
        if self.world.remove_at_goal {
            self.pedestrians.retain(|p| !arrived(p, &params));
        }
        self.last = Some(result);
        if self.world.path.project(self.robot.pos()) >= self.world.goal_progress {
            self.reached = true;
        }
        true
    }

    /// Metrics of the steps so far.
    pub fn metrics(&self) -> RunMetrics {
        episode_metrics(&self.steps, &self.world, &self.cfg, self.scenario.control_period(), self.reached)
    }

    pub fn into_trace(self) -> RunTrace {
        let metrics = self.metrics();
        RunTrace {
            header: TraceHeader {
                schema: TRACE_SCHEMA.to_string(),
                version: TRACE_SCHEMA_VERSION,
                label: self.label,
                mode: self.mode,
                seed: self.scenario.seed,
                scenario: self.scenario,
            },
            steps: self.steps,
            metrics,
        }
    }
}

/// Runs an episode to completion.
pub fn run_episode(scenario: &ScenarioConfig, mode: PlannerMode, label: &str, options: &EpisodeOptions) -> RunTrace {
    let mut episode = Episode::new(scenario, mode, label, options);
    while episode.step() {}
    episode.into_trace()
}
