//! Guidance planner: a space-time Visibility-PRM with Goal nodes whose
//! Start-to-Goal paths are filtered into homotopy-distinct guidance
//! trajectories, identified across iterations and smoothed.

mod goals;
mod graph;
mod search;
mod smooth;

pub use goals::{goal_grid, Goal, GoalSet};
pub use graph::{
    prm_iterate, segment_clearance, visible, GraphNode, NodeKind, PrmHomotopy, SampleOutcome, VisibilityContext,
    VisibilityGraph,
};
pub use search::{depth_first_search, filter_and_select, heuristic_cost, Candidate, Selected, MAX_ENUMERATED};
pub use smooth::{shortcut, smooth, Smoothed};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::{Deadline, Stopwatch};
use crate::homotopy::{HomotopyId, HomotopyScene, PolylineTrajectory};
use crate::model::{Backend, PlannerConfig, ReferencePath, RobotState, SpaceTimePoint, Workspace};

/// Rejection-sampling draws per counted sample.
const SAMPLE_TRIES: usize = 50;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GuidanceError {
    #[error("no goal inside the workspace")]
    NoGoals,
}

/// One homotopy-distinct guidance trajectory.
#[derive(Debug, Clone)]
pub struct GuidanceTrajectory {
    /// Graph node path from the Start to a Goal.
    pub polyline: PolylineTrajectory,
    /// Smoothed trajectory sampled at the planner's `N + 1` steps.
    pub smoothed: PolylineTrajectory,
    pub spline: bool,
    pub goal: usize,
    pub goal_point: SpaceTimePoint,
    pub cost: f64,
    pub id: HomotopyId,
    pub previously_selected: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    SampleLimit,
    TimeLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuidanceStats {
    pub samples: usize,
    pub reinserted: usize,
    pub stop: StopReason,
    pub guards: usize,
    pub connectors: usize,
    pub goals: usize,
    pub candidates: usize,
    pub selected: usize,
    pub runtime_s: f64,
}

/// Structured per-iteration dump for visualization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuidanceDump {
    pub graph: VisibilityGraph,
    pub edges: Vec<(usize, usize)>,
    pub trajectories: Vec<DumpTrajectory>,
    pub stats: GuidanceStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpTrajectory {
    pub id: u64,
    pub cost: f64,
    pub polyline: Vec<SpaceTimePoint>,
    pub smoothed: Vec<SpaceTimePoint>,
}

#[derive(Debug, Clone)]
pub struct GuidanceOutput {
    pub trajectories: Vec<GuidanceTrajectory>,
    pub stats: GuidanceStats,
}

/// Shifts graph nodes by `-h`, returning the surviving Guard/Connector
/// points in insertion order. Nodes with `t - h <= 0` are removed.
pub fn propagate_graph(graph: &VisibilityGraph, h: f64) -> Vec<SpaceTimePoint> {
    graph
        .nodes()
        .filter(|(_, n)| matches!(n.kind, NodeKind::Guard | NodeKind::Connector))
        .filter_map(|(_, n)| {
            let t = n.point.t - h;
            (t > 0.0).then(|| SpaceTimePoint::new(n.point.x, n.point.y, t))
        })
        .collect()
}

/// Time-shifts a previous trajectory by `h`, re-anchors it at `robot` with a
/// straight prefix and extrapolates it to `horizon`.
pub fn shift_trajectory(prev: &PolylineTrajectory, robot: [f64; 2], h: f64, horizon: f64) -> PolylineTrajectory {
    let mut pts = vec![SpaceTimePoint::new(robot[0], robot[1], 0.0)];
    pts.extend(
        prev.points().iter().filter(|p| p.t - h > 1e-9 && p.t - h < horizon).map(|p| SpaceTimePoint::new(p.x, p.y, p.t - h)),
    );
    let last = *pts.last().unwrap();
    if last.t < horizon {
        let src = prev.points();
        let (a, b) = (src[src.len().saturating_sub(2)], src[src.len() - 1]);
        let span = b.t - a.t;
        let v = if span > 0.0 { [(b.x - a.x) / span, (b.y - a.y) / span] } else { [0.0, 0.0] };
        let dtl = horizon - last.t;
        pts.push(SpaceTimePoint::new(last.x + v[0] * dtl, last.y + v[1] * dtl, horizon));
    }
    PolylineTrajectory::new(pts).expect("strictly increasing shifted times")
}

/// Assigns ids: each new trajectory inherits the id of the first unmatched
/// previous trajectory in the same class, otherwise gets a fresh one.
pub fn identify(
    selected: &mut [GuidanceTrajectory],
    previous: &[GuidanceTrajectory],
    robot: [f64; 2],
    h: f64,
    horizon: f64,
    scene: &HomotopyScene,
    backend: Backend,
    next_id: &mut u64,
) {
    let shifted: Vec<PolylineTrajectory> =
        previous.iter().map(|p| shift_trajectory(&p.smoothed, robot, h, horizon)).collect();
    let mut used = vec![false; previous.len()];
    for traj in selected.iter_mut() {
        let matched = (0..previous.len())
            .find(|&j| !used[j] && matches!(scene.compare(&traj.polyline, &shifted[j], backend), Ok(true)));
        match matched {
            Some(j) => {
                used[j] = true;
                traj.id.id = previous[j].id.id;
                traj.previously_selected = previous[j].previously_selected;
            }
            None => {
                traj.id.id = *next_id;
                *next_id += 1;
                traj.previously_selected = false;
            }
        }
    }
}

/// Persistent guidance planner state across receding-horizon iterations.
#[derive(Debug, Clone)]
pub struct GuidancePlanner {
    config: PlannerConfig,
    rng: ChaCha8Rng,
    carry: Vec<SpaceTimePoint>,
    previous: Vec<GuidanceTrajectory>,
    graph: VisibilityGraph,
    next_id: u64,
    /// Disables the wall-clock sampling budget.
    pub deterministic: bool,
}

impl GuidancePlanner {
    pub fn new(config: PlannerConfig) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        GuidancePlanner {
            config,
            rng,
            carry: Vec::new(),
            previous: Vec::new(),
            graph: VisibilityGraph::default(),
            next_id: 0,
            deterministic: false,
        }
    }

    pub fn config(&self) -> &PlannerConfig {
        &self.config
    }

    pub fn graph(&self) -> &VisibilityGraph {
        &self.graph
    }

    pub fn previous(&self) -> &[GuidanceTrajectory] {
        &self.previous
    }

    pub fn reset(&mut self) {
        self.carry.clear();
        self.previous.clear();
        self.graph = VisibilityGraph::default();
    }

    /// Records which homotopy class was executed.
    pub fn mark_selected(&mut self, id: Option<u64>) {
        for p in &mut self.previous {
            p.previously_selected = Some(p.id.id) == id;
        }
    }

    /// Allocates an id for a class not produced by guidance.
    pub fn fresh_id(&mut self) -> u64 {
        self.next_id += 1;
        self.next_id - 1
    }

    /// One guidance iteration: sample, search, select, smooth, identify, propagate.
    pub fn plan(
        &mut self,
        state: &RobotState,
        path: &ReferencePath,
        workspace: &Workspace,
        scene: &HomotopyScene,
    ) -> Result<GuidanceOutput, GuidanceError> {
        let clock = Stopwatch::start();
        let cfg = self.config.clone();
        let horizon = cfg.horizon();
        let budget = if self.deterministic { None } else { cfg.prm_time_limit };
        let deadline = Deadline::new(budget);
        let goals = match goal_grid(path, state, &cfg, workspace) {
            Ok(g) => g,
            Err(e) => {
                self.reset();
                return Err(e);
            }
        };
        let ctx = VisibilityContext {
            obstacles: scene.obstacles(),
            dt: scene.dt(),
            workspace,
            radius: cfg.radius,
            margin: cfg.robot_radius,
            v_max: cfg.v_max,
        };
        let hom = PrmHomotopy { scene, backend: cfg.backend, ideal_goal: goals.ideal };
        let mut graph = VisibilityGraph::new(SpaceTimePoint::new(state.x, state.y, 0.0));
        for (i, g) in goals.goals.iter().enumerate() {
            graph.add(GraphNode { kind: NodeKind::Goal, point: g.point, goal: Some(i), links: None, replaced: 0 });
        }
        let carry = std::mem::take(&mut self.carry);
        let mut stop = StopReason::SampleLimit;
        let mut reinserted = 0;
        for p in carry {
            if deadline.expired() {
                stop = StopReason::TimeLimit;
                break;
            }
            prm_iterate(&mut graph, p, &ctx, &hom);
            reinserted += 1;
        }
        let mut samples = 0;
        if stop == StopReason::SampleLimit {
            while samples < cfg.prm_samples {
                if deadline.expired() {
                    stop = StopReason::TimeLimit;
                    break;
                }
                if let Some(p) = self.sample(state, path, workspace, &goals, &cfg) {
                    prm_iterate(&mut graph, p, &ctx, &hom);
                }
                samples += 1;
            }
        }
        let candidates = depth_first_search(&graph, cfg.num_paths);
        let n_candidates = candidates.len();
        let selected = filter_and_select(candidates, &goals, cfg.goal_weight, scene, cfg.num_paths, cfg.backend);
        let mut trajectories: Vec<GuidanceTrajectory> = selected
            .into_iter()
            .map(|s| {
                let sm = smooth(&s.polyline, &ctx, scene, cfg.backend, cfg.horizon_steps, cfg.dt);
                let invariants = scene.invariants(&s.polyline, cfg.backend);
                GuidanceTrajectory {
                    goal_point: goals.goals[s.candidate.goal].point,
                    goal: s.candidate.goal,
                    cost: s.cost,
                    id: HomotopyId { id: 0, backend: cfg.backend, invariants },
                    previously_selected: false,
                    polyline: s.polyline,
                    smoothed: sm.trajectory,
                    spline: sm.spline,
                }
            })
            .collect();
        identify(
            &mut trajectories,
            &self.previous,
            [state.x, state.y],
            cfg.planning_step,
            horizon,
            scene,
            cfg.backend,
            &mut self.next_id,
        );
        self.carry = propagate_graph(&graph, cfg.planning_step);
        let stats = GuidanceStats {
            samples,
            reinserted,
            stop,
            guards: graph.count(NodeKind::Guard),
            connectors: graph.count(NodeKind::Connector),
            goals: goals.goals.len(),
            candidates: n_candidates,
            selected: trajectories.len(),
            runtime_s: clock.elapsed_secs(),
        };
        self.graph = graph;
        self.previous = trajectories.clone();
        Ok(GuidanceOutput { trajectories, stats })
    }

    /// Draws a sample in the band around the reference path, rejecting
    /// points that cannot lie on any Start-to-Goal path.
    fn sample(
        &mut self,
        state: &RobotState,
        path: &ReferencePath,
        workspace: &Workspace,
        goals: &GoalSet,
        cfg: &PlannerConfig,
    ) -> Option<SpaceTimePoint> {
        let horizon = cfg.horizon();
        let reach = cfg.v_max * horizon;
        for _ in 0..SAMPLE_TRIES {
            let s = state.s + self.rng.random_range(0.0..reach);
            let lateral = self.rng.random_range(-cfg.sampling_band..cfg.sampling_band);
            let t = self.rng.random_range(0.0..horizon);
            if t <= 0.0 {
                continue;
            }
            let f = path.frame(s);
            let n = path.normal(s);
            let p = [f.pos[0] + lateral * n[0], f.pos[1] + lateral * n[1]];
            if !workspace.contains(p, cfg.robot_radius) {
                continue;
            }
            if (p[0] - state.x).hypot(p[1] - state.y) > cfg.v_max * t {
                continue;
            }
            let to_goal = cfg.v_max * (horizon - t);
            if goals.goals.iter().all(|g| (g.point.x - p[0]).hypot(g.point.y - p[1]) > to_goal) {
                continue;
            }
            return Some(SpaceTimePoint::new(p[0], p[1], t));
        }
        None
    }

    /// Dump of the last iteration for visualization tooling.
    pub fn dump(&self, stats: &GuidanceStats) -> GuidanceDump {
        GuidanceDump {
            graph: self.graph.clone(),
            edges: self.graph.edges(),
            trajectories: self
                .previous
                .iter()
                .map(|t| DumpTrajectory {
                    id: t.id.id,
                    cost: t.cost,
                    polyline: t.polyline.points().to_vec(),
                    smoothed: t.smoothed.points().to_vec(),
                })
                .collect(),
            stats: stats.clone(),
        }
    }
}

#[cfg(test)]
mod tests;
