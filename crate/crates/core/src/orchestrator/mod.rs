//! Receding-horizon planning step: guidance, parallel guided (and optional
//! non-guided) local solves, and the decision rule with class consistency.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::Deadline;
use crate::guidance::{shift_trajectory, GuidanceDump, GuidancePlanner, GuidanceStats, GuidanceTrajectory};
use crate::homotopy::{HomotopyId, HomotopyParams, HomotopyScene};
use crate::local_planner::{plan, shifted_inputs, OptimizedTrajectory, PlanProblem, SolveStatus};
use crate::model::{DecisionRule, ObstaclePrediction, PlannerConfig, ReferencePath, RobotInput, RobotState, Workspace};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecisionError {
    #[error("no feasible candidate")]
    NoFeasible,
}

/// Planner variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// Guided planners only.
    #[serde(rename = "t-mpc")]
    TMpc,
    /// Guided planners plus one non-guided planner.
    #[serde(rename = "t-mpc++")]
    TMpcPlusPlus,
    /// A single non-guided planner.
    #[serde(rename = "local-only")]
    LocalOnly,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::TMpc, Variant::TMpcPlusPlus, Variant::LocalOnly];

    pub fn name(&self) -> &'static str {
        match self {
            Variant::TMpc => "t-mpc",
            Variant::TMpcPlusPlus => "t-mpc++",
            Variant::LocalOnly => "local-only",
        }
    }

    pub fn guided(&self) -> bool {
        !matches!(self, Variant::LocalOnly)
    }

    pub fn non_guided(&self) -> bool {
        !matches!(self, Variant::TMpc)
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Variant::ALL.into_iter().find(|v| v.name() == s).ok_or_else(|| format!("unknown planner variant `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerMode {
    pub variant: Variant,
    pub decision: DecisionRule,
    /// Discount `c_i` applied to the previously selected class.
    pub consistency: f64,
    /// Wall-clock budget for all solves of one step (s).
    pub deadline: Option<f64>,
}

impl PlannerMode {
    pub fn new(variant: Variant, config: &PlannerConfig) -> Self {
        PlannerMode { variant, decision: config.decision, consistency: config.consistency, deadline: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecutionMode {
    Parallel,
    Sequential,
}

/// Decision input for one candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateCost {
    pub cost: f64,
    pub feasible: bool,
    /// In the previously selected homotopy class.
    pub previous: bool,
}

fn weight(c: &CandidateCost, rule: DecisionRule, consistency: f64) -> f64 {
    match rule {
        DecisionRule::Consistent if c.previous => consistency * c.cost,
        _ => c.cost,
    }
}

/// Index of the selected candidate: the minimal (weighted) cost among the
/// feasible ones; ties go to the previous class, then to the lowest index.
pub fn decide(candidates: &[CandidateCost], rule: DecisionRule, consistency: f64) -> Result<usize, DecisionError> {
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in candidates.iter().enumerate().filter(|(_, c)| c.feasible) {
        let w = weight(c, rule, consistency);
        best = match best {
            None => Some((i, w)),
            Some((j, bw)) if w < bw || (w == bw && c.previous && !candidates[j].previous) => Some((i, w)),
            keep => keep,
        };
    }
    best.map(|(i, _)| i).ok_or(DecisionError::NoFeasible)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    /// Guidance trajectory id; `None` for the non-guided planner.
    pub guidance_id: Option<u64>,
    /// Homotopy class id (post-hoc for the non-guided planner).
    pub class_id: Option<u64>,
    pub non_guided: bool,
    #[serde(with = "crate::serde_float")]
    pub cost: f64,
    #[serde(with = "crate::serde_float")]
    pub weighted_cost: f64,
    pub feasible: bool,
    pub selected: bool,
    pub previous: bool,
    pub status: SolveStatus,
    pub iterations: usize,
    pub solve_time_s: f64,
    /// All homotopy rows strictly inactive at the solution.
    pub homotopy_inactive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub candidates: Vec<CandidateRecord>,
    pub previous: Option<u64>,
    pub selected: Option<usize>,
}

/// Outcome of one planning step.
#[derive(Debug, Clone)]
pub struct StepResult {
    /// The executed plan, `None` when every candidate is infeasible.
    pub selected: Option<OptimizedTrajectory>,
    pub record: DecisionRecord,
    pub candidates: Vec<OptimizedTrajectory>,
    pub guidance: Option<GuidanceStats>,
    pub guidance_error: Option<String>,
}

/// Receding-horizon T-MPC planner state.
#[derive(Debug, Clone)]
pub struct Orchestrator {
    config: PlannerConfig,
    mode: PlannerMode,
    guidance: GuidancePlanner,
    previous_id: Option<u64>,
    previous_plan: Option<OptimizedTrajectory>,
    previous_free: Option<OptimizedTrajectory>,
    pub execution: ExecutionMode,
    deterministic: bool,
    /// Keep a guidance dump of the latest step.
    pub record_dump: bool,
    last_dump: Option<GuidanceDump>,
}

impl Orchestrator {
    pub fn new(config: PlannerConfig, mode: PlannerMode) -> Self {
        Orchestrator {
            guidance: GuidancePlanner::new(config.clone()),
            config,
            mode,
            previous_id: None,
            previous_plan: None,
            previous_free: None,
            execution: ExecutionMode::Parallel,
            deterministic: false,
            record_dump: false,
            last_dump: None,
        }
    }

    pub fn config(&self) -> &PlannerConfig {
        &self.config
    }

    pub fn mode(&self) -> &PlannerMode {
        &self.mode
    }

    /// Disables all wall-clock budgets so that steps are reproducible.
    pub fn set_deterministic(&mut self, on: bool) {
        self.deterministic = on;
        self.guidance.deterministic = on;
    }

    pub fn guidance(&self) -> &GuidancePlanner {
        &self.guidance
    }

    pub fn last_dump(&self) -> Option<&GuidanceDump> {
        self.last_dump.as_ref()
    }

    pub fn reset(&mut self) {
        self.guidance.reset();
        self.previous_id = None;
        self.previous_plan = None;
        self.previous_free = None;
        self.last_dump = None;
    }

    /// Forgets the warm starts, e.g. after a fallback input was applied.
    pub fn clear_warm_start(&mut self) {
        self.previous_plan = None;
        self.previous_free = None;
    }

    fn scene(&self, obstacles: &[ObstaclePrediction]) -> HomotopyScene {
        HomotopyScene::new(obstacles.to_vec(), self.config.dt, HomotopyParams::from_config(&self.config))
    }

    /// One planning step from `state`.
    pub fn plan_step(
        &mut self,
        state: &RobotState,
        obstacles: &[ObstaclePrediction],
        path: &ReferencePath,
        workspace: &Workspace,
    ) -> StepResult {
        let scene = self.scene(obstacles);
        let (guidance, stats, guidance_error) = if self.mode.variant.guided() {
            match self.guidance.plan(state, path, workspace, &scene) {
                Ok(out) => {
                    if self.record_dump {
                        self.last_dump = Some(self.guidance.dump(&out.stats));
                    }
                    (out.trajectories, Some(out.stats), None)
                }
                Err(e) => (Vec::new(), None, Some(e.to_string())),
            }
        } else {
            (Vec::new(), None, None)
        };
        let mut result = self.plan_with_guidance(state, obstacles, path, workspace, &guidance, &scene);
        result.guidance = stats;
        result.guidance_error = guidance_error;
        result
    }

    /// Solves and decides over the given guidance set (plus the non-guided
    /// planner when the variant has one).
    pub fn plan_with_guidance(
        &mut self,
        state: &RobotState,
        obstacles: &[ObstaclePrediction],
        path: &ReferencePath,
        workspace: &Workspace,
        guidance: &[GuidanceTrajectory],
        scene: &HomotopyScene,
    ) -> StepResult {
        let cfg = &self.config;
        let step = Deadline::new(if self.deterministic { None } else { self.mode.deadline });
        let solve_budget = if self.deterministic { None } else { cfg.solver.deadline };
        let shift = cfg.planning_step;
        let shifted = |p: &Option<OptimizedTrajectory>| -> Option<Vec<RobotInput>> {
            p.as_ref().map(|t| shifted_inputs(&t.inputs, shift, cfg.dt, cfg.horizon_steps))
        };
        let free_guess = shifted(&self.previous_free).or_else(|| shifted(&self.previous_plan));
        let mut jobs: Vec<Option<&GuidanceTrajectory>> = guidance.iter().map(Some).collect();
        if self.mode.variant.non_guided() {
            jobs.push(None);
        }
        let solve_one = |g: Option<&GuidanceTrajectory>| -> OptimizedTrajectory {
            let problem = PlanProblem::new(*state, obstacles, path, workspace, cfg, g.map(|g| &g.smoothed));
            let budget = match (solve_budget, self.mode.deadline.filter(|_| !self.deterministic)) {
                (Some(a), Some(b)) => Some(a.min(b - step.elapsed_secs())),
                (a, b) => a.or(b.map(|b| b - step.elapsed_secs())),
            };
            let mut out = plan(&problem, if g.is_none() { free_guess.as_deref() } else { None }, &Deadline::new(budget));
            if step.expired() {
                out.feasible = false;
                out.cost = f64::INFINITY;
                out.diagnostics.status = SolveStatus::Deadline;
            }
            out.guidance_id = g.map(|g| g.id.id);
            out.homotopy_id = g.map(|g| g.id.clone());
            out
        };
        let mut results = run_jobs(jobs, solve_one, self.execution);
        let backend = cfg.backend;
        // Post-hoc class of the non-guided plan.
        if self.mode.variant.non_guided() {
            let free = results.last_mut().expect("non-guided job");
            if free.feasible {
                let poly = free.polyline();
                let matched = guidance
                    .iter()
                    .find(|g| scene.compare(&poly, &g.smoothed, backend).unwrap_or(false))
                    .map(|g| g.id.id)
                    .or_else(|| {
                        let prev = self.previous_plan.as_ref()?;
                        let id = self.previous_id?;
                        let shifted = shift_trajectory(&prev.polyline(), state.pos(), shift, cfg.horizon());
                        scene.compare(&poly, &shifted, backend).unwrap_or(false).then_some(id)
                    });
                let id = matched.unwrap_or_else(|| self.guidance.fresh_id());
                free.homotopy_id = Some(HomotopyId { id, backend, invariants: scene.invariants(&poly, backend) });
            }
        }
        let previous_id = self.previous_id;
        let costs: Vec<CandidateCost> = results
            .iter()
            .map(|r| CandidateCost {
                cost: r.cost,
                feasible: r.feasible,
                previous: previous_id.is_some() && r.homotopy_id.as_ref().map(|h| h.id) == previous_id,
            })
            .collect();
        let selected = decide(&costs, self.mode.decision, self.mode.consistency).ok();
        let candidates = results
            .iter()
            .zip(&costs)
            .enumerate()
            .map(|(i, (r, c))| CandidateRecord {
                guidance_id: r.guidance_id,
                class_id: r.homotopy_id.as_ref().map(|h| h.id),
                non_guided: r.guidance_id.is_none(),
                cost: r.cost,
                weighted_cost: weight(c, self.mode.decision, self.mode.consistency),
                feasible: r.feasible,
                selected: selected == Some(i),
                previous: c.previous,
                status: r.diagnostics.status,
                iterations: r.iterations,
                solve_time_s: r.solve_time_s,
                homotopy_inactive: r.diagnostics.homotopy_active == 0,
            })
            .collect();
        let record = DecisionRecord { candidates, previous: previous_id, selected };
        if self.mode.variant.non_guided() {
            let free = results.last().cloned().filter(|f| f.feasible);
            self.previous_free = free;
        }
        let chosen = selected.map(|i| results[i].clone());
        self.previous_id = chosen.as_ref().and_then(|c| c.homotopy_id.as_ref().map(|h| h.id));
        self.guidance.mark_selected(self.previous_id);
        self.previous_plan = chosen.clone();
        results.shrink_to_fit();
        StepResult { selected: chosen, record, candidates: results, guidance: None, guidance_error: None }
    }
}

#[cfg(feature = "parallel")]
fn run_jobs<T, R, F>(jobs: Vec<T>, f: F, mode: ExecutionMode) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    match mode {
        ExecutionMode::Parallel => jobs.into_par_iter().map(f).collect(),
        ExecutionMode::Sequential => jobs.into_iter().map(f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
fn run_jobs<T, R, F: Fn(T) -> R>(jobs: Vec<T>, f: F, _mode: ExecutionMode) -> Vec<R> {
    jobs.into_iter().map(f).collect()
}

/// Optimality audit of one T-MPC++ step under the minimal-cost rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HgoReport {
    pub selected_cost: Option<f64>,
    pub non_guided_cost: Option<f64>,
    /// Selected cost is at most the non-guided cost (vacuous when it is infeasible).
    pub no_worse_than_non_guided: bool,
    /// Best feasible cost per homotopy class found.
    pub class_best: Vec<(u64, f64)>,
    pub selection_is_class_minimum: bool,
    pub feasible_candidates: usize,
    /// Fraction of feasible guided solves whose homotopy rows are all inactive.
    pub homotopy_inactive_fraction: f64,
}

pub const HGO_TOL: f64 = 1e-6;

pub fn hgo_audit(
    state: &RobotState,
    obstacles: &[ObstaclePrediction],
    path: &ReferencePath,
    workspace: &Workspace,
    config: &PlannerConfig,
) -> HgoReport {
    let mut mode = PlannerMode::new(Variant::TMpcPlusPlus, config);
    mode.decision = DecisionRule::MinimalCost;
    let mut orch = Orchestrator::new(config.clone(), mode);
    orch.set_deterministic(true);
    orch.execution = ExecutionMode::Sequential;
    let step = orch.plan_step(state, obstacles, path, workspace);
    audit_record(&step.record)
}

/// Audits a decision record produced under the minimal-cost rule.
pub fn audit_record(record: &DecisionRecord) -> HgoReport {
    let selected_cost = record.selected.map(|i| record.candidates[i].cost);
    let non_guided_cost = record.candidates.iter().find(|c| c.non_guided && c.feasible).map(|c| c.cost);
    let no_worse_than_non_guided = match (selected_cost, non_guided_cost) {
        (Some(s), Some(n)) => s <= n + HGO_TOL,
        (None, Some(_)) => false,
        _ => true,
    };
    let mut class_best: Vec<(u64, f64)> = Vec::new();
    for c in record.candidates.iter().filter(|c| c.feasible) {
        let id = c.class_id.unwrap_or(u64::MAX);
        match class_best.iter_mut().find(|(k, _)| *k == id) {
            Some(entry) => entry.1 = entry.1.min(c.cost),
            None => class_best.push((id, c.cost)),
        }
    }
    let minimum = class_best.iter().map(|(_, c)| *c).fold(f64::INFINITY, f64::min);
    let selection_is_class_minimum = selected_cost.is_none_or(|s| s <= minimum + HGO_TOL);
    let guided: Vec<&CandidateRecord> = record.candidates.iter().filter(|c| c.feasible && !c.non_guided).collect();
    let inactive = guided.iter().filter(|c| c.homotopy_inactive).count();
    HgoReport {
        selected_cost,
        non_guided_cost,
        no_worse_than_non_guided,
        class_best,
        selection_is_class_minimum,
        feasible_candidates: record.candidates.iter().filter(|c| c.feasible).count(),
        homotopy_inactive_fraction: if guided.is_empty() { 0.0 } else { inactive as f64 / guided.len() as f64 },
    }
}
