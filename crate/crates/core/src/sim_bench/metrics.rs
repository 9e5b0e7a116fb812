use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::episode::StepRecord;
use super::pedestrians::PEDESTRIAN_RADIUS;
use super::scenario::Scenario;
use crate::model::PlannerConfig;

/// Significance threshold of the rank-sum test.
pub const SIGNIFICANCE: f64 = 0.001;

/// Metrics of one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    /// Time to reach the goal; the elapsed time when the episode timed out (s).
    pub duration: f64,
    pub reached: bool,
    /// Stopped by the timeout or step cap before reaching the goal.
    pub truncated: bool,
    pub safe: bool,
    pub collisions: usize,
    pub wall_violations: usize,
    pub steps: usize,
    pub infeasible_steps: usize,
    #[serde(with = "crate::serde_float")]
    pub runtime_mean_ms: f64,
    pub runtime_max_ms: f64,
    /// Mean cost of the executed plans over feasible steps.
    #[serde(with = "crate::serde_float")]
    pub cost_mean: f64,
    /// Standard deviations of acceleration and rotational acceleration commands.
    #[serde(with = "crate::serde_float")]
    pub sigma_a: f64,
    #[serde(with = "crate::serde_float")]
    pub sigma_alpha: f64,
}

pub fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Population standard deviation.
pub fn std_dev(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
}

pub(crate) fn episode_metrics(steps: &[StepRecord], world: &Scenario, cfg: &PlannerConfig, h: f64, reached: bool) -> RunMetrics {
    let limit = cfg.robot_radius + PEDESTRIAN_RADIUS;
    let collisions = steps.iter().filter(|s| s.min_distance < limit).count();
    let wall_violations = steps.iter().filter(|s| world.workspace.clearance(s.robot.pos()) < cfg.robot_radius).count();
    let runtimes: Vec<f64> = steps.iter().map(|s| s.runtime_s * 1e3).collect();
    let costs: Vec<f64> = steps.iter().filter(|s| !s.infeasible).map(|s| s.cost).collect();
    let accel: Vec<f64> = steps.iter().map(|s| s.input.a).collect();
    let alpha: Vec<f64> = steps.windows(2).map(|w| (w[1].input.omega - w[0].input.omega) / h).collect();
    RunMetrics {
        duration: steps.len() as f64 * h,
        reached,
        truncated: !reached,
        safe: collisions == 0 && wall_violations == 0,
        collisions,
        wall_violations,
        steps: steps.len(),
        infeasible_steps: steps.iter().filter(|s| s.infeasible).count(),
        runtime_mean_ms: if runtimes.is_empty() { 0.0 } else { mean(&runtimes) },
        runtime_max_ms: runtimes.iter().cloned().fold(0.0, f64::max),
        cost_mean: if costs.is_empty() { f64::NAN } else { mean(&costs) },
        sigma_a: if accel.is_empty() { 0.0 } else { std_dev(&accel) },
        sigma_alpha: if alpha.is_empty() { 0.0 } else { std_dev(&alpha) },
    }
}

/// Aggregate over the runs of one planner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub label: String,
    pub runs: usize,
    #[serde(with = "crate::serde_float")]
    pub duration_mean: f64,
    #[serde(with = "crate::serde_float")]
    pub duration_std: f64,
    #[serde(with = "crate::serde_float")]
    pub safe_pct: f64,
    #[serde(with = "crate::serde_float")]
    pub reached_pct: f64,
    #[serde(with = "crate::serde_float")]
    pub runtime_mean_ms: f64,
    pub runtime_max_ms: f64,
    #[serde(with = "crate::serde_float")]
    pub infeasible_mean: f64,
    #[serde(with = "crate::serde_float")]
    pub cost_mean: f64,
    #[serde(with = "crate::serde_float")]
    pub sigma_a: f64,
    #[serde(with = "crate::serde_float")]
    pub sigma_alpha: f64,
}

impl MetricsSummary {
    pub fn from_runs(label: &str, runs: &[RunMetrics]) -> Self {
        let col = |f: fn(&RunMetrics) -> f64| runs.iter().map(f).collect::<Vec<f64>>();
        let durations = col(|r| r.duration);
        let costs: Vec<f64> = runs.iter().map(|r| r.cost_mean).filter(|c| c.is_finite()).collect();
        let pct = |n: usize| if runs.is_empty() { f64::NAN } else { 100.0 * n as f64 / runs.len() as f64 };
        MetricsSummary {
            label: label.to_string(),
            runs: runs.len(),
            duration_mean: mean(&durations),
            duration_std: std_dev(&durations),
            safe_pct: pct(runs.iter().filter(|r| r.safe).count()),
            reached_pct: pct(runs.iter().filter(|r| r.reached).count()),
            runtime_mean_ms: mean(&col(|r| r.runtime_mean_ms)),
            runtime_max_ms: col(|r| r.runtime_max_ms).into_iter().fold(0.0, f64::max),
            infeasible_mean: mean(&col(|r| r.infeasible_steps as f64)),
            cost_mean: mean(&costs),
            sigma_a: mean(&col(|r| r.sigma_a)),
            sigma_alpha: mean(&col(|r| r.sigma_alpha)),
        }
    }
}

/// Two-sided Mann-Whitney U test (normal approximation with tie correction).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankSum {
    pub u: f64,
    #[serde(with = "crate::serde_float")]
    pub z: f64,
    #[serde(with = "crate::serde_float")]
    pub p: f64,
}

pub fn mann_whitney(a: &[f64], b: &[f64]) -> RankSum {
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let mut all: Vec<(f64, usize)> = a.iter().map(|&x| (x, 0)).chain(b.iter().map(|&x| (x, 1))).collect();
    all.sort_by(|x, y| x.0.total_cmp(&y.0));
    let n = all.len();
    let mut ranks = vec![0.0; n];
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        let r = 0.5 * ((i + 1) + (j + 1)) as f64;
        for rank in &mut ranks[i..=j] {
            *rank = r;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let r1: f64 = all.iter().zip(&ranks).filter(|(x, _)| x.1 == 0).map(|(_, r)| r).sum();
    let u = r1 - n1 * (n1 + 1.0) / 2.0;
    let nt = n1 + n2;
    let var = n1 * n2 / 12.0 * ((nt + 1.0) - tie_term / (nt * (nt - 1.0)));
    if !(var > 0.0) {
        return RankSum { u, z: 0.0, p: 1.0 };
    }
    let z = (u - n1 * n2 / 2.0) / var.sqrt();
    RankSum { u, z, p: erfc(z.abs() / std::f64::consts::SQRT_2) }
}
