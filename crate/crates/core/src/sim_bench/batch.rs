use serde::{Deserialize, Serialize};

use super::episode::{run_episode, EpisodeOptions, RunTrace};
use super::metrics::{mann_whitney, MetricsSummary, RankSum, RunMetrics, SIGNIFICANCE};
use super::scenario::ScenarioConfig;
use crate::orchestrator::{PlannerMode, Variant};

/// One planner configuration of a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannerSpec {
    pub label: String,
    pub scenario: ScenarioConfig,
    pub mode: PlannerMode,
}

impl PlannerSpec {
    pub fn new(label: impl Into<String>, scenario: &ScenarioConfig, variant: Variant) -> Self {
        let mode = PlannerMode::new(variant, &scenario.planner);
        PlannerSpec { label: label.into(), scenario: scenario.clone(), mode }
    }

    /// The spec for each planner variant under its own name.
    pub fn variants(scenario: &ScenarioConfig, variants: &[Variant]) -> Vec<PlannerSpec> {
        variants.iter().map(|v| PlannerSpec::new(v.name(), scenario, *v)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub label: String,
    pub seed: u64,
    pub metrics: RunMetrics,
}

/// Pairwise rank-sum test on task duration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub a: String,
    pub b: String,
    pub test: RankSum,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub summaries: Vec<MetricsSummary>,
    pub comparisons: Vec<Comparison>,
    pub runs: Vec<RunRow>,
}

impl BatchReport {
    pub fn summary(&self, label: &str) -> Option<&MetricsSummary> {
        self.summaries.iter().find(|s| s.label == label)
    }

    /// Fixed-width text table of the summaries and significant comparisons.
    pub fn to_text_table(&self) -> String {
        let mut out = format!(
            "{:<14} {:>5} {:>15} {:>7} {:>9} {:>9} {:>10} {:>9} {:>7} {:>7}\n",
            "planner", "runs", "duration [s]", "safe %", "rt [ms]", "rt max", "infeasible", "cost", "sig_a", "sig_al"
        );
        for s in &self.summaries {
            out += &format!(
                "{:<14} {:>5} {:>7.2} ({:>5.2}) {:>7.1} {:>9.2} {:>9.2} {:>10.2} {:>9.3} {:>7.3} {:>7.3}\n",
                s.label,
                s.runs,
                s.duration_mean,
                s.duration_std,
                s.safe_pct,
                s.runtime_mean_ms,
                s.runtime_max_ms,
                s.infeasible_mean,
                s.cost_mean,
                s.sigma_a,
                s.sigma_alpha
            );
        }
        for c in &self.comparisons {
            out += &format!(
                "duration {} vs {}: U = {:.1}, p = {:.2e}{}\n",
                c.a,
                c.b,
                c.test.u,
                c.test.p,
                if c.significant { " (significant)" } else { "" }
            );
        }
        out
    }
}

pub(crate) fn for_each_job<T: Send, R: Send>(jobs: Vec<T>, f: impl Fn(T) -> R + Sync + Send) -> Vec<R> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        jobs.into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        jobs.into_iter().map(f).collect()
    }
}

/// Runs every planner on every seed; `sink` receives each finished trace.
pub fn run_batch_with(
    specs: &[PlannerSpec],
    seeds: &[u64],
    options: &EpisodeOptions,
    sink: &(dyn Fn(&PlannerSpec, &RunTrace) + Sync),
) -> BatchReport {
    let jobs: Vec<(usize, u64)> = (0..specs.len()).flat_map(|i| seeds.iter().map(move |&s| (i, s))).collect();
    let rows = for_each_job(jobs, |(i, seed)| {
        let spec = &specs[i];
        let mut scenario = spec.scenario.clone();
        scenario.seed = seed;
        scenario.planner.seed = seed;
        let trace = run_episode(&scenario, spec.mode, &spec.label, options);
        sink(spec, &trace);
        RunRow { label: spec.label.clone(), seed, metrics: trace.metrics }
    });
    let per_label = |label: &str| -> Vec<RunMetrics> {
        rows.iter().filter(|r| r.label == label).map(|r| r.metrics.clone()).collect()
    };
    let summaries: Vec<MetricsSummary> = specs.iter().map(|s| MetricsSummary::from_runs(&s.label, &per_label(&s.label))).collect();
    let mut comparisons = Vec::new();
    for (i, a) in specs.iter().enumerate() {
        for b in &specs[i + 1..] {
            let da: Vec<f64> = per_label(&a.label).iter().map(|m| m.duration).collect();
            let db: Vec<f64> = per_label(&b.label).iter().map(|m| m.duration).collect();
            let test = mann_whitney(&da, &db);
            comparisons.push(Comparison { a: a.label.clone(), b: b.label.clone(), test, significant: test.p < SIGNIFICANCE });
        }
    }
    BatchReport { summaries, comparisons, runs: rows }
}

pub fn run_batch(specs: &[PlannerSpec], seeds: &[u64], options: &EpisodeOptions) -> BatchReport {
    run_batch_with(specs, seeds, options, &|_, _| {})
}

/// Planner specs for a sweep over the number of guidance trajectories; `P = 0` is the non-guided planner.
pub fn path_sweep_specs(base: &ScenarioConfig, ps: &[usize]) -> Vec<PlannerSpec> {
    ps.iter()
        .map(|&p| {
            let mut s = base.clone();
            if p == 0 {
                PlannerSpec::new("P=0", &s, Variant::LocalOnly)
            } else {
                s.planner.num_paths = p;
                PlannerSpec::new(format!("P={p}"), &s, Variant::TMpcPlusPlus)
            }
        })
        .collect()
}

pub fn sweep_paths(base: &ScenarioConfig, ps: &[usize], seeds: &[u64], options: &EpisodeOptions) -> BatchReport {
    run_batch(&path_sweep_specs(base, ps), seeds, options)
}

/// Planner specs for a sweep over the consistency discount `c_i` (T-MPC++).
pub fn consistency_sweep_specs(base: &ScenarioConfig, cs: &[f64]) -> Vec<PlannerSpec> {
    cs.iter()
        .map(|&c| {
            let mut s = base.clone();
            s.planner.consistency = c;
            PlannerSpec::new(format!("c={c}"), &s, Variant::TMpcPlusPlus)
        })
        .collect()
}

pub fn sweep_consistency(base: &ScenarioConfig, cs: &[f64], seeds: &[u64], options: &EpisodeOptions) -> BatchReport {
    run_batch(&consistency_sweep_specs(base, cs), seeds, options)
}
