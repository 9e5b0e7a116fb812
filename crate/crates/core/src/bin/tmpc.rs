use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tmpc::model::{Backend, DecisionRule};
use tmpc::orchestrator::{audit_record, PlannerMode, Variant};
use tmpc::sim_bench::{
    consistency_sweep_specs, path_sweep_specs, run_batch_with, run_episode, BatchReport, EpisodeOptions, PlannerSpec,
    PredictionModel, RunTrace, ScenarioConfig,
};

#[derive(Parser)]
#[command(name = "tmpc", version, about = "Topology-driven MPC experiments in a simulated crowd")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single episode and write its trace.
    Run {
        #[command(flatten)]
        scene: SceneArgs,
        #[arg(long, default_value = "t-mpc++")]
        mode: Variant,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Trace output file (JSONL); defaults to <out>/<mode>-<seed>.jsonl.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Include the guidance graph and trajectories of every step.
        #[arg(long)]
        guidance_dump: bool,
        /// Omit per-step decision records.
        #[arg(long)]
        no_decisions: bool,
    },
    /// Run several planners over a seed range and summarize.
    Batch {
        #[command(flatten)]
        scene: SceneArgs,
        #[arg(long, value_delimiter = ',', default_value = "t-mpc,t-mpc++,local-only")]
        modes: Vec<Variant>,
        #[command(flatten)]
        batch: BatchArgs,
    },
    /// Sweep the number of guidance trajectories or the consistency discount.
    Sweep {
        #[arg(value_enum)]
        parameter: SweepParameter,
        /// Values to sweep; defaults to 0..=6 paths or 0, 0.25, 0.5, 0.75, 1.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
        #[command(flatten)]
        scene: SceneArgs,
        #[command(flatten)]
        batch: BatchArgs,
    },
    /// Check that the selection never costs more than the non-guided plan and
    /// attains each found class's minimum, under the minimal-cost rule.
    Audit {
        #[command(flatten)]
        scene: SceneArgs,
        #[arg(long, default_value = "0..20")]
        seeds: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepParameter {
    Paths,
    Consistency,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Corridor,
    OpenSquare,
}

#[derive(Args)]
struct SceneArgs {
    /// Scenario TOML file; overrides the preset.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "corridor")]
    preset: Preset,
    #[arg(long)]
    pedestrians: Option<usize>,
    #[arg(long, value_parser = parse_backend)]
    backend: Option<Backend>,
    #[arg(long)]
    max_steps: Option<usize>,
    /// Gaussian prediction noise sigma (enables the noisy crowd).
    #[arg(long)]
    sigma: Option<f64>,
    /// Per-step wall-clock budget (s); disables deterministic execution.
    #[arg(long)]
    deadline: Option<f64>,
}

#[derive(Args)]
struct BatchArgs {
    /// Seed range `a..b`, or a comma-separated list.
    #[arg(long, default_value = "0..20")]
    seeds: String,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Also write every trace to <out>/traces.
    #[arg(long)]
    traces: bool,
}

fn parse_backend(s: &str) -> Result<Backend, String> {
    match s {
        "h-signature" => Ok(Backend::HSignature),
        "winding" => Ok(Backend::Winding),
        "uvd" => Ok(Backend::Uvd),
        _ => Err(format!("unknown backend `{s}` (h-signature, winding, uvd)")),
    }
}

fn parse_seeds(s: &str) -> Result<Vec<u64>, String> {
    let bad = |_| format!("invalid seed spec `{s}`");
    if let Some((a, b)) = s.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse().map_err(bad)?, b.trim().parse().map_err(bad)?);
        return if a < b { Ok((a..b).collect()) } else { Err(format!("empty seed range `{s}`")) };
    }
    s.split(',').map(|x| x.trim().parse().map_err(bad)).collect()
}

impl SceneArgs {
    fn load(&self) -> tmpc::Result<ScenarioConfig> {
        let mut cfg = match &self.scenario {
            Some(p) => ScenarioConfig::from_toml(&fs::read_to_string(p)?)?,
            None => match self.preset {
                Preset::Corridor => ScenarioConfig::default(),
                Preset::OpenSquare => ScenarioConfig::open_square(20),
            },
        };
        if let Some(n) = self.pedestrians {
            cfg.pedestrians = n;
        }
        if let Some(b) = self.backend {
            cfg.planner.backend = b;
        }
        if let Some(m) = self.max_steps {
            cfg.max_steps = Some(m);
        }
        if let Some(sigma) = self.sigma {
            cfg.prediction = PredictionModel::Gaussian { sigma };
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn options(&self) -> EpisodeOptions {
        EpisodeOptions { deterministic: self.deadline.is_none(), ..EpisodeOptions::default() }
    }

    fn mode(&self, variant: Variant, cfg: &ScenarioConfig) -> PlannerMode {
        PlannerMode { deadline: self.deadline, ..PlannerMode::new(variant, &cfg.planner) }
    }
}

fn write_trace(path: &Path, trace: &RunTrace) -> tmpc::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    trace.write_jsonl(BufWriter::new(File::create(path)?))
}

fn write_report(out: &Path, report: &BatchReport) -> Result<(), Box<dyn std::error::Error>> {
    fs::create_dir_all(out)?;
    let table = report.to_text_table();
    print!("{table}");
    fs::write(out.join("summary.txt"), &table)?;
    let mut w = csv::Writer::from_path(out.join("summary.csv"))?;
    for s in &report.summaries {
        w.serialize(s)?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_path(out.join("runs.csv"))?;
    w.write_record(["label", "seed", "duration", "reached", "safe", "collisions", "infeasible_steps", "runtime_mean_ms", "cost_mean", "sigma_a", "sigma_alpha"])?;
    for r in &report.runs {
        let m = &r.metrics;
        w.write_record([
            r.label.clone(),
            r.seed.to_string(),
            m.duration.to_string(),
            m.reached.to_string(),
            m.safe.to_string(),
            m.collisions.to_string(),
            m.infeasible_steps.to_string(),
            m.runtime_mean_ms.to_string(),
            m.cost_mean.to_string(),
            m.sigma_a.to_string(),
            m.sigma_alpha.to_string(),
        ])?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_path(out.join("comparisons.csv"))?;
    w.write_record(["a", "b", "u", "z", "p", "significant"])?;
    for c in &report.comparisons {
        w.write_record([c.a.clone(), c.b.clone(), c.test.u.to_string(), c.test.z.to_string(), c.test.p.to_string(), c.significant.to_string()])?;
    }
    w.flush()?;
    fs::write(out.join("report.json"), serde_json::to_string_pretty(report)?)?;
    eprintln!("wrote {}", out.display());
    Ok(())
}

fn batch(specs: &[PlannerSpec], seeds: &[u64], options: &EpisodeOptions, args: &BatchArgs) -> Result<(), Box<dyn std::error::Error>> {
    let trace_dir = args.out.join("traces");
    let sink = |spec: &PlannerSpec, trace: &RunTrace| {
        eprintln!("{} seed {}: {:.2} s", spec.label, trace.header.seed, trace.metrics.duration);
        if args.traces {
            let path = trace_dir.join(format!("{}-{}.jsonl", spec.label, trace.header.seed));
            if let Err(e) = write_trace(&path, trace) {
                eprintln!("failed to write {}: {e}", path.display());
            }
        }
    };
    let report = run_batch_with(specs, seeds, options, &sink);
    write_report(&args.out, &report)
}

fn run(cli: Cli) -> Result<bool, Box<dyn std::error::Error>> {
    match cli.command {
        Command::Run { scene, mode, seed, trace, out, guidance_dump, no_decisions } => {
            let mut cfg = scene.load()?;
            cfg.seed = seed;
            cfg.planner.seed = seed;
            let options = EpisodeOptions { record_guidance: guidance_dump, record_decisions: !no_decisions, ..scene.options() };
            let t = run_episode(&cfg, scene.mode(mode, &cfg), mode.name(), &options);
            let path = trace.unwrap_or_else(|| out.join(format!("{}-{seed}.jsonl", mode.name())));
            write_trace(&path, &t)?;
            let m = &t.metrics;
            println!(
                "{} seed {seed}: duration {:.2} s, reached {}, safe {}, infeasible {}, runtime {:.1} ms (max {:.1}), cost {:.3}",
                mode.name(),
                m.duration,
                m.reached,
                m.safe,
                m.infeasible_steps,
                m.runtime_mean_ms,
                m.runtime_max_ms,
                m.cost_mean
            );
            eprintln!("wrote {}", path.display());
            Ok(true)
        }
        Command::Batch { scene, modes, batch: args } => {
            let cfg = scene.load()?;
            let seeds = parse_seeds(&args.seeds)?;
            let specs: Vec<PlannerSpec> = modes
                .iter()
                .map(|v| PlannerSpec { mode: scene.mode(*v, &cfg), ..PlannerSpec::new(v.name(), &cfg, *v) })
                .collect();
            batch(&specs, &seeds, &scene.options(), &args)?;
            Ok(true)
        }
        Command::Sweep { parameter, values, scene, batch: args } => {
            let cfg = scene.load()?;
            let seeds = parse_seeds(&args.seeds)?;
            let mut specs = match parameter {
                SweepParameter::Paths => {
                    let ps: Vec<usize> = if values.is_empty() {
                        (0..=6).collect()
                    } else {
                        values.iter().map(|v| v.round().max(0.0) as usize).collect()
                    };
                    path_sweep_specs(&cfg, &ps)
                }
                SweepParameter::Consistency => {
                    let cs = if values.is_empty() { vec![0.0, 0.25, 0.5, 0.75, 1.0] } else { values };
                    consistency_sweep_specs(&cfg, &cs)
                }
            };
            for s in &mut specs {
                s.mode.deadline = scene.deadline;
            }
            batch(&specs, &seeds, &scene.options(), &args)?;
            Ok(true)
        }
        Command::Audit { scene, seeds, out } => {
            let mut cfg = scene.load()?;
            cfg.planner.decision = DecisionRule::MinimalCost;
            let seeds = parse_seeds(&seeds)?;
            fs::create_dir_all(&out)?;
            let mut w = csv::Writer::from_path(out.join("audit.csv"))?;
            w.write_record(["seed", "step", "selected_cost", "non_guided_cost", "no_worse_than_non_guided", "selection_is_class_minimum", "feasible_candidates"])?;
            let (mut steps, mut compared, mut violations) = (0usize, 0usize, 0usize);
            let options = EpisodeOptions { record_pedestrians: false, record_decisions: true, ..scene.options() };
            for &seed in &seeds {
                let mut c = cfg.clone();
                c.seed = seed;
                c.planner.seed = seed;
                let trace = run_episode(&c, scene.mode(Variant::TMpcPlusPlus, &c), "audit", &options);
                for s in &trace.steps {
                    let Some(record) = &s.decision else { continue };
                    let r = audit_record(record);
                    steps += 1;
                    compared += usize::from(r.non_guided_cost.is_some());
                    let ok = r.no_worse_than_non_guided && r.selection_is_class_minimum;
                    violations += usize::from(!ok);
                    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
                    w.write_record([
                        seed.to_string(),
                        s.step.to_string(),
                        opt(r.selected_cost),
                        opt(r.non_guided_cost),
                        r.no_worse_than_non_guided.to_string(),
                        r.selection_is_class_minimum.to_string(),
                        r.feasible_candidates.to_string(),
                    ])?;
                }
            }
            w.flush()?;
            println!("audited {steps} steps over {} seeds: {compared} with a feasible non-guided plan, {violations} violations", seeds.len());
            eprintln!("wrote {}", out.join("audit.csv").display());
            Ok(violations == 0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e}");
            ExitCode::FAILURE
        }
    }
}
