//! `patchsim`: generate scenarios, run missions, and compare strategies across seeds.
//!
//! Exit codes: 0 on success, 1 for configuration or usage errors, 2 when a run breaks a
//! simulation invariant.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use patchsim_core::engine::CurvePoint;
use patchsim_core::{
    completion_curve, emit_trace, run_mission, write_summary_csv, MissionSummary, ScenarioSpec64,
    SimError, Strategy,
};
use rayon::prelude::*;

#[derive(Parser)]
#[command(
    name = "patchsim",
    version,
    about = "Classifier-update orchestration simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a scenario file (reference values unless overridden).
    Gen(GenArgs),
    /// Run one mission.
    Run(RunArgs),
    /// Run both strategies on seeds 1..=N and write summary and curve tables.
    Compare(CompareArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    nodes: Option<u32>,
    #[arg(long)]
    apps: Option<u32>,
    #[arg(long)]
    classifiers: Option<u32>,
    #[arg(long)]
    frequent_fraction: Option<f64>,
    #[arg(long)]
    correlated_fraction: Option<f64>,
    #[arg(long)]
    drift: Option<f64>,
    #[arg(long)]
    arrival_rate: Option<f64>,
    /// Accept a classifier count outside 40..=140.
    #[arg(long)]
    allow_out_of_range: bool,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    strategy: Strategy,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Tick budget; defaults to the scenario's `mission_length_hint`.
    #[arg(long)]
    ticks: Option<u64>,
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    seeds: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    curve: PathBuf,
    #[arg(long)]
    ticks: Option<u64>,
}

enum Failure {
    Usage(anyhow::Error),
    Invariant(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        if e.is_invariant_violation() {
            Failure::Invariant(e.into())
        } else {
            Failure::Usage(e.into())
        }
    }
}

fn load_scenario(path: &Path) -> anyhow::Result<ScenarioSpec64> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading scenario {}", path.display()))?;
    ScenarioSpec64::from_toml_str(&text).with_context(|| format!("scenario {}", path.display()))
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn cmd_gen(args: GenArgs) -> Result<(), Failure> {
    let mut spec = ScenarioSpec64::default();
    if let Some(v) = args.seed {
        spec.seed = v;
    }
    if let Some(v) = args.nodes {
        spec.node_count = v;
    }
    if let Some(v) = args.apps {
        spec.app_count = v;
    }
    if let Some(v) = args.classifiers {
        spec.classifier_total = v;
    }
    if let Some(v) = args.frequent_fraction {
        spec.frequent_fraction = v;
    }
    if let Some(v) = args.correlated_fraction {
        spec.correlated_fraction = v;
    }
    if let Some(v) = args.drift {
        spec.drift_per_tick = v;
    }
    if let Some(v) = args.arrival_rate {
        spec.arrival_rate = v;
    }
    if args.allow_out_of_range {
        spec.enforce_classifier_range = false;
        if spec.classifier_total_out_of_range() {
            eprintln!(
                "warning: {} classifiers is outside the supported 40..=140",
                spec.classifier_total
            );
        }
    }
    spec.validate().map_err(|e| anyhow!(e))?;
    let text = spec.to_toml_string();
    match args.out {
        Some(path) => {
            fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?
        }
        None => io::stdout()
            .write_all(text.as_bytes())
            .context("writing stdout")?,
    }
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let mut spec = load_scenario(&args.scenario)?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let ticks = args.ticks.unwrap_or(spec.mission_length_hint);
    let mission = run_mission(&spec, args.strategy, ticks)?;
    if let Some(path) = &args.trace {
        let mut sink = create(path)?;
        emit_trace(&mission.trace, &mut sink)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = &args.summary {
        let mut sink = create(path)?;
        write_summary_csv([&mission.summary], &mut sink)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    let s = &mission.summary;
    println!(
        "{} seed={} ticks={} completed={} accuracy={:.6} progress={:.6} applied={} dropped={} pending={} mb={:.3}",
        s.strategy,
        s.seed,
        s.ticks_run,
        s.completion_tick.map(|t| t.to_string()).unwrap_or_else(|| "no".into()),
        s.final_mean_accuracy,
        s.final_mean_progress,
        s.applied,
        s.dropped,
        s.pending,
        s.mb_transferred,
    );
    Ok(())
}

type RunResult = (MissionSummary<f64>, Vec<CurvePoint<f64>>);

fn write_curve(path: &Path, runs: &[RunResult]) -> anyhow::Result<()> {
    let mut sink = create(path)?;
    writeln!(sink, "strategy,percent,runs,mean_tick,mean_accuracy")?;
    for strategy in Strategy::ALL {
        for decile in 0..10 {
            let reached: Vec<&CurvePoint<f64>> = runs
                .iter()
                .filter(|(s, _)| s.strategy == strategy)
                .map(|(_, curve)| &curve[decile])
                .filter(|p| p.tick.is_some())
                .collect();
            let percent = (decile as u32 + 1) * 10;
            if reached.is_empty() {
                writeln!(sink, "{strategy},{percent},0,,")?;
                continue;
            }
            let n = reached.len() as f64;
            let tick = reached.iter().map(|p| p.tick.unwrap() as f64).sum::<f64>() / n;
            let acc = reached
                .iter()
                .map(|p| p.mean_accuracy.unwrap())
                .sum::<f64>()
                / n;
            writeln!(
                sink,
                "{strategy},{percent},{},{tick:.6},{acc:.6}",
                reached.len()
            )?;
        }
    }
    sink.flush()?;
    Ok(())
}

fn cmd_compare(args: CompareArgs) -> Result<(), Failure> {
    let spec = load_scenario(&args.scenario)?;
    if args.seeds == 0 {
        return Err(anyhow!("--seeds must be at least 1").into());
    }
    let ticks = args.ticks.unwrap_or(spec.mission_length_hint);
    let jobs: Vec<(u64, Strategy)> = (1..=args.seeds)
        .flat_map(|seed| Strategy::ALL.map(|s| (seed, s)))
        .collect();
    let results: Vec<Result<RunResult, SimError>> = jobs
        .par_iter()
        .map(|&(seed, strategy)| {
            let spec = ScenarioSpec64 {
                seed,
                ..spec.clone()
            };
            let m = run_mission(&spec, strategy, ticks)?;
            let curve = completion_curve(&m.trace);
            Ok((m.summary, curve))
        })
        .collect();
    let runs = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let mut sink = create(&args.out)?;
    write_summary_csv(runs.iter().map(|(s, _)| s), &mut sink)
        .with_context(|| format!("writing {}", args.out.display()))?;
    write_curve(&args.curve, &runs)?;

    let greedy_wins = runs
        .chunks(Strategy::ALL.len())
        .filter(|pair| pair[0].0.applied > pair[1].0.applied)
        .count();
    println!(
        "{} seeds: greedy applied more updates than dsoc in {greedy_wins}",
        args.seeds
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Run(args) => cmd_run(args),
        Command::Compare(args) => cmd_compare(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Invariant(e)) => {
            eprintln!("invariant violation: {e:#}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use patchsim_core::ConfigError;

    use super::*;

    #[test]
    fn sim_errors_map_to_exit_classes() {
        let config: Failure = SimError::from(ConfigError::Scenario("x".into())).into();
        assert!(matches!(config, Failure::Usage(_)));
        let broken: Failure = SimError::Invariant {
            tick: 3,
            detail: "load above 1".into(),
        }
        .into();
        assert!(matches!(broken, Failure::Invariant(_)));
    }
}
