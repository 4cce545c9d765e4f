//! `iotdraw`: validate, simulate and analyse `.iot` system models.
//!
//! Exit status is 0 on success, 1 when the model or analysis rejects the
//! request, and 2 for I/O and usage errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use iotdraw_core::analysis::{
    evaluated_deployments, lifetime_sweep, rank_scenarios, scenarios_csv, scenarios_text, Metric, SweepError,
    SweepOptions, SweepParameter,
};
use iotdraw_core::engine::{run_with, FreshnessPolicy, RunOptions, StopRule};
use iotdraw_core::model::IoTSystemModel;
use iotdraw_core::modelfmt::{load_model, LoadError, ParsedModel};
use iotdraw_core::validate::validate_model;

#[derive(Parser)]
#[command(name = "iotdraw", version, about = "Model, simulate and analyse periodic IoT systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a model and print its diagnostics.
    Validate { model: PathBuf },
    /// Run the tick loop and print per-device results.
    Simulate(SimulateArgs),
    /// List eligible deployment scenarios.
    Deployments(DeploymentsArgs),
    /// Rank eligible deployment scenarios by one metric.
    Rank(RankArgs),
    /// Sweep a request parameter and report mean device lifetime.
    Lifetime(LifetimeArgs),
}

#[derive(Args)]
struct SimulateArgs {
    model: PathBuf,
    /// Overrides the model's seed.
    #[arg(long, env = "IOTDRAW_SEED")]
    seed: Option<u64>,
    /// Freshness window in ticks; 0 disables caching.
    #[arg(long, default_value_t = 0)]
    max_age: u64,
    /// Stop at the first device depletion.
    #[arg(long)]
    stop_on_depletion: bool,
    /// Write the event log as CSV.
    #[arg(long, value_name = "FILE")]
    log: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum RankBy {
    Availability,
    ResponseTime,
}

impl From<RankBy> for Metric {
    fn from(r: RankBy) -> Self {
        match r {
            RankBy::Availability => Metric::Availability,
            RankBy::ResponseTime => Metric::ResponseTime,
        }
    }
}

#[derive(Args)]
struct DeploymentsArgs {
    model: PathBuf,
    #[arg(long, value_enum)]
    rank: Option<RankBy>,
    /// Write scenarios with both metrics as CSV.
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct RankArgs {
    model: PathBuf,
    #[arg(long, value_enum, default_value = "availability")]
    by: RankBy,
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("sweep").required(true).args(["sweep_interval", "sweep_max_age"]))]
struct LifetimeArgs {
    model: PathBuf,
    #[arg(long)]
    device: String,
    #[arg(long, value_delimiter = ',', value_name = "TICKS")]
    sweep_interval: Option<Vec<u64>>,
    #[arg(long, value_delimiter = ',', value_name = "TICKS")]
    sweep_max_age: Option<Vec<u64>>,
    #[arg(long, default_value_t = 30)]
    rounds: usize,
    #[arg(long, env = "IOTDRAW_SEED")]
    seed: Option<u64>,
    /// Fixed transmit distance in metres instead of a random one per round.
    #[arg(long)]
    distance: Option<f64>,
    /// Freshness window used by interval sweeps.
    #[arg(long, default_value_t = 0)]
    max_age: u64,
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn domain(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }

    fn io(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }
}

type Outcome = Result<(), Failure>;

fn load(path: &Path) -> Result<ParsedModel, Failure> {
    load_model(path).map_err(|e| match e {
        LoadError::Io { .. } => Failure::io(e.to_string()),
        LoadError::Invalid { diagnostics, .. } => {
            let lines: Vec<String> = diagnostics.iter().map(|d| d.to_string()).collect();
            Failure::domain(lines.join("\n"))
        }
    })
}

/// Loads a model and refuses to continue past validation errors.
fn load_valid(path: &Path) -> Result<IoTSystemModel, Failure> {
    let parsed = load(path)?;
    let mut report = validate_model(&parsed.model);
    if !report.ok {
        report.locate(&parsed.sources);
        return Err(Failure::domain(report.to_text().trim_end().to_string()));
    }
    for w in &report.diagnostics {
        eprintln!("{w}");
    }
    Ok(parsed.model)
}

fn write_file(path: &Path, contents: &str) -> Outcome {
    fs::write(path, contents).map_err(|e| Failure::io(format!("cannot write {}: {e}", path.display())))
}

fn csv_text(result: Result<String, impl std::fmt::Display>) -> Result<String, Failure> {
    result.map_err(|e| Failure::io(format!("csv: {e}")))
}

fn validate(path: &Path) -> Outcome {
    let parsed = load(path)?;
    let mut report = validate_model(&parsed.model);
    report.locate(&parsed.sources);
    if report.ok {
        print!("{}", report.to_text());
        Ok(())
    } else {
        Err(Failure::domain(report.to_text().trim_end().to_string()))
    }
}

fn simulate(args: &SimulateArgs) -> Outcome {
    let model = load_valid(&args.model)?;
    let options = RunOptions {
        freshness: FreshnessPolicy::new(args.max_age),
        stop: if args.stop_on_depletion { StopRule::AnyDevice } else { StopRule::Never },
        seed: args.seed,
        record_log: args.log.is_some(),
        ..RunOptions::default()
    };
    let report = run_with(&model, &options).map_err(|e| Failure::domain(e.to_string()))?;
    print!("{}", report.to_text());
    if let Some(path) = &args.log {
        write_file(path, &csv_text(report.events_csv())?)?;
    }
    Ok(())
}

fn deployments(args: &DeploymentsArgs) -> Outcome {
    let model = load_valid(&args.model)?;
    let mut scenarios = evaluated_deployments(&model).map_err(|e| Failure::domain(e.to_string()))?;
    match args.rank {
        Some(by) => {
            scenarios = rank_scenarios(&scenarios, by.into());
            print!("{}", scenarios_text(&scenarios));
        }
        None => {
            for s in &scenarios {
                println!("{}", s.to_text());
            }
        }
    }
    if let Some(path) = &args.csv {
        write_file(path, &csv_text(scenarios_csv(&scenarios))?)?;
    }
    Ok(())
}

fn rank(args: &RankArgs) -> Outcome {
    let model = load_valid(&args.model)?;
    let scenarios = evaluated_deployments(&model).map_err(|e| Failure::domain(e.to_string()))?;
    let ranked = rank_scenarios(&scenarios, args.by.into());
    print!("{}", scenarios_text(&ranked));
    if let Some(path) = &args.csv {
        write_file(path, &csv_text(scenarios_csv(&ranked))?)?;
    }
    Ok(())
}

fn lifetime(args: &LifetimeArgs) -> Outcome {
    let model = load_valid(&args.model)?;
    let parameter = match (&args.sweep_interval, &args.sweep_max_age) {
        (Some(v), _) => SweepParameter::Interval(v.clone()),
        (None, Some(v)) => SweepParameter::MaxAge(v.clone()),
        (None, None) => unreachable!("clap requires one sweep flag"),
    };
    let mut options = SweepOptions {
        max_age_ticks: args.max_age,
        ..SweepOptions::default()
    };
    if let Some(d) = args.distance {
        options.distance_range_m = (d, d);
    }
    let seed = args.seed.unwrap_or(model.sim_config.rng_seed);
    let table = lifetime_sweep(&model, &args.device, &parameter, args.rounds, seed, &options)
        .map_err(|e: SweepError| Failure::domain(e.to_string()))?;
    print!("{}", table.to_text());
    if let Some(path) = &args.csv {
        write_file(path, &csv_text(table.to_csv())?)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Validate { model } => validate(model),
        Command::Simulate(a) => simulate(a),
        Command::Deployments(a) => deployments(a),
        Command::Rank(a) => rank(a),
        Command::Lifetime(a) => lifetime(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.message);
            ExitCode::from(f.code)
        }
    }
}
