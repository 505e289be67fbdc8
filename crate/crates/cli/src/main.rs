//! `schedsim` — seeded serverless-scheduler experiments from the command
//! line. Every subcommand writes CSV artifacts plus a manifest into the
//! output directory; exit status is 0 on success, 2 on configuration
//! errors and 3 when a simulation invariant breaks.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use schedsim::config::{parse_config, ConfigError, ExperimentConfig, ExperimentKind};
use schedsim::engine::SimError;
use schedsim::experiment::{run_experiment, write_output, ExperimentError};
use schedsim::log::EventLog;
use schedsim::metrics::{compute_ae_pa, warm_start_ratio};

fn config_help() -> String {
    let defaults = ExperimentConfig::defaults_for(ExperimentKind::Attack).canonical_string();
    let indented: String = defaults.lines().map(|l| format!("  {l}\n")).collect();
    format!(
        "CONFIG FILE:\n  Flat `key = value` lines, `#` comments, comma-separated lists.\n  \
         The `experiment` key is required; all other keys default as below\n  \
         (shown for `attack`; `doubledip_eval` defaults to 100 nodes / 1000 runs,\n  \
         `warmstart_cost` to 20 nodes / 10 runs).\n\n{indented}"
    )
}

#[derive(Parser)]
#[command(
    name = "schedsim",
    about = "Deterministic serverless-cluster scheduling simulator and co-location analysis toolkit",
    after_help = config_help()
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config file; built-in defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of Monte Carlo runs.
    #[arg(long)]
    runs: Option<usize>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MetricsArgs {
    /// Event log CSV (`tick,event,function_id,owner,node_id,cold`).
    #[arg(long)]
    log: PathBuf,
    /// Attacker user ids.
    #[arg(long, value_delimiter = ',', required = true)]
    attackers: Vec<u64>,
    /// Victim user ids.
    #[arg(long, value_delimiter = ',', required = true)]
    victims: Vec<u64>,
    /// Tick windows for the max-PA segmentation.
    #[arg(long, default_value_t = 10)]
    windows: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Probe the four baseline schedulers and infer their feature matrix.
    Fingerprint(RunArgs),
    /// Run one (scheduler, strategy) attack over the k_functions sweep.
    Attack(RunArgs),
    /// Success-rate grid: every attack strategy against every scheduler.
    Transfer(RunArgs),
    /// Multi-account attack resistance of the soft-isolation scheduler.
    Doubledip(RunArgs),
    /// Warm-start cost comparison across schedulers.
    Warmstart(RunArgs),
    /// Closed-form probability sweep as plot-ready CSV.
    Oracle(RunArgs),
    /// Recompute co-location metrics from a saved event log.
    Metrics(MetricsArgs),
}

impl Command {
    fn experiment_kind(&self) -> Option<ExperimentKind> {
        match self {
            Command::Fingerprint(_) => Some(ExperimentKind::Fingerprint),
            Command::Attack(_) => Some(ExperimentKind::Attack),
            Command::Transfer(_) => Some(ExperimentKind::TransferMatrix),
            Command::Doubledip(_) => Some(ExperimentKind::DoubledipEval),
            Command::Warmstart(_) => Some(ExperimentKind::WarmstartCost),
            Command::Oracle(_) => Some(ExperimentKind::OracleSweep),
            Command::Metrics(_) => None,
        }
    }
}

fn load_config(kind: ExperimentKind, args: &RunArgs) -> Result<ExperimentConfig, ExperimentError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            let cfg = parse_config(&text)?;
            if cfg.experiment != kind {
                return Err(ConfigError::Field {
                    msg: format!(
                        "config declares experiment {:?} but the {:?} subcommand was invoked",
                        cfg.experiment.as_str(),
                        kind.as_str()
                    ),
                }
                .into());
            }
            cfg
        }
        None => ExperimentConfig::defaults_for(kind),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(runs) = args.runs {
        cfg.runs = runs;
    }
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(kind: ExperimentKind, args: &RunArgs) -> Result<(), ExperimentError> {
    let cfg = load_config(kind, args)?;
    let output = run_experiment(&cfg)?;
    let written = write_output(&cfg, &output)?;
    println!("{}", output.summary);
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn recompute_metrics(args: &MetricsArgs) -> Result<(), ExperimentError> {
    let text = std::fs::read_to_string(&args.log)?;
    let log = EventLog::from_csv(&text)
        .map_err(|e| ConfigError::Field { msg: format!("bad log file: {e}") })?;
    if args.windows == 0 {
        return Err(ConfigError::Field { msg: "windows must be >= 1".into() }.into());
    }
    let attackers: BTreeSet<u64> = args.attackers.iter().copied().collect();
    let victims: BTreeSet<u64> = args.victims.iter().copied().collect();
    let report = compute_ae_pa(&log, &attackers, &victims, args.windows);
    let warm = warm_start_ratio(&log).ok();
    let fmt = |v: Option<f64>| v.map_or("nan".to_string(), |x| x.to_string());
    println!("ae,pa,max_pa,warm_start_ratio,colocated");
    println!(
        "{},{},{},{},{}",
        fmt(report.ae),
        fmt(report.pa),
        fmt(report.max_pa),
        fmt(warm),
        u8::from(report.colocated())
    );
    Ok(())
}

fn exit_code_for(err: &ExperimentError) -> u8 {
    match err {
        ExperimentError::Config(_) | ExperimentError::Plan(_) => 2,
        ExperimentError::Sim(SimError::Invariant(_)) => 3,
        ExperimentError::Sim(_) | ExperimentError::Protocol(_) => 3,
        ExperimentError::Metric(_) => 2,
        ExperimentError::Io(_) => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Metrics(args) => recompute_metrics(args),
        cmd => {
            let kind = cmd.experiment_kind().expect("run subcommands carry a kind");
            let args = match cmd {
                Command::Fingerprint(a)
                | Command::Attack(a)
                | Command::Transfer(a)
                | Command::Doubledip(a)
                | Command::Warmstart(a)
                | Command::Oracle(a) => a,
                Command::Metrics(_) => unreachable!(),
            };
            run(kind, args)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
