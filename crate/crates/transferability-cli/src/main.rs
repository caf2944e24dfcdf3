//! Command-line simulator for classifier-induced distribution shift.
//!
//! Subcommands:
//!
//! - `shift`      one-shot experiment for one shift model (strategic,
//!   replicator, covariate-dag, target-dag)
//! - `fico`       sequential credit-score experiment (K steps)
//! - `replicator` improvement sweep of the closed-form induced-risk descent
//! - `bandit`     one-point bandit gradient descent on the quadratic toy
//! - `bounds`     print the full bound-component row for one configuration
//!
//! Exit codes: 0 success, 2 configuration error, 3 bound-invariant violation.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use transferability::classifiers::LinearScorer;
use transferability::error::Error;
use transferability::harness::{
    run_bandit, run_fico_sequence, run_replicator_improvement, run_shift_experiment,
    BanditExperiment, CovariateDagExperiment, ExperimentConfig, FicoExperiment,
    ReplicatorExperiment, ReplicatorImprovementConfig, StrategicExperiment,
    TargetDagExperiment,
};

#[derive(Parser)]
#[command(name = "transferability", about = "Induced distribution shift simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// JSON experiment configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Root seed (overrides the config file).
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Threshold-grid size (overrides the config file).
    #[arg(long)]
    grid: Option<usize>,
    /// Sample size for sampled models (overrides the config file).
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one shift experiment and emit its record.
    Shift {
        #[command(flatten)]
        common: CommonOpts,
        /// Experiment kind when no config file is given.
        #[arg(long)]
        kind: Option<String>,
        /// Write the trained base scorer ("w_1 … w_d b") to this path.
        #[arg(long)]
        scorer_out: Option<PathBuf>,
        /// Load the base scorer from this record instead of training
        /// (DAG kinds only).
        #[arg(long)]
        scorer_in: Option<PathBuf>,
    },
    /// Run the sequential credit-score experiment.
    Fico {
        #[command(flatten)]
        common: CommonOpts,
        /// Group-CDF CSV file (bundled synthetic CDFs when absent).
        #[arg(long)]
        cdf: Option<PathBuf>,
        /// Number of deployment steps.
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        scorer_out: Option<PathBuf>,
    },
    /// Run the replicator improvement sweep.
    Replicator {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Run one-point bandit gradient descent on the quadratic toy.
    Bandit {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Compute the full bound-component row for one configuration.
    Bounds {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long)]
        kind: Option<String>,
    },
}

fn exit_code_for(err: &Error) -> ExitCode {
    match err {
        Error::ConfigError(_)
        | Error::ParseError(_)
        | Error::InvalidConfig(_)
        | Error::NonMonotoneCdf { .. }
        | Error::Io(_) => ExitCode::from(2),
        Error::InvariantViolation(_) => ExitCode::from(3),
        _ => ExitCode::from(1),
    }
}

fn read_config(common: &CommonOpts, kind: Option<&str>) -> Result<ExperimentConfig, Error> {
    let mut cfg = match (&common.config, kind) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)?;
            ExperimentConfig::parse(&text)?
        }
        (None, Some(kind)) => match kind {
            "strategic" => ExperimentConfig::Strategic(StrategicExperiment::default()),
            "replicator" => ExperimentConfig::Replicator(ReplicatorExperiment::default()),
            "covariate-dag" => ExperimentConfig::CovariateDag(CovariateDagExperiment::default()),
            "target-dag" => ExperimentConfig::TargetDag(TargetDagExperiment::default()),
            "fico" => ExperimentConfig::Fico(FicoExperiment::default()),
            "bandit" => ExperimentConfig::Bandit(BanditExperiment::default()),
            other => {
                return Err(Error::ConfigError(format!("unknown experiment kind `{other}`")))
            }
        },
        (None, None) => {
            return Err(Error::ConfigError("provide --config or --kind".into()));
        }
    };
    if let Some(seed) = common.seed {
        cfg.set_seed(seed);
    }
    if let Some(grid) = common.grid {
        cfg.set_grid(grid);
    }
    if let Some(samples) = common.samples {
        cfg.set_samples(samples);
    }
    Ok(cfg)
}

fn emit(common: &CommonOpts, csv: &str) -> Result<(), Error> {
    match &common.out {
        Some(path) => std::fs::write(path, csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn write_scorer(path: &Option<PathBuf>, scorer: &Option<LinearScorer>) -> Result<(), Error> {
    if let (Some(path), Some(scorer)) = (path, scorer) {
        std::fs::write(path, scorer.to_text() + "\n")?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    match &cli.command {
        Command::Shift { common, kind, scorer_out, scorer_in } => {
            let mut cfg = read_config(common, kind.as_deref())?;
            if let Some(path) = scorer_in {
                let path = path.display().to_string();
                match &mut cfg {
                    ExperimentConfig::CovariateDag(c) => c.scorer_path = Some(path),
                    ExperimentConfig::TargetDag(c) => c.scorer_path = Some(path),
                    _ => {
                        return Err(Error::ConfigError(
                            "--scorer-in applies to the DAG kinds only".into(),
                        ))
                    }
                }
            }
            let out = run_shift_experiment(&cfg)?;
            write_scorer(scorer_out, &out.scorer)?;
            emit(common, &out.csv)
        }
        Command::Fico { common, cdf, steps, scorer_out } => {
            let mut cfg = match read_config(common, Some("fico"))? {
                ExperimentConfig::Fico(c) => c,
                _ => return Err(Error::ConfigError("fico expects a fico config".into())),
            };
            if let Some(path) = cdf {
                cfg.cdf_path = Some(path.display().to_string());
            }
            if let Some(k) = steps {
                cfg.steps = *k;
            }
            let out = run_fico_sequence(&cfg)?;
            write_scorer(scorer_out, &out.scorer)?;
            emit(common, &out.csv)
        }
        Command::Replicator { common } => {
            let mut cfg = match &common.config {
                Some(path) => {
                    let text = std::fs::read_to_string(path)?;
                    ReplicatorImprovementConfig::parse(&text)?
                }
                None => ReplicatorImprovementConfig::default(),
            };
            if let Some(seed) = common.seed {
                cfg.seed = Some(seed);
            }
            if let Some(grid) = common.grid {
                cfg.grid = grid;
            }
            let out = run_replicator_improvement(&cfg)?;
            emit(common, &out.csv)
        }
        Command::Bandit { common } => {
            let cfg = match read_config(common, Some("bandit"))? {
                ExperimentConfig::Bandit(c) => c,
                _ => return Err(Error::ConfigError("bandit expects a bandit config".into())),
            };
            let out = run_bandit(&cfg)?;
            emit(common, &out.csv)
        }
        Command::Bounds { common, kind } => {
            let cfg = read_config(common, kind.as_deref())?;
            let out = match &cfg {
                ExperimentConfig::Fico(c) => {
                    let single = FicoExperiment { steps: 1, ..c.clone() };
                    run_fico_sequence(&single)?
                }
                _ => run_shift_experiment(&cfg)?,
            };
            let report = out.records[0].to_bound_report();
            report.validate()?;
            let csv = format!("{}\n{}\n", report.csv_header(), report.csv_row());
            emit(common, &csv)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}
