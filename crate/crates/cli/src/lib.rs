//! Command line front end for the processing time prediction pipeline.
//!
//! The binary drives the library through a fixed set of stages (generate,
//! split, tune, train, predict, evaluate, profile, explain, report), each
//! reading and writing artifacts in one output directory. `run` chains
//! them. All stages are deterministic in the configuration, including the
//! worker count.

pub mod config;
pub mod manifest;
pub mod paths;
pub mod plots;
pub mod scores;
pub mod stages;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use log::info;

use config::{Overrides, PipelineConfig};
use paths::Paths;
use stages::UsageError;

#[derive(Debug, Parser)]
#[command(
    name = "proctime",
    version,
    about = "Predicts activity processing times on event logs with uncertainty intervals, \
             uncertainty profiles, and attribution reports"
)]
pub struct Cli {
    /// JSON pipeline configuration.
    #[arg(long, global = true, env = "PROCTIME_CONFIG", value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Directory all artifacts are read from and written to.
    #[arg(long, global = true, default_value = "out", value_name = "DIR")]
    pub out: PathBuf,

    /// Root seed (overrides the config).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Interval coverage level in (0, 1) (overrides the config).
    #[arg(long, global = true)]
    pub level: Option<f64>,

    /// Worker threads; 0 keeps the library default (overrides the config).
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    /// Number of cases to generate (overrides the config).
    #[arg(long, global = true)]
    pub cases: Option<usize>,

    /// How many test instances to explain (overrides the config).
    #[arg(long, global = true)]
    pub explain_instances: Option<usize>,

    /// Background sample size for explanations (overrides the config).
    #[arg(long, global = true)]
    pub explain_background: Option<usize>,

    /// Coalition budget for explanations; 0 = automatic (overrides the config).
    #[arg(long, global = true)]
    pub explain_budget: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Generate a synthetic event log with known ground truth.
    Generate,
    /// Split the log chronologically and export the encoded datasets.
    Split,
    /// Grid-search hyperparameters on the validation block.
    Tune,
    /// Fit the forest on the training block.
    Train,
    /// Score the validation and test blocks with intervals.
    Predict,
    /// Compute point, interval, and coverage metrics.
    Evaluate,
    /// Calibrate uncertainty profiles and assign test instances.
    Profile,
    /// Attribute predictions to features for a sample of test instances.
    Explain,
    /// Write importance, summary, and dependence tables with charts.
    Report,
    /// Run every stage in order.
    Run,
}

impl Cli {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            level: self.level,
            workers: self.workers,
            cases: self.cases,
            explain_instances: self.explain_instances,
            explain_background: self.explain_background,
            explain_budget: self.explain_budget,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, bad config, or missing inputs. Exit code 2.
    #[error("{0}")]
    Usage(String),
    /// A stage started with valid inputs and failed. Exit code 1.
    #[error("stage {stage} failed: {cause:#}")]
    Stage { stage: String, cause: anyhow::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Stage { .. } => 1,
        }
    }
}

type StageFn = fn(&PipelineConfig, &Paths) -> anyhow::Result<Vec<String>>;

fn stage_fn(command: Command) -> Option<(&'static str, StageFn)> {
    match command {
        Command::Generate => Some(("generate", stages::generate)),
        Command::Split => Some(("split", stages::split)),
        Command::Tune => Some(("tune", stages::tune)),
        Command::Train => Some(("train", stages::train)),
        Command::Predict => Some(("predict", stages::predict)),
        Command::Evaluate => Some(("evaluate", stages::evaluate)),
        Command::Profile => Some(("profile", stages::profile)),
        Command::Explain => Some(("explain", stages::explain)),
        Command::Report => Some(("report", stages::report)),
        Command::Run => None,
    }
}

/// Runs one stage, records it in the manifest, and classifies failures.
/// Precondition problems (missing inputs, impossible requests) surface as
/// usage errors and leave the manifest untouched.
pub fn run_stage(
    name: &str,
    stage: StageFn,
    config: &PipelineConfig,
    paths: &Paths,
) -> Result<(), CliError> {
    info!("stage {name}: starting");
    match stage(config, paths) {
        Ok(artifacts) => {
            manifest::record_stage(
                &paths.manifest(),
                &config.hash(),
                config.seed,
                name,
                "ok",
                artifacts,
            )
            .map_err(|cause| CliError::Stage {
                stage: name.to_string(),
                cause,
            })?;
            info!("stage {name}: ok");
            Ok(())
        }
        Err(error) => {
            if let Some(usage) = error.downcast_ref::<UsageError>() {
                return Err(CliError::Usage(usage.0.clone()));
            }
            let _ = manifest::record_stage(
                &paths.manifest(),
                &config.hash(),
                config.seed,
                name,
                "failed",
                Vec::new(),
            );
            Err(CliError::Stage {
                stage: name.to_string(),
                cause: error,
            })
        }
    }
}

/// Full pipeline. `generate` is skipped when the config points at an
/// external log; `tune` is skipped when no grid is configured.
pub fn run_all(config: &PipelineConfig, paths: &Paths) -> Result<(), CliError> {
    if config.data.log.is_some() {
        info!("stage generate: skipped (config points at an external log)");
    } else {
        run_stage("generate", stages::generate, config, paths)?;
    }
    run_stage("split", stages::split, config, paths)?;
    if config.grid.is_some() {
        run_stage("tune", stages::tune, config, paths)?;
    } else {
        info!("stage tune: skipped (no grid configured)");
    }
    run_stage("train", stages::train, config, paths)?;
    run_stage("predict", stages::predict, config, paths)?;
    run_stage("evaluate", stages::evaluate, config, paths)?;
    run_stage("profile", stages::profile, config, paths)?;
    run_stage("explain", stages::explain, config, paths)?;
    run_stage("report", stages::report, config, paths)?;
    Ok(())
}

fn init_thread_pool(workers: usize) {
    if workers > 0 {
        // Ignore the error: the global pool can only be set once per
        // process, later calls keep the existing pool.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global();
    }
}

/// Entry point shared by the binary and the tests.
pub fn execute(cli: Cli) -> Result<(), CliError> {
    let config =
        PipelineConfig::load(cli.config.as_deref(), &cli.overrides()).map_err(CliError::Usage)?;
    init_thread_pool(config.workers);
    std::fs::create_dir_all(&cli.out).map_err(|e| {
        CliError::Usage(format!(
            "cannot create output directory {}: {e}",
            cli.out.display()
        ))
    })?;
    let paths = Paths::new(&cli.out);
    match stage_fn(cli.command) {
        Some((name, stage)) => run_stage(name, stage, &config, &paths),
        None => run_all(&config, &paths),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn flags_map_to_overrides() {
        let cli = Cli::parse_from([
            "proctime",
            "--seed",
            "9",
            "--cases",
            "123",
            "--workers",
            "4",
            "run",
        ]);
        let overrides = cli.overrides();
        assert_eq!(overrides.seed, Some(9));
        assert_eq!(overrides.cases, Some(123));
        assert_eq!(overrides.workers, Some(4));
        assert_eq!(cli.command, Command::Run);
        assert_eq!(cli.out, PathBuf::from("out"));
    }

    #[test]
    fn exit_codes_follow_the_error_kind() {
        assert_eq!(CliError::Usage("x".into()).exit_code(), 2);
        assert_eq!(
            CliError::Stage {
                stage: "train".into(),
                cause: anyhow::anyhow!("boom"),
            }
            .exit_code(),
            1
        );
    }

    #[test]
    fn every_single_stage_command_resolves() {
        for command in [
            Command::Generate,
            Command::Split,
            Command::Tune,
            Command::Train,
            Command::Predict,
            Command::Evaluate,
            Command::Profile,
            Command::Explain,
            Command::Report,
        ] {
            assert!(stage_fn(command).is_some());
        }
        assert!(stage_fn(Command::Run).is_none());
    }
}
