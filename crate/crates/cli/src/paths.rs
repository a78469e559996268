//! Artifact locations inside the output directory.

use std::path::{Path, PathBuf};

use crate::config::PipelineConfig;

/// Resolves the fixed artifact names against one output directory.
#[derive(Debug, Clone)]
pub struct Paths {
    out: PathBuf,
}

impl Paths {
    pub fn new(out: impl Into<PathBuf>) -> Self {
        Paths { out: out.into() }
    }

    pub fn out(&self) -> &Path {
        &self.out
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    pub fn log(&self) -> PathBuf {
        self.file("log.csv")
    }

    pub fn truth(&self) -> PathBuf {
        self.file("truth.json")
    }

    pub fn attributes(&self) -> PathBuf {
        self.file("attributes.json")
    }

    /// The event log to read: an external path from the config when given,
    /// otherwise the generated one in the output directory.
    pub fn input_log(&self, config: &PipelineConfig) -> PathBuf {
        config.data.log.clone().unwrap_or_else(|| self.log())
    }

    pub fn input_attributes(&self, config: &PipelineConfig) -> PathBuf {
        config
            .data
            .attributes
            .clone()
            .unwrap_or_else(|| self.attributes())
    }

    pub fn schema(&self) -> PathBuf {
        self.file("schema.json")
    }

    pub fn stats(&self) -> PathBuf {
        self.file("stats.json")
    }

    pub fn dataset_csv(&self, block: &str) -> PathBuf {
        self.file(&format!("{block}.csv"))
    }

    pub fn dataset_index(&self, block: &str) -> PathBuf {
        self.file(&format!("{block}_index.csv"))
    }

    pub fn split_summary(&self) -> PathBuf {
        self.file("split_summary.json")
    }

    pub fn leaderboard(&self) -> PathBuf {
        self.file("leaderboard.csv")
    }

    pub fn best(&self) -> PathBuf {
        self.file("best.json")
    }

    pub fn model(&self) -> PathBuf {
        self.file("model.json")
    }

    pub fn scores(&self) -> PathBuf {
        self.file("scores.csv")
    }

    pub fn metrics(&self) -> PathBuf {
        self.file("metrics.json")
    }

    pub fn thresholds(&self) -> PathBuf {
        self.file("thresholds.json")
    }

    pub fn assignments(&self) -> PathBuf {
        self.file("assignments.csv")
    }

    pub fn profile_report(&self) -> PathBuf {
        self.file("profiles.json")
    }

    pub fn explanations(&self) -> PathBuf {
        self.file("explanations.csv")
    }

    pub fn explain_summary(&self) -> PathBuf {
        self.file("explain_summary.json")
    }

    pub fn importance_csv(&self) -> PathBuf {
        self.file("importance.csv")
    }

    pub fn importance_svg(&self) -> PathBuf {
        self.file("importance.svg")
    }

    pub fn summary_csv(&self) -> PathBuf {
        self.file("summary.csv")
    }

    pub fn summary_svg(&self) -> PathBuf {
        self.file("summary.svg")
    }

    pub fn dependence_csv(&self) -> PathBuf {
        self.file("dependence.csv")
    }

    pub fn dependence_svg(&self) -> PathBuf {
        self.file("dependence.svg")
    }

    pub fn manifest(&self) -> PathBuf {
        self.file("manifest.json")
    }
}
