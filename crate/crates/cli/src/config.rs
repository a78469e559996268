//! Pipeline configuration: JSON file, defaults, and flag overrides.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use proctime_core::event_log::SplitRatios;
use proctime_core::metrics::DEFAULT_RWIDTH_EPSILON;
use proctime_core::qrf::{GridSpec, WeightBasis};
use proctime_core::rng::derive_seed_str;
use proctime_core::shap::ExplanationTarget;
use proctime_core::synth::GeneratorConfig;

/// Everything a full pipeline run needs. Loaded from a JSON file (all
/// fields optional, unknown fields rejected) and then adjusted by command
/// line flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Root seed; every stage derives its own stream from it.
    pub seed: u64,
    /// Nominal coverage of prediction intervals.
    pub level: f64,
    /// Rayon thread count; 0 keeps the library default.
    pub workers: usize,
    /// Point predictions at or below this are excluded from relative-width
    /// metrics and profile assignment.
    pub epsilon: f64,
    pub data: DataSection,
    pub generator: GeneratorSection,
    pub split: SplitSection,
    pub hyperparameters: HyperparameterSection,
    /// When present, `tune` searches this grid and `train` uses its winner.
    pub grid: Option<GridSpec>,
    pub profiles: ProfileSection,
    pub explain: ExplainSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 7,
            level: 0.9,
            workers: 0,
            epsilon: DEFAULT_RWIDTH_EPSILON,
            data: DataSection::default(),
            generator: GeneratorSection::default(),
            split: SplitSection::default(),
            hyperparameters: HyperparameterSection::default(),
            grid: None,
            profiles: ProfileSection::default(),
            explain: ExplainSection::default(),
        }
    }
}

/// Where to read the event log from. Unset paths fall back to the
/// artifacts the `generate` stage writes into the output directory.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub log: Option<PathBuf>,
    pub attributes: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorSection {
    pub n_cases: usize,
    pub n_activities: usize,
    pub trace_length_min: usize,
    pub trace_length_weights: Vec<f64>,
}

impl Default for GeneratorSection {
    fn default() -> Self {
        let base = GeneratorConfig::new(500, 0);
        GeneratorSection {
            n_cases: base.n_cases,
            n_activities: base.n_activities,
            trace_length_min: base.trace_length_min,
            trace_length_weights: base.trace_length_weights,
        }
    }
}

impl GeneratorSection {
    /// Generator parameters with a seed derived from the pipeline seed.
    pub fn to_config(&self, pipeline_seed: u64) -> GeneratorConfig {
        GeneratorConfig {
            n_cases: self.n_cases,
            n_activities: self.n_activities,
            trace_length_min: self.trace_length_min,
            trace_length_weights: self.trace_length_weights.clone(),
            seed: derive_seed_str(pipeline_seed, "generate"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitSection {
    fn default() -> Self {
        let r = SplitRatios::default();
        SplitSection {
            train: r.train,
            validation: r.validation,
            test: r.test,
        }
    }
}

impl SplitSection {
    pub fn to_ratios(&self) -> Result<SplitRatios, String> {
        SplitRatios::new(self.train, self.validation, self.test).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperparameterSection {
    pub trees: usize,
    /// Features tried per split; 0 means the square root of the encoded
    /// width, resolved at fit time.
    pub mtry: usize,
    pub min_n: usize,
    /// Rows the observation weights count: the full training set routed
    /// through each tree, or only the tree's bootstrap draw.
    pub weight_basis: WeightBasis,
}

impl Default for HyperparameterSection {
    fn default() -> Self {
        HyperparameterSection {
            trees: 100,
            mtry: 0,
            min_n: 20,
            weight_basis: WeightBasis::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileSection {
    pub p_low: f64,
    pub p_high: f64,
}

impl Default for ProfileSection {
    fn default() -> Self {
        ProfileSection {
            p_low: 25.0,
            p_high: 75.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainSection {
    /// How many test instances to explain (the earliest ones).
    pub instances: usize,
    /// Background sample size drawn from the training set.
    pub background: usize,
    /// Coalition budget; 0 picks full enumeration when affordable and a
    /// paired sample of about `2m + 2048` otherwise.
    pub budget: usize,
    pub targets: Vec<String>,
    /// Target whose attributions drive the summary and dependence reports.
    pub summary_target: String,
    pub top_features: usize,
    /// Dependence plot features; unset falls back to the two most
    /// important features of the summary target.
    pub dependence_primary: Option<String>,
    pub dependence_color: Option<String>,
}

impl Default for ExplainSection {
    fn default() -> Self {
        ExplainSection {
            instances: 25,
            background: 100,
            budget: 0,
            targets: vec![
                "point".to_string(),
                "lower".to_string(),
                "upper".to_string(),
                "width".to_string(),
            ],
            summary_target: "width".to_string(),
            top_features: 8,
            dependence_primary: None,
            dependence_color: None,
        }
    }
}

impl ExplainSection {
    pub fn parsed_targets(&self) -> Result<Vec<ExplanationTarget>, String> {
        if self.targets.is_empty() {
            return Err("explain.targets must not be empty".to_string());
        }
        self.targets.iter().map(|t| t.parse()).collect()
    }

    pub fn parsed_summary_target(&self) -> Result<ExplanationTarget, String> {
        self.summary_target.parse()
    }

    /// Effective coalition budget for `m` feature groups.
    pub fn effective_budget(&self, m: usize) -> usize {
        if self.budget > 0 {
            return self.budget;
        }
        let interior = if m < 63 { (1usize << m) - 2 } else { usize::MAX };
        interior.min(2 * m + 2048)
    }
}

/// Command line values that win over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub level: Option<f64>,
    pub workers: Option<usize>,
    pub cases: Option<usize>,
    pub explain_instances: Option<usize>,
    pub explain_background: Option<usize>,
    pub explain_budget: Option<usize>,
}

impl PipelineConfig {
    /// Reads the config file (when given), applies overrides, validates.
    /// Every failure here is a usage error.
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self, String> {
        let mut config = match path {
            Some(p) => {
                let text = fs::read_to_string(p)
                    .map_err(|e| format!("cannot read config {}: {e}", p.display()))?;
                serde_json::from_str(&text)
                    .map_err(|e| format!("config {} is invalid: {e}", p.display()))?
            }
            None => PipelineConfig::default(),
        };
        if let Some(seed) = overrides.seed {
            config.seed = seed;
        }
        if let Some(level) = overrides.level {
            config.level = level;
        }
        if let Some(workers) = overrides.workers {
            config.workers = workers;
        }
        if let Some(cases) = overrides.cases {
            config.generator.n_cases = cases;
        }
        if let Some(instances) = overrides.explain_instances {
            config.explain.instances = instances;
        }
        if let Some(background) = overrides.explain_background {
            config.explain.background = background;
        }
        if let Some(budget) = overrides.explain_budget {
            config.explain.budget = budget;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(format!("level {} is outside (0, 1)", self.level));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(format!("epsilon {} must be positive", self.epsilon));
        }
        self.split.to_ratios()?;
        if !(self.profiles.p_low > 0.0
            && self.profiles.p_low < self.profiles.p_high
            && self.profiles.p_high < 100.0)
        {
            return Err(format!(
                "profile percentiles ({}, {}) must satisfy 0 < low < high < 100",
                self.profiles.p_low, self.profiles.p_high
            ));
        }
        self.explain.parsed_targets()?;
        self.explain.parsed_summary_target()?;
        if self.explain.background == 0 {
            return Err("explain.background must be positive".to_string());
        }
        if self.explain.top_features == 0 {
            return Err("explain.top_features must be positive".to_string());
        }
        if let Some(grid) = &self.grid {
            if grid.n_combinations() == 0 {
                return Err("grid must list at least one value per hyperparameter".to_string());
            }
        }
        Ok(())
    }

    pub fn ratios(&self) -> SplitRatios {
        self.split.to_ratios().expect("ratios validated at load")
    }

    /// Hash of the effective configuration, recorded in the manifest so
    /// stale artifacts are detectable.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        let mut out = String::with_capacity(64);
        for byte in digest {
            use std::fmt::Write;
            write!(out, "{byte:02x}").expect("writing to string");
        }
        out
    }
}
