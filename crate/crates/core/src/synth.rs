//! Synthetic event log generator with known ground truth.
//!
//! Every generated event draws its processing time from a log-normal
//! distribution whose parameters are a deterministic function of the
//! activity and the case attributes. The generator returns those parameters
//! alongside the log, so downstream estimates (quantiles, intervals, means)
//! can be scored against the true distribution instead of a single noisy
//! observation.
//!
//! The attribute effects are chosen to exercise the estimator: quantity and
//! bend radius push durations up, sheet width pushes them down, and the
//! noise level itself varies with bend radius and sheet width, so interval
//! widths carry signal. The resource attribute has no effect at all and
//! should show up as unimportant in explanations.

use std::collections::BTreeMap;

use indexmap::IndexMap;
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::event_log::{AttrValue, AttributeSchema, Event, EventLog, Trace};
use crate::rng::{derive_seed, derive_seed_str};

const QUANTITY_RANGE: (f64, f64) = (1.0, 50.0);
const WEIGHT_RANGE: (f64, f64) = (5.0, 500.0);
const SHEET_WIDTH_RANGE: (f64, f64) = (5.0, 40.0);
const BEND_RADIUS_RANGE: (f64, f64) = (50.0, 800.0);
const DIAM_BASE_RANGE: (f64, f64) = (100.0, 3000.0);
const N_ARTICLE_GROUPS: usize = 6;
const N_MATERIAL_GROUPS: usize = 4;
const N_RESOURCES: usize = 8;

/// First case starts here (unix seconds); later cases start progressively
/// later so chronological splitting has a real time axis to work with.
const CASE_EPOCH: i64 = 1_600_000_000;
const CASE_SPACING_SECONDS: i64 = 7_200;
const MIN_GAP_SECONDS: i64 = 60;
const MAX_GAP_SECONDS: i64 = 600;
const MIN_SIGMA: f64 = 0.05;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("generator config is invalid: {0}")]
    BadConfig(String),
    #[error("no ground truth for case {case_id:?} event {event_index}")]
    UnknownEvent { case_id: String, event_index: usize },
    #[error("probability {0} is outside (0, 1)")]
    InvalidProbability(f64),
    #[error(transparent)]
    Serde(#[from] serde_json::Error),
}

fn default_n_activities() -> usize {
    30
}

fn default_trace_length_min() -> usize {
    2
}

fn default_trace_length_weights() -> Vec<f64> {
    vec![0.13, 0.18, 0.20, 0.18, 0.14, 0.10, 0.07]
}

/// Parameters of one generation run. The defaults give traces of 2 to 8
/// events (4.6 on average) over 30 activities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub n_cases: usize,
    #[serde(default = "default_n_activities")]
    pub n_activities: usize,
    /// Shortest possible trace; weight `i` below applies to length
    /// `trace_length_min + i`.
    #[serde(default = "default_trace_length_min")]
    pub trace_length_min: usize,
    #[serde(default = "default_trace_length_weights")]
    pub trace_length_weights: Vec<f64>,
    pub seed: u64,
}

impl GeneratorConfig {
    pub fn new(n_cases: usize, seed: u64) -> Self {
        GeneratorConfig {
            n_cases,
            n_activities: default_n_activities(),
            trace_length_min: default_trace_length_min(),
            trace_length_weights: default_trace_length_weights(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.n_cases == 0 {
            return Err(SynthError::BadConfig("n_cases must be positive".into()));
        }
        if self.n_activities == 0 {
            return Err(SynthError::BadConfig(
                "n_activities must be positive".into(),
            ));
        }
        if self.trace_length_min == 0 {
            return Err(SynthError::BadConfig(
                "trace_length_min must be positive".into(),
            ));
        }
        if self.trace_length_weights.is_empty() {
            return Err(SynthError::BadConfig(
                "trace_length_weights must not be empty".into(),
            ));
        }
        if self
            .trace_length_weights
            .iter()
            .any(|w| !w.is_finite() || *w < 0.0)
            || self.trace_length_weights.iter().sum::<f64>() <= 0.0
        {
            return Err(SynthError::BadConfig(
                "trace_length_weights must be non-negative with a positive sum".into(),
            ));
        }
        Ok(())
    }

    /// Expected trace length under the configured weights.
    pub fn mean_trace_length(&self) -> f64 {
        let total: f64 = self.trace_length_weights.iter().sum();
        self.trace_length_weights
            .iter()
            .enumerate()
            .map(|(i, w)| (self.trace_length_min + i) as f64 * w)
            .sum::<f64>()
            / total
    }
}

/// Log-normal parameters of one event's processing time in minutes:
/// `ln(minutes) ~ N(mu, sigma^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrueParams {
    pub mu: f64,
    pub sigma: f64,
}

/// True distribution parameters per generated event, keyed like instance
/// ids (`<case_id>#<event_index>`).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroundTruth {
    pub entries: BTreeMap<String, TrueParams>,
}

fn truth_key(case_id: &str, event_index: usize) -> String {
    format!("{case_id}#{event_index}")
}

impl GroundTruth {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn params(&self, case_id: &str, event_index: usize) -> Result<TrueParams, SynthError> {
        self.entries
            .get(&truth_key(case_id, event_index))
            .copied()
            .ok_or_else(|| SynthError::UnknownEvent {
                case_id: case_id.to_string(),
                event_index,
            })
    }

    /// True `alpha`-quantile of the event's processing time in minutes.
    pub fn true_quantile(
        &self,
        case_id: &str,
        event_index: usize,
        alpha: f64,
    ) -> Result<f64, SynthError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(SynthError::InvalidProbability(alpha));
        }
        let p = self.params(case_id, event_index)?;
        let z = Normal::new(0.0, 1.0)
            .expect("standard normal")
            .inverse_cdf(alpha);
        Ok((p.mu + p.sigma * z).exp())
    }

    /// True central interval covering `level` of the distribution.
    pub fn true_interval(
        &self,
        case_id: &str,
        event_index: usize,
        level: f64,
    ) -> Result<(f64, f64), SynthError> {
        if !(level > 0.0 && level < 1.0) {
            return Err(SynthError::InvalidProbability(level));
        }
        let alpha = (1.0 - level) / 2.0;
        Ok((
            self.true_quantile(case_id, event_index, alpha)?,
            self.true_quantile(case_id, event_index, 1.0 - alpha)?,
        ))
    }

    /// True mean of the event's processing time in minutes.
    pub fn true_mean(&self, case_id: &str, event_index: usize) -> Result<f64, SynthError> {
        let p = self.params(case_id, event_index)?;
        Ok((p.mu + p.sigma * p.sigma / 2.0).exp())
    }

    pub fn to_json(&self) -> Result<String, SynthError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self, SynthError> {
        Ok(serde_json::from_str(json)?)
    }
}

fn centered(v: f64, range: (f64, f64)) -> f64 {
    (v - range.0) / (range.1 - range.0) - 0.5
}

fn round3(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}

fn activity_name(index: usize) -> String {
    format!("A{:02}", index + 1)
}

/// The attribute columns every generated log declares.
pub fn generated_schema() -> AttributeSchema {
    AttributeSchema::new()
        .numeric("Quantity")
        .numeric("Weight")
        .numeric("Sheet_Width")
        .numeric("Bend_Radius_S")
        .numeric("Diam_Base")
        .categorical("Article_Group")
        .categorical("Material_Group")
        .categorical("Resource")
}

/// Generates an event log together with the true processing time
/// distribution of every event. Deterministic in the config; each case
/// draws from its own seeded stream, so the output does not depend on
/// generation order.
pub fn generate(config: &GeneratorConfig) -> Result<(EventLog, GroundTruth), SynthError> {
    config.validate()?;
    let length_dist = WeightedIndex::new(&config.trace_length_weights)
        .map_err(|e| SynthError::BadConfig(e.to_string()))?;

    // Per-activity base log-duration between ln(10) and ln(240) minutes,
    // from a stream independent of the case streams.
    let mut activity_rng =
        ChaCha8Rng::seed_from_u64(derive_seed_str(config.seed, "activity-bases"));
    let (lo, hi) = ((10.0f64).ln(), (240.0f64).ln());
    let activity_base: Vec<f64> = (0..config.n_activities)
        .map(|_| activity_rng.gen_range(lo..hi))
        .collect();

    let id_width = config.n_cases.to_string().len().max(5);
    let mut traces = Vec::with_capacity(config.n_cases);
    let mut entries = BTreeMap::new();
    for c in 0..config.n_cases {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, c as u64));
        let case_id = format!("c{:0width$}", c + 1, width = id_width);
        let length = config.trace_length_min + length_dist.sample(&mut rng);

        let quantity = rng.gen_range(1..=50) as f64;
        let weight = round3(rng.gen_range(WEIGHT_RANGE.0..WEIGHT_RANGE.1));
        let sheet_width = round3(rng.gen_range(SHEET_WIDTH_RANGE.0..SHEET_WIDTH_RANGE.1));
        let bend_radius = round3(rng.gen_range(BEND_RADIUS_RANGE.0..BEND_RADIUS_RANGE.1));
        let diam_base = round3(rng.gen_range(DIAM_BASE_RANGE.0..DIAM_BASE_RANGE.1));
        let article = rng.gen_range(0..N_ARTICLE_GROUPS);
        let material = rng.gen_range(0..N_MATERIAL_GROUPS);
        let resource = rng.gen_range(0..N_RESOURCES);

        let mut attributes = IndexMap::new();
        attributes.insert("Quantity".to_string(), AttrValue::Numeric(quantity));
        attributes.insert("Weight".to_string(), AttrValue::Numeric(weight));
        attributes.insert("Sheet_Width".to_string(), AttrValue::Numeric(sheet_width));
        attributes.insert("Bend_Radius_S".to_string(), AttrValue::Numeric(bend_radius));
        attributes.insert("Diam_Base".to_string(), AttrValue::Numeric(diam_base));
        attributes.insert(
            "Article_Group".to_string(),
            AttrValue::Categorical(format!("AG{}", article + 1)),
        );
        attributes.insert(
            "Material_Group".to_string(),
            AttrValue::Categorical(format!("MG{}", material + 1)),
        );
        attributes.insert(
            "Resource".to_string(),
            AttrValue::Categorical(format!("R{}", resource + 1)),
        );

        // Case-level shift of the log-duration and its noise level. The
        // resource index is deliberately absent from both.
        let q_n = centered(quantity, QUANTITY_RANGE);
        let w_n = centered(weight, WEIGHT_RANGE);
        let sw_n = centered(sheet_width, SHEET_WIDTH_RANGE);
        let br_n = centered(bend_radius, BEND_RADIUS_RANGE);
        let db_n = centered(diam_base, DIAM_BASE_RANGE);
        let article_shift = (article as f64 - (N_ARTICLE_GROUPS - 1) as f64 / 2.0) * 0.05;
        let material_shift = (material as f64 - (N_MATERIAL_GROUPS - 1) as f64 / 2.0) * 0.04;
        let case_shift = 0.35 * q_n + 0.45 * br_n - 0.25 * sw_n + 0.15 * w_n + 0.10 * db_n
            + article_shift
            + material_shift;
        let sigma = (0.55 * (1.0 + 0.5 * br_n - 0.3 * sw_n)).max(MIN_SIGMA);

        let mut clock = CASE_EPOCH + c as i64 * CASE_SPACING_SECONDS;
        let mut events = Vec::with_capacity(length);
        for event_index in 0..length {
            let activity = rng.gen_range(0..config.n_activities);
            let mu = activity_base[activity] + case_shift;
            let z: f64 = rng.sample(StandardNormal);
            let minutes = (mu + sigma * z).exp();
            let duration = ((minutes * 60.0).round() as i64).max(1);
            let t_start = clock;
            let t_complete = t_start + duration;
            events.push(Event {
                case_id: case_id.clone(),
                activity: activity_name(activity),
                t_start,
                t_complete,
                attributes: attributes.clone(),
            });
            entries.insert(truth_key(&case_id, event_index), TrueParams { mu, sigma });
            clock = t_complete + rng.gen_range(MIN_GAP_SECONDS..=MAX_GAP_SECONDS);
        }
        traces.push(Trace::new(case_id, events));
    }

    Ok((
        EventLog {
            traces,
            schema: generated_schema(),
        },
        GroundTruth { entries },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event_log::{parse_csv, write_csv};

    #[test]
    fn generation_is_deterministic_down_to_bytes() {
        let config = GeneratorConfig::new(40, 11);
        let (log_a, truth_a) = generate(&config).unwrap();
        let (log_b, truth_b) = generate(&config).unwrap();
        assert_eq!(log_a, log_b);
        assert_eq!(truth_a, truth_b);

        let mut csv_a = Vec::new();
        let mut csv_b = Vec::new();
        write_csv(&log_a, &mut csv_a).unwrap();
        write_csv(&log_b, &mut csv_b).unwrap();
        assert_eq!(csv_a, csv_b);
        assert_eq!(truth_a.to_json().unwrap(), truth_b.to_json().unwrap());
    }

    #[test]
    fn different_seeds_give_different_logs() {
        let (log_a, _) = generate(&GeneratorConfig::new(10, 1)).unwrap();
        let (log_b, _) = generate(&GeneratorConfig::new(10, 2)).unwrap();
        assert_ne!(log_a, log_b);
    }

    #[test]
    fn trace_lengths_stay_in_the_configured_band() {
        let config = GeneratorConfig::new(500, 7);
        let (log, truth) = generate(&config).unwrap();
        assert_eq!(log.n_cases(), 500);
        for trace in &log.traces {
            assert!((2..=8).contains(&trace.len()), "len {}", trace.len());
        }
        assert!(log.n_events() >= 1000 && log.n_events() <= 4000);
        assert_eq!(truth.len(), log.n_events());
    }

    #[test]
    fn mean_trace_length_matches_the_weights() {
        let config = GeneratorConfig::new(10_000, 5);
        assert!((config.mean_trace_length() - 4.6).abs() < 1e-12);
        let (log, _) = generate(&config).unwrap();
        let mean = log.n_events() as f64 / log.n_cases() as f64;
        assert!((mean - 4.6).abs() < 0.1, "mean trace length {mean}");
    }

    #[test]
    fn case_starts_advance_with_the_case_index() {
        let (log, _) = generate(&GeneratorConfig::new(30, 3)).unwrap();
        let starts: Vec<i64> = log.traces.iter().map(|t| t.start_time()).collect();
        for pair in starts.windows(2) {
            assert!(pair[0] < pair[1]);
        }
        assert_eq!(starts[0], CASE_EPOCH);
    }

    #[test]
    fn durations_land_in_the_true_interval_at_the_nominal_rate() {
        let (log, truth) = generate(&GeneratorConfig::new(5000, 3)).unwrap();
        let mut covered = 0usize;
        let mut total = 0usize;
        for trace in &log.traces {
            for (i, event) in trace.events.iter().enumerate() {
                let (lo, hi) = truth.true_interval(&trace.case_id, i, 0.9).unwrap();
                let minutes = event.processing_time_minutes();
                if minutes >= lo && minutes <= hi {
                    covered += 1;
                }
                total += 1;
            }
        }
        assert!(total >= 20_000, "only {total} events");
        let rate = covered as f64 / total as f64;
        assert!((rate - 0.9).abs() < 0.01, "coverage {rate}");
    }

    #[test]
    fn true_quantiles_are_monotone_and_centered_on_the_median() {
        let mut entries = BTreeMap::new();
        entries.insert(
            truth_key("x", 0),
            TrueParams {
                mu: (50.0f64).ln(),
                sigma: 0.4,
            },
        );
        let truth = GroundTruth { entries };
        let q05 = truth.true_quantile("x", 0, 0.05).unwrap();
        let q50 = truth.true_quantile("x", 0, 0.5).unwrap();
        let q95 = truth.true_quantile("x", 0, 0.95).unwrap();
        assert!(q05 < q50 && q50 < q95);
        assert!((q50 - 50.0).abs() < 1e-9);
        // `true_interval` derives its tail probability from the level, which
        // lands one float ulp away from the 0.05 literal; compare with a
        // tolerance instead of exactly.
        let (lo, hi) = truth.true_interval("x", 0, 0.9).unwrap();
        assert!((lo - q05).abs() < 1e-9 && (hi - q95).abs() < 1e-9);
        assert!(truth.true_mean("x", 0).unwrap() > q50);
    }

    #[test]
    fn quantiles_collapse_when_sigma_vanishes() {
        let mut entries = BTreeMap::new();
        entries.insert(
            truth_key("x", 0),
            TrueParams {
                mu: (50.0f64).ln(),
                sigma: 1e-12,
            },
        );
        let truth = GroundTruth { entries };
        let q05 = truth.true_quantile("x", 0, 0.05).unwrap();
        let q95 = truth.true_quantile("x", 0, 0.95).unwrap();
        assert!((q05 - 50.0).abs() < 1e-6);
        assert!((q95 - 50.0).abs() < 1e-6);
        assert!((truth.true_mean("x", 0).unwrap() - 50.0).abs() < 1e-6);
    }

    #[test]
    fn lookups_reject_unknown_events_and_bad_probabilities() {
        let (_, truth) = generate(&GeneratorConfig::new(3, 1)).unwrap();
        assert!(matches!(
            truth.params("nope", 0),
            Err(SynthError::UnknownEvent { .. })
        ));
        assert!(matches!(
            truth.true_quantile("nope", 0, 0.5),
            Err(SynthError::UnknownEvent { .. })
        ));
        let some_key = truth.entries.keys().next().unwrap().clone();
        let case_id = some_key.split('#').next().unwrap();
        assert!(matches!(
            truth.true_quantile(case_id, 0, 0.0),
            Err(SynthError::InvalidProbability(_))
        ));
        assert!(matches!(
            truth.true_interval(case_id, 0, 1.0),
            Err(SynthError::InvalidProbability(_))
        ));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut config = GeneratorConfig::new(0, 1);
        assert!(matches!(config.validate(), Err(SynthError::BadConfig(_))));
        config.n_cases = 5;
        config.trace_length_weights = vec![0.0, 0.0];
        assert!(matches!(config.validate(), Err(SynthError::BadConfig(_))));
        config.trace_length_weights = vec![1.0, -0.5];
        assert!(matches!(config.validate(), Err(SynthError::BadConfig(_))));
    }

    #[test]
    fn generated_logs_survive_a_csv_round_trip() {
        let (log, _) = generate(&GeneratorConfig::new(20, 9)).unwrap();
        let mut buffer = Vec::new();
        write_csv(&log, &mut buffer).unwrap();
        let parsed = parse_csv(buffer.as_slice(), &log.schema).unwrap();
        assert_eq!(parsed, log);
    }

    #[test]
    fn ground_truth_survives_a_json_round_trip() {
        let (_, truth) = generate(&GeneratorConfig::new(5, 2)).unwrap();
        let json = truth.to_json().unwrap();
        let back = GroundTruth::from_json(&json).unwrap();
        assert_eq!(back, truth);
    }

    #[test]
    fn config_json_fills_in_defaults() {
        let config: GeneratorConfig =
            serde_json::from_str(r#"{"n_cases": 17, "seed": 4}"#).unwrap();
        assert_eq!(config.n_activities, 30);
        assert_eq!(config.trace_length_min, 2);
        assert_eq!(config.trace_length_weights.len(), 7);
        assert_eq!(config, GeneratorConfig::new(17, 4));
    }
}
