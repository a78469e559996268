//! The pipeline stages. Each stage reads its inputs from disk, writes its
//! artifacts into the output directory, and returns their file names for
//! the manifest.
//!
//! Stages communicate only through artifacts, so any stage can be rerun in
//! isolation. The split itself is re-derived from the event log on demand
//! (it is deterministic), which keeps the exported dataset CSVs write-only
//! conveniences instead of load-bearing state.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::Path;

use anyhow::Context;
use log::info;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use proctime_core::event_log::{
    chronological_split, parse_csv, write_csv, AttributeSchema, DatasetSplit, EncodingSchema,
    EventLog, FeatureValue,
};
use proctime_core::metrics::{
    coverage_breakdown, interval_metrics, point_metrics, CoverageBreakdown, IntervalMetrics,
    PointMetrics,
};
use proctime_core::profiles::{
    assign_profile, calibrate_thresholds, per_profile_report, PerProfileReport,
    ProfileThresholds,
};
use proctime_core::qrf::{grid_search, Hyperparameters, PredictionInterval, QrfModel};
use proctime_core::rng::derive_seed_str;
use proctime_core::shap::{
    dependence_points, explain_instance, global_importance, summary_points, BackgroundSet,
    Explanation, ExplanationTarget, FeatureGroups,
};
use proctime_core::synth;

use crate::config::PipelineConfig;
use crate::paths::Paths;
use crate::plots::{self, Dot};
use crate::scores::{self, ScoreRow, SPLIT_TEST, SPLIT_VALIDATION};

/// Marks precondition failures: bad requests and missing inputs. The
/// dispatcher turns these into usage errors (exit code 2) instead of stage
/// failures (exit code 1).
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(message: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(message.into()))
}

fn require(path: &Path, hint: &str) -> anyhow::Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(usage(format!("missing input {}; {hint}", path.display())))
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let json = serde_json::to_string_pretty(value)
        .with_context(|| format!("serializing {}", path.display()))?;
    fs::write(path, json + "\n").with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn read_json<T: DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load_log(config: &PipelineConfig, paths: &Paths) -> anyhow::Result<EventLog> {
    let attributes = paths.input_attributes(config);
    let log = paths.input_log(config);
    require(
        &attributes,
        "run `generate` first or point data.attributes at an attribute schema",
    )?;
    require(&log, "run `generate` first or point data.log at an event log")?;
    let schema: AttributeSchema = read_json(&attributes)?;
    let file = File::open(&log).with_context(|| format!("opening {}", log.display()))?;
    let parsed = parse_csv(BufReader::new(file), &schema)
        .with_context(|| format!("parsing {}", log.display()))?;
    Ok(parsed)
}

fn resplit(config: &PipelineConfig, paths: &Paths) -> anyhow::Result<DatasetSplit> {
    let log = load_log(config, paths)?;
    let split = chronological_split(&log, &config.ratios()).context("splitting the log")?;
    Ok(split)
}

pub fn generate(config: &PipelineConfig, paths: &Paths) -> anyhow::Result<Vec<String>> {
    let generator = config.generator.to_config(config.seed);
    let (log, truth) = synth::generate(&generator)?;
    let file = File::create(paths.log())
        .with_context(|| format!("creating {}", paths.log().display()))?;
    write_csv(&log, BufWriter::new(file)).context("writing the event log")?;
    fs::write(paths.truth(), truth.to_json()? + "\n")
        .with_context(|| format!("writing {}", paths.truth().display()))?;
    write_json(&paths.attributes(), &log.schema)?;
    info!(
        "generated {} cases / {} events",
        log.n_cases(),
        log.n_events()
    );
    Ok(vec![
        "log.csv".to_string(),
        "truth.json".to_string(),
        "attributes.json".to_string(),
    ])
}

#[derive(Debug, Serialize, Deserialize)]
struct BlockSummary {
    cases: usize,
    instances: usize,
}

pub fn split(config: &PipelineConfig, paths: &Paths) -> anyhow::Result<Vec<String>> {
    let split = resplit(config, paths)?;
    write_json(&paths.schema(), &*split.schema)?;
    write_json(&paths.stats(), &split.stats)?;

    let mut artifacts = vec!["schema.json".to_string(), "stats.json".to_string()];
    let mut summary = BTreeMap::new();
    for (name, dataset) in [
        ("train", &split.train),
        ("validation", &split.validation),
        ("test", &split.test),
    ] {
        let csv_path = paths.dataset_csv(name);
        dataset
            .write_csv(BufWriter::new(File::create(&csv_path)?))
            .with_context(|| format!("writing {}", csv_path.display()))?;
        let index_path = paths.dataset_index(name);
        dataset
            .write_index_csv(BufWriter::new(File::create(&index_path)?))
            .with_context(|| format!("writing {}", index_path.display()))?;
        let cases: BTreeSet<&str> =
            dataset.instances.iter().map(|i| i.case_id.as_str()).collect();
        summary.insert(
            name.to_string(),
            BlockSummary {
                cases: cases.len(),
                instances: dataset.len(),
            },
        );
        artifacts.push(format!("{name}.csv"));
        artifacts.push(format!("{name}_index.csv"));
    }
    write_json(&paths.split_summary(), &summary)?;
    artifacts.push("split_summary.json".to_string());
    info!(
        "split into {} / {} / {} instances",
        split.train.len(),
        split.validation.len(),
        split.test.len()
    );
    Ok(artifacts)
}

pub fn tune(config: &PipelineConfig, paths: &Paths) -> anyhow::Result<Vec<String>> {
    let grid = config
        .grid
        .as_ref()
        .ok_or_else(|| usage("config has no grid section; `tune` needs one"))?;
    let split = resplit(config, paths)?;
    let result = grid_search(
        &split.train,
        &split.validation,
        grid,
        config.level,
        config.epsilon,
        config.hyperparameters.weight_basis,
        derive_seed_str(config.seed, "forest"),
    )
    .context("searching the hyperparameter grid")?;

    let file = File::create(paths.leaderboard())?;
    let mut writer = csv::Writer::from_writer(BufWriter::new(file));
    for entry in &result.leaderboard {
        writer.serialize(entry)?;
    }
    writer.flush()?;
    write_json(&paths.best(), &result.best)?;
    info!(
        "tuned over {} combinations; best: trees={} mtry={} min_n={}",
        result.leaderboard.len(),
        result.best.trees,
        result.best.mtry,
        result.best.min_n
    );
    Ok(vec!["leaderboard.csv".to_string(), "best.json".to_string()])
}

fn resolve_hyperparameters(
    config: &PipelineConfig,
    paths: &Paths,
    width: usize,
) -> anyhow::Result<Hyperparameters> {
    if config.grid.is_some() {
        require(
            &paths.best(),
            "the config has a grid, so `train` uses the tuned winner; run `tune` first",
        )?;
        return read_json(&paths.best());
    }
    let section = &config.hyperparameters;
    let mtry = if section.mtry == 0 {
        ((width as f64).sqrt().floor() as usize).max(1)
    } else {
        section.mtry
    };
    Ok(Hyperparameters {
        trees: section.trees,
        mtry,
        min_n: section.min_n,
        seed: derive_seed_str(config.seed, "forest"),
        weight_basis: section.weight_basis,
    })
}

pub fn train(config: &PipelineConfig, paths: &Paths) -> anyhow::Result<Vec<String>> {
    let split = resplit(config, paths)?;
    let hp = resolve_hyperparameters(config, paths, split.schema.width())?;
    let model = QrfModel::fit(&split.train, hp).context("fitting the forest")?;
    fs::write(paths.model(), model.to_json()?)
        .with_context(|| format!("writing {}", paths.model().display()))?;
    info!(
        "trained {} trees (mtry={}, min_n={}) on {} instances",
        hp.trees,
        hp.mtry,
        hp.min_n,
        split.train.len()
    );
    Ok(vec!["model.json".to_string()])
}

fn load_model(paths: &Paths) -> anyhow::Result<(QrfModel, EncodingSchema)> {
    require(&paths.schema(), "run `split` first")?;
    require(&paths.model(), "run `train` first")?;
    let schema: EncodingSchema = read_json(&paths.schema())?;
    let json = fs::read_to_string(paths.model())
        .with_context(|| format!("reading {}", paths.model().display()))?;
    let model = QrfModel::from_json(&json, &schema).context("loading the model")?;
    Ok((model, schema))
}

pub fn predict(config: &PipelineConfig, paths: &Paths) -> anyhow::Result<Vec<String>> {
    let (model, schema) = load_model(paths)?;
    let split = resplit(config, paths)?;
    if split.schema.hash_hex() != schema.hash_hex() {
        anyhow::bail!(
            "the log no longer matches schema.json; rerun `split` and `train` before `predict`"
        );
    }
    let mut rows = Vec::with_capacity(split.validation.len() + split.test.len());
    for (name, dataset) in [
        (SPLIT_VALIDATION, &split.validation),
        (SPLIT_TEST, &split.test),
    ] {
        for instance in &dataset.instances {
            let interval = model.predict_interval(instance.features.as_slice(), config.level)?;
            rows.push(ScoreRow {
                split: name.to_string(),
                instance_id: instance.id(),
                case_id: instance.case_id.clone(),
                activity: instance.activity.clone(),
                event_index: instance.event_index,
                actual_minutes: instance.target_minutes,
                point: interval.point,
                lower: interval.lower,
                upper: interval.upper,
            });
        }
    }
    scores::write_scores(&paths.scores(), &rows)?;
    info!("scored {} instances", rows.len());
    Ok(vec!["scores.csv".to_string()])
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SplitMetrics {
    pub point: PointMetrics,
    pub interval: IntervalMetrics,
    pub coverage: CoverageBreakdown,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ActivitySlice {
    pub n: usize,
    pub rmse: f64,
    pub mae: f64,
    pub picp: f64,
    pub mpiw: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MetricsReport {
    pub level: f64,
    pub epsilon: f64,
    pub validation: SplitMetrics,
    pub test: SplitMetrics,
    /// Test-set metrics per activity.
    pub per_activity: BTreeMap<String, ActivitySlice>,
}

fn split_metrics(
    rows: &[&ScoreRow],
    level: f64,
    epsilon: f64,
    name: &str,
) -> anyhow::Result<SplitMetrics> {
    if rows.is_empty() {
        anyhow::bail!("scores.csv has no {name} rows");
    }
    let actual: Vec<f64> = rows.iter().map(|r| r.actual_minutes).collect();
    let points: Vec<f64> = rows.iter().map(|r| r.point).collect();
    let intervals: Vec<PredictionInterval> = rows.iter().map(|r| r.interval(level)).collect();
    Ok(SplitMetrics {
        point: point_metrics(&actual, &points)?,
        interval: interval_metrics(&actual, &intervals, epsilon)?,
        coverage: coverage_breakdown(&actual, &intervals)?,
    })
}

pub fn evaluate(config: &PipelineConfig, paths: &Paths) -> anyhow::Result<Vec<String>> {
    require(&paths.scores(), "run `predict` first")?;
    let rows = scores::read_scores(&paths.scores())?;
    let (validation, test) = scores::partition(&rows);

    let mut per_activity = BTreeMap::new();
    let mut by_activity: BTreeMap<&str, Vec<&ScoreRow>> = BTreeMap::new();
    for row in &test {
        by_activity.entry(row.activity.as_str()).or_default().push(row);
    }
    for (activity, rows) in by_activity {
        let actual: Vec<f64> = rows.iter().map(|r| r.actual_minutes).collect();
        let points: Vec<f64> = rows.iter().map(|r| r.point).collect();
        let pm = point_metrics(&actual, &points)?;
        let covered = rows
            .iter()
            .filter(|r| r.actual_minutes >= r.lower && r.actual_minutes <= r.upper)
            .count();
        let width_sum: f64 = rows.iter().map(|r| r.upper - r.lower).sum();
        per_activity.insert(
            activity.to_string(),
            ActivitySlice {
                n: rows.len(),
                rmse: pm.rmse,
                mae: pm.mae,
                picp: covered as f64 / rows.len() as f64,
                mpiw: width_sum / rows.len() as f64,
            },
        );
    }

    let report = MetricsReport {
        level: config.level,
        epsilon: config.epsilon,
        validation: split_metrics(&validation, config.level, config.epsilon, "validation")?,
        test: split_metrics(&test, config.level, config.epsilon, "test")?,
        per_activity,
    };
    write_json(&paths.metrics(), &report)?;
    info!(
        "test RMSE {:.3}, PICP {:.3}, MPIW {:.3}",
        report.test.point.rmse, report.test.interval.picp, report.test.interval.mpiw
    );
    Ok(vec!["metrics.json".to_string()])
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ProfileArtifact {
    pub thresholds: ProfileThresholds,
    pub report: PerProfileReport,
}

pub fn profile(config: &PipelineConfig, paths: &Paths) -> anyhow::Result<Vec<String>> {
    require(&paths.scores(), "run `predict` first")?;
    let rows = scores::read_scores(&paths.scores())?;
    let (validation, test) = scores::partition(&rows);

    let calibration: Vec<f64> = validation
        .iter()
        .filter(|r| r.point > config.epsilon)
        .filter_map(|r| r.interval(config.level).rwidth)
        .collect();
    let thresholds =
        calibrate_thresholds(&calibration, config.profiles.p_low, config.profiles.p_high)
            .context("calibrating uncertainty profiles on the validation rows")?;
    write_json(&paths.thresholds(), &thresholds)?;

    let file = File::create(paths.assignments())?;
    let mut writer = csv::Writer::from_writer(BufWriter::new(file));
    writer.write_record(["instance_id", "case_id", "activity", "rwidth", "profile"])?;
    for row in &test {
        let rwidth = row.interval(config.level).rwidth.filter(|_| row.point > config.epsilon);
        let label = match rwidth {
            Some(value) => assign_profile(value, &thresholds)?.to_string(),
            None => "unassigned".to_string(),
        };
        writer.write_record([
            row.instance_id.as_str(),
            row.case_id.as_str(),
            row.activity.as_str(),
            &rwidth.map(|v| v.to_string()).unwrap_or_default(),
            &label,
        ])?;
    }
    writer.flush()?;

    let actual: Vec<f64> = test.iter().map(|r| r.actual_minutes).collect();
    let intervals: Vec<PredictionInterval> =
        test.iter().map(|r| r.interval(config.level)).collect();
    let report = per_profile_report(&actual, &intervals, &thresholds, config.epsilon)
        .context("computing per-profile metrics on the test rows")?;
    write_json(&paths.profile_report(), &ProfileArtifact { thresholds, report })?;
    Ok(vec![
        "thresholds.json".to_string(),
        "assignments.csv".to_string(),
        "profiles.json".to_string(),
    ])
}

#[derive(Debug, Serialize, Deserialize)]
struct ExplainSummary {
    n_instances: usize,
    n_features: usize,
    budget: usize,
    coalitions_used: usize,
    exact: bool,
    max_width_check_gap: f64,
}

pub fn explain(config: &PipelineConfig, paths: &Paths) -> anyhow::Result<Vec<String>> {
    let (model, schema) = load_model(paths)?;
    let split = resplit(config, paths)?;
    if split.schema.hash_hex() != schema.hash_hex() {
        anyhow::bail!(
            "the log no longer matches schema.json; rerun `split` and `train` before `explain`"
        );
    }
    let groups = FeatureGroups::from_schema(&schema)?;
    let background = BackgroundSet::sample_from_dataset(
        &split.train,
        config.explain.background,
        derive_seed_str(config.seed, "background"),
    )?;
    let targets = config.explain.parsed_targets().map_err(usage)?;
    let n = split.test.len().min(config.explain.instances);
    if n == 0 {
        anyhow::bail!("there are no test instances to explain");
    }
    let budget = config.explain.effective_budget(groups.m());

    let file = File::create(paths.explanations())?;
    let mut writer = csv::Writer::from_writer(BufWriter::new(file));
    writer.write_record([
        "instance_id",
        "target",
        "feature",
        "feature_value",
        "phi",
        "intercept",
        "fx",
        "exact",
    ])?;
    let mut max_gap = 0.0f64;
    let mut coalitions_used = 0;
    let mut exact = true;
    for instance in split.test.instances.iter().take(n) {
        let x = instance.features.as_slice();
        let id = instance.id();
        let result = explain_instance(
            &model,
            x,
            config.level,
            &targets,
            &groups,
            &background,
            budget,
            derive_seed_str(config.seed, &format!("explain/{id}")),
        )
        .with_context(|| format!("explaining {id}"))?;
        max_gap = max_gap.max(result.width_check_gap);
        let values = schema.original_values(x)?;
        for explanation in &result.explanations {
            coalitions_used = explanation.coalitions_used;
            exact &= explanation.exact;
            for (g, phi) in explanation.phi.iter().enumerate() {
                writer.write_record([
                    id.as_str(),
                    &explanation.target.to_string(),
                    groups.names[g].as_str(),
                    &values[g].to_string(),
                    &phi.to_string(),
                    &explanation.intercept.to_string(),
                    &explanation.fx.to_string(),
                    if explanation.exact { "true" } else { "false" },
                ])?;
            }
        }
    }
    writer.flush()?;
    write_json(
        &paths.explain_summary(),
        &ExplainSummary {
            n_instances: n,
            n_features: groups.m(),
            budget,
            coalitions_used,
            exact,
            max_width_check_gap: max_gap,
        },
    )?;
    info!(
        "explained {n} instances over {} feature groups (budget {budget}, max width gap {max_gap:.2e})",
        groups.m()
    );
    Ok(vec![
        "explanations.csv".to_string(),
        "explain_summary.json".to_string(),
    ])
}

#[derive(Debug, Deserialize)]
struct ExplanationRow {
    instance_id: String,
    target: String,
    feature: String,
    feature_value: String,
    phi: f64,
    intercept: f64,
    fx: f64,
    exact: bool,
}

/// Rebuilds per-instance explanations (and the original feature values)
/// from the explanations table, grouped by target.
fn rebuild_explanations(
    rows: &[ExplanationRow],
) -> BTreeMap<String, (Vec<Explanation>, Vec<Vec<FeatureValue>>)> {
    let mut grouped: BTreeMap<String, (Vec<Explanation>, Vec<Vec<FeatureValue>>)> =
        BTreeMap::new();
    let mut current: Option<(String, String, Explanation, Vec<FeatureValue>)> = None;
    let flush = |slot: &mut Option<(String, String, Explanation, Vec<FeatureValue>)>,
                 grouped: &mut BTreeMap<String, (Vec<Explanation>, Vec<Vec<FeatureValue>>)>| {
        if let Some((_, target, explanation, values)) = slot.take() {
            let entry = grouped.entry(target).or_default();
            entry.0.push(explanation);
            entry.1.push(values);
        }
    };
    for row in rows {
        let key_changed = current
            .as_ref()
            .is_none_or(|(id, target, ..)| *id != row.instance_id || *target != row.target);
        if key_changed {
            flush(&mut current, &mut grouped);
            let target: ExplanationTarget = match row.target.parse() {
                Ok(t) => t,
                Err(_) => continue,
            };
            current = Some((
                row.instance_id.clone(),
                row.target.clone(),
                Explanation {
                    target,
                    feature_names: Vec::new(),
                    intercept: row.intercept,
                    phi: Vec::new(),
                    fx: row.fx,
                    coalitions_used: 0,
                    exact: row.exact,
                },
                Vec::new(),
            ));
        }
        if let Some((_, _, explanation, values)) = current.as_mut() {
            explanation.feature_names.push(row.feature.clone());
            explanation.phi.push(row.phi);
            values.push(match row.feature_value.parse::<f64>() {
                Ok(v) => FeatureValue::Numeric(v),
                Err(_) => FeatureValue::Categorical(row.feature_value.clone()),
            });
        }
    }
    flush(&mut current, &mut grouped);
    grouped
}

fn numeric_color(values: &[FeatureValue]) -> Vec<Option<f64>> {
    let numerics: Vec<Option<f64>> = values
        .iter()
        .map(|v| match v {
            FeatureValue::Numeric(x) => Some(*x),
            FeatureValue::Categorical(_) => None,
        })
        .collect();
    let present: Vec<f64> = numerics.iter().copied().flatten().collect();
    let (lo, hi) = present
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let range = (hi - lo).max(1e-12);
    numerics
        .into_iter()
        .map(|v| v.map(|x| (x - lo) / range))
        .collect()
}

pub fn report(config: &PipelineConfig, paths: &Paths) -> anyhow::Result<Vec<String>> {
    require(&paths.explanations(), "run `explain` first")?;
    let file = File::open(paths.explanations())?;
    let mut reader = csv::Reader::from_reader(BufReader::new(file));
    let rows: Vec<ExplanationRow> = reader
        .deserialize()
        .collect::<Result<_, _>>()
        .context("parsing explanations.csv")?;
    if rows.is_empty() {
        anyhow::bail!("explanations.csv is empty");
    }
    let grouped = rebuild_explanations(&rows);
    let summary_target = config
        .explain
        .parsed_summary_target()
        .map_err(usage)?;
    let summary_key = summary_target.to_string();
    let (summary_explanations, summary_values) = grouped
        .get(&summary_key)
        .ok_or_else(|| {
            usage(format!(
                "explanations.csv has no rows for target {summary_key:?}; \
                 add it to explain.targets and rerun `explain`"
            ))
        })?;

    // Importance: every explained target goes into the CSV; the summary
    // target drives the chart.
    let importance_file = File::create(paths.importance_csv())?;
    let mut writer = csv::Writer::from_writer(BufWriter::new(importance_file));
    writer.write_record(["target", "rank", "feature", "mean_abs_phi"])?;
    for (target, (explanations, _)) in &grouped {
        let importance = global_importance(explanations)?;
        for (rank, (feature, value)) in importance.iter().enumerate() {
            writer.write_record([
                target.as_str(),
                &(rank + 1).to_string(),
                feature.as_str(),
                &value.to_string(),
            ])?;
        }
    }
    writer.flush()?;

    let importance = global_importance(summary_explanations)?;
    let top = config.explain.top_features;
    let bars: Vec<(String, f64)> = importance.iter().take(top).cloned().collect();
    fs::write(
        paths.importance_svg(),
        plots::bar_chart(
            &format!("Mean |phi| on the {summary_key} target"),
            "mean |phi| (minutes)",
            &bars,
        ),
    )?;

    // Summary: per-instance attributions of the top features.
    let points = summary_points(summary_explanations, summary_values, top)?;
    let summary_file = File::create(paths.summary_csv())?;
    let mut writer = csv::Writer::from_writer(BufWriter::new(summary_file));
    writer.write_record(["feature", "phi", "value"])?;
    for p in &points {
        writer.write_record([p.feature.as_str(), &p.phi.to_string(), &p.value.to_string()])?;
    }
    writer.flush()?;
    let mut swarm: Vec<(String, Vec<Dot>)> = Vec::new();
    for (feature, _) in importance.iter().take(top) {
        let of_feature: Vec<&proctime_core::shap::SummaryPoint> =
            points.iter().filter(|p| &p.feature == feature).collect();
        let colors = numeric_color(
            &of_feature.iter().map(|p| p.value.clone()).collect::<Vec<_>>(),
        );
        swarm.push((
            feature.clone(),
            of_feature
                .iter()
                .zip(colors)
                .map(|(p, color)| Dot { x: p.phi, y: 0.0, color })
                .collect(),
        ));
    }
    fs::write(
        paths.summary_svg(),
        plots::beeswarm(
            &format!("Attribution summary ({summary_key} target)"),
            "phi (minutes)",
            &swarm,
        ),
    )?;

    // Dependence: configured feature pair, or the two most important ones.
    let feature_names = &summary_explanations[0].feature_names;
    let fallback = |idx: usize| importance.get(idx).map(|(name, _)| name.clone());
    let primary = config
        .explain
        .dependence_primary
        .clone()
        .filter(|name| feature_names.contains(name))
        .or_else(|| fallback(0))
        .ok_or_else(|| usage("no feature available for the dependence report"))?;
    let color = config
        .explain
        .dependence_color
        .clone()
        .filter(|name| feature_names.contains(name))
        .or_else(|| fallback(1))
        .unwrap_or_else(|| primary.clone());
    let dependence = dependence_points(summary_explanations, summary_values, &primary, &color)?;
    let dependence_file = File::create(paths.dependence_csv())?;
    let mut writer = csv::Writer::from_writer(BufWriter::new(dependence_file));
    writer.write_record(["feature", "value", "phi", "color_feature", "color_value"])?;
    for p in &dependence {
        writer.write_record([
            primary.as_str(),
            &p.primary.to_string(),
            &p.phi.to_string(),
            color.as_str(),
            &p.color.to_string(),
        ])?;
    }
    writer.flush()?;
    // Categorical primaries plot at their ordinal position among the levels.
    let mut levels: Vec<String> = dependence
        .iter()
        .filter_map(|p| match &p.primary {
            FeatureValue::Categorical(s) => Some(s.clone()),
            FeatureValue::Numeric(_) => None,
        })
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    levels.sort();
    let color_scale = numeric_color(
        &dependence.iter().map(|p| p.color.clone()).collect::<Vec<_>>(),
    );
    let dots: Vec<Dot> = dependence
        .iter()
        .zip(color_scale)
        .map(|(p, c)| Dot {
            x: match &p.primary {
                FeatureValue::Numeric(v) => *v,
                FeatureValue::Categorical(s) => {
                    levels.iter().position(|l| l == s).unwrap_or(0) as f64
                }
            },
            y: p.phi,
            color: c,
        })
        .collect();
    fs::write(
        paths.dependence_svg(),
        plots::scatter(
            &format!("phi of {primary} colored by {color} ({summary_key} target)"),
            &primary,
            "phi (minutes)",
            &dots,
        ),
    )?;

    Ok(vec![
        "importance.csv".to_string(),
        "importance.svg".to_string(),
        "summary.csv".to_string(),
        "summary.svg".to_string(),
        "dependence.csv".to_string(),
        "dependence.svg".to_string(),
    ])
}

/// Returns the datasets exported by `split` for other tooling; used by
/// tests to confirm the write-only exports stay faithful to the re-derived
/// split.
pub fn exported_dataset(paths: &Paths, block: &str) -> anyhow::Result<Vec<Vec<f64>>> {
    let file = File::open(paths.dataset_csv(block))?;
    let mut reader = csv::Reader::from_reader(BufReader::new(file));
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        rows.push(
            record
                .iter()
                .map(|v| v.parse::<f64>())
                .collect::<Result<Vec<f64>, _>>()?,
        );
    }
    Ok(rows)
}
