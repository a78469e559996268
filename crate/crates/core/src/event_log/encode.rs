//! Feature encoding: from traces to fixed-width numeric vectors.
//!
//! Each event becomes one instance. The encoded layout, fitted on training
//! data only, is:
//!
//! 1. one-hot of the event's activity (`Activity=<a>`, activities sorted),
//! 2. numeric case attributes in declaration order,
//! 3. one-hot per categorical attribute (`<attr>=<level>`, levels sorted),
//! 4. `Event_Position` (1-based index of the event in its trace),
//! 5. `Trace_Length`,
//! 6. one-hot of the previous activity with a `null` level for first events,
//! 7. `MEAN_stat_Processing_Time`, the training mean processing time of the
//!    event's activity (global training mean for unseen activities).
//!
//! Categories unseen during fitting encode as an all-zero group. Columns that
//! belong to the same pre-encoding feature are tracked as a group so that
//! downstream consumers (such as SHAP) can treat them as one unit.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::{AttrKind, AttrValue, AttributeSchema, Trace};

#[derive(Debug, Error)]
pub enum EncodeError {
    #[error("no events to fit on")]
    EmptyInput,
    #[error("event index {index} out of range for a trace of length {len}")]
    EventIndexOutOfRange { index: usize, len: usize },
    #[error("case {case_id}: declared attribute {attribute:?} is missing")]
    MissingAttribute { case_id: String, attribute: String },
    #[error("case {case_id}: attribute {attribute:?} has the wrong kind")]
    WrongKind { case_id: String, attribute: String },
    #[error("feature vector has {got} values, schema expects {expected}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("{rows} rows but {targets} targets")]
    LengthMismatch { rows: usize, targets: usize },
    #[error("target of row {row} is not finite")]
    NonFiniteTarget { row: usize },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Training mean and population standard deviation of the processing time of
/// one activity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityStat {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

/// Per-activity processing-time statistics plus the global training mean,
/// which serves as the fallback for activities not seen during training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityStats {
    pub per_activity: BTreeMap<String, ActivityStat>,
    pub global_mean: f64,
    pub n_observations: usize,
}

impl ActivityStats {
    /// Computes statistics from `(activity, processing time)` observations.
    pub fn from_observations<'a, I>(observations: I) -> Result<Self, EncodeError>
    where
        I: IntoIterator<Item = (&'a str, f64)>,
    {
        let mut grouped: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        let mut total = 0.0;
        let mut n = 0usize;
        for (activity, value) in observations {
            grouped.entry(activity.to_string()).or_default().push(value);
            total += value;
            n += 1;
        }
        if n == 0 {
            return Err(EncodeError::EmptyInput);
        }
        let per_activity = grouped
            .into_iter()
            .map(|(activity, values)| {
                let count = values.len();
                let mean = values.iter().sum::<f64>() / count as f64;
                let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                    / count as f64;
                (
                    activity,
                    ActivityStat {
                        mean,
                        std: var.sqrt(),
                        count,
                    },
                )
            })
            .collect();
        Ok(ActivityStats {
            per_activity,
            global_mean: total / n as f64,
            n_observations: n,
        })
    }

    /// Computes statistics over every event of the given traces.
    pub fn from_traces<'a, I>(traces: I) -> Result<Self, EncodeError>
    where
        I: IntoIterator<Item = &'a Trace>,
    {
        Self::from_observations(traces.into_iter().flat_map(|t| {
            t.events
                .iter()
                .map(|e| (e.activity.as_str(), e.processing_time_minutes()))
        }))
    }

    /// Mean processing time of `activity`, falling back to the global mean
    /// for activities without training observations.
    pub fn mean_minutes(&self, activity: &str) -> f64 {
        self.per_activity
            .get(activity)
            .map_or(self.global_mean, |s| s.mean)
    }
}

/// One pre-encoding feature and the encoded columns it owns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureGroup {
    pub name: String,
    pub columns: Vec<usize>,
}

/// Levels of one categorical attribute observed during fitting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoricalLevels {
    pub name: String,
    pub levels: Vec<String>,
}

/// A fitted feature encoding: which columns exist, in which order, and how
/// they map back to pre-encoding features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodingSchema {
    pub activities: Vec<String>,
    pub numeric_attrs: Vec<String>,
    pub categorical_attrs: Vec<CategoricalLevels>,
    pub columns: Vec<String>,
    pub groups: Vec<FeatureGroup>,
}

pub const COL_EVENT_POSITION: &str = "Event_Position";
pub const COL_TRACE_LENGTH: &str = "Trace_Length";
pub const GROUP_PREV_ACTIVITY: &str = "Prev_Activity";
pub const GROUP_ACTIVITY: &str = "Activity";
pub const COL_MEAN_PROCESSING_TIME: &str = "MEAN_stat_Processing_Time";

impl EncodingSchema {
    /// Fits the encoding on training traces: collects activities and
    /// categorical levels and lays out the encoded columns.
    pub fn fit<'a, I>(traces: I, schema: &AttributeSchema) -> Result<Self, EncodeError>
    where
        I: IntoIterator<Item = &'a Trace> + Clone,
    {
        let mut activities: BTreeSet<String> = BTreeSet::new();
        let mut any = false;
        for trace in traces.clone() {
            for event in &trace.events {
                activities.insert(event.activity.clone());
                any = true;
            }
        }
        if !any {
            return Err(EncodeError::EmptyInput);
        }

        let mut numeric_attrs = Vec::new();
        let mut categorical_names = Vec::new();
        for (name, decl) in &schema.columns {
            match decl.kind {
                AttrKind::Numeric => numeric_attrs.push(name.clone()),
                AttrKind::Categorical => categorical_names.push(name.clone()),
            }
        }

        let mut categorical_attrs = Vec::with_capacity(categorical_names.len());
        for name in &categorical_names {
            let mut levels: BTreeSet<String> = BTreeSet::new();
            for trace in traces.clone() {
                for event in &trace.events {
                    match event.attributes.get(name) {
                        Some(AttrValue::Categorical(level)) => {
                            levels.insert(level.clone());
                        }
                        Some(AttrValue::Numeric(_)) => {
                            return Err(EncodeError::WrongKind {
                                case_id: trace.case_id.clone(),
                                attribute: name.clone(),
                            })
                        }
                        None => {
                            return Err(EncodeError::MissingAttribute {
                                case_id: trace.case_id.clone(),
                                attribute: name.clone(),
                            })
                        }
                    }
                }
            }
            categorical_attrs.push(CategoricalLevels {
                name: name.clone(),
                levels: levels.into_iter().collect(),
            });
        }

        let activities: Vec<String> = activities.into_iter().collect();
        let mut columns = Vec::new();
        let mut groups = Vec::new();
        let mut push_group = |name: &str, cols: Vec<String>, columns: &mut Vec<String>| {
            let start = columns.len();
            columns.extend(cols);
            groups.push(FeatureGroup {
                name: name.to_string(),
                columns: (start..columns.len()).collect(),
            });
        };

        push_group(
            GROUP_ACTIVITY,
            activities
                .iter()
                .map(|a| format!("{GROUP_ACTIVITY}={a}"))
                .collect(),
            &mut columns,
        );
        for name in &numeric_attrs {
            push_group(name, vec![name.clone()], &mut columns);
        }
        for cat in &categorical_attrs {
            push_group(
                &cat.name,
                cat.levels
                    .iter()
                    .map(|l| format!("{}={}", cat.name, l))
                    .collect(),
                &mut columns,
            );
        }
        push_group(
            COL_EVENT_POSITION,
            vec![COL_EVENT_POSITION.to_string()],
            &mut columns,
        );
        push_group(
            COL_TRACE_LENGTH,
            vec![COL_TRACE_LENGTH.to_string()],
            &mut columns,
        );
        push_group(
            GROUP_PREV_ACTIVITY,
            std::iter::once(format!("{GROUP_PREV_ACTIVITY}=null"))
                .chain(
                    activities
                        .iter()
                        .map(|a| format!("{GROUP_PREV_ACTIVITY}={a}")),
                )
                .collect(),
            &mut columns,
        );
        push_group(
            COL_MEAN_PROCESSING_TIME,
            vec![COL_MEAN_PROCESSING_TIME.to_string()],
            &mut columns,
        );

        Ok(EncodingSchema {
            activities,
            numeric_attrs,
            categorical_attrs,
            columns,
            groups,
        })
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn group(&self, name: &str) -> Option<&FeatureGroup> {
        self.groups.iter().find(|g| g.name == name)
    }

    /// SHA-256 of the canonical JSON form; persisted models carry it so a
    /// model is never applied to features laid out differently.
    pub fn hash_hex(&self) -> String {
        let json = serde_json::to_string(self).expect("schema serializes");
        let digest = Sha256::digest(json.as_bytes());
        let mut out = String::with_capacity(64);
        for byte in digest {
            use fmt::Write;
            write!(out, "{byte:02x}").expect("writing to string");
        }
        out
    }

    /// Decodes an encoded vector back to one value per pre-encoding feature;
    /// one-hot groups without an active column decode as `(unseen)`.
    pub fn original_values(&self, x: &[f64]) -> Result<Vec<FeatureValue>, EncodeError> {
        if x.len() != self.width() {
            return Err(EncodeError::WidthMismatch {
                expected: self.width(),
                got: x.len(),
            });
        }
        Ok(self
            .groups
            .iter()
            .map(|g| {
                let single_numeric =
                    g.columns.len() == 1 && self.columns[g.columns[0]] == g.name;
                if single_numeric {
                    FeatureValue::Numeric(x[g.columns[0]])
                } else {
                    let level = g
                        .columns
                        .iter()
                        .find(|&&c| x[c] > 0.5)
                        .map(|&c| {
                            self.columns[c]
                                .splitn(2, '=')
                                .nth(1)
                                .unwrap_or(&self.columns[c])
                                .to_string()
                        })
                        .unwrap_or_else(|| "(unseen)".to_string());
                    FeatureValue::Categorical(level)
                }
            })
            .collect())
    }
}

/// An original-feature value recovered from an encoded vector.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureValue {
    Numeric(f64),
    Categorical(String),
}

impl fmt::Display for FeatureValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureValue::Numeric(v) => write!(f, "{v}"),
            FeatureValue::Categorical(s) => write!(f, "{s}"),
        }
    }
}

/// A fixed-width encoded feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// Encodes one event of a trace.
pub fn extract_features(
    trace: &Trace,
    event_index: usize,
    stats: &ActivityStats,
    schema: &EncodingSchema,
) -> Result<FeatureVector, EncodeError> {
    let n = trace.len();
    if event_index >= n {
        return Err(EncodeError::EventIndexOutOfRange {
            index: event_index,
            len: n,
        });
    }
    let event = &trace.events[event_index];
    let mut x = vec![0.0; schema.width()];
    let mut group_iter = schema.groups.iter();
    let mut next_group = || group_iter.next().expect("schema has all fixed groups");

    let activity_group = next_group();
    if let Ok(i) = schema.activities.binary_search(&event.activity) {
        x[activity_group.columns[i]] = 1.0;
    }

    for name in &schema.numeric_attrs {
        let group = next_group();
        match event.attributes.get(name) {
            Some(AttrValue::Numeric(v)) => x[group.columns[0]] = *v,
            Some(AttrValue::Categorical(_)) => {
                return Err(EncodeError::WrongKind {
                    case_id: trace.case_id.clone(),
                    attribute: name.clone(),
                })
            }
            None => {
                return Err(EncodeError::MissingAttribute {
                    case_id: trace.case_id.clone(),
                    attribute: name.clone(),
                })
            }
        }
    }

    for cat in &schema.categorical_attrs {
        let group = next_group();
        match event.attributes.get(&cat.name) {
            Some(AttrValue::Categorical(level)) => {
                if let Ok(i) = cat.levels.binary_search(level) {
                    x[group.columns[i]] = 1.0;
                }
            }
            Some(AttrValue::Numeric(_)) => {
                return Err(EncodeError::WrongKind {
                    case_id: trace.case_id.clone(),
                    attribute: cat.name.clone(),
                })
            }
            None => {
                return Err(EncodeError::MissingAttribute {
                    case_id: trace.case_id.clone(),
                    attribute: cat.name.clone(),
                })
            }
        }
    }

    x[next_group().columns[0]] = (event_index + 1) as f64;
    x[next_group().columns[0]] = n as f64;

    let prev_group = next_group();
    if event_index == 0 {
        x[prev_group.columns[0]] = 1.0;
    } else {
        let prev = &trace.events[event_index - 1].activity;
        if let Ok(i) = schema.activities.binary_search(prev) {
            x[prev_group.columns[1 + i]] = 1.0;
        }
    }

    x[next_group().columns[0]] = stats.mean_minutes(&event.activity);

    Ok(FeatureVector { values: x })
}

/// One supervised instance: an encoded event and its processing time.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub case_id: String,
    pub activity: String,
    /// 0-based position of the event in its trace.
    pub event_index: usize,
    pub features: FeatureVector,
    pub target_minutes: f64,
}

impl Instance {
    /// Stable identifier, `<case_id>#<event_index>`.
    pub fn id(&self) -> String {
        format!("{}#{}", self.case_id, self.event_index)
    }
}

/// An encoded, labeled set of instances sharing one schema.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub schema: Arc<EncodingSchema>,
    pub instances: Vec<Instance>,
}

impl Dataset {
    /// Encodes every event of the given traces.
    pub fn build<'a, I>(
        traces: I,
        stats: &ActivityStats,
        schema: Arc<EncodingSchema>,
    ) -> Result<Dataset, EncodeError>
    where
        I: IntoIterator<Item = &'a Trace>,
    {
        let mut instances = Vec::new();
        for trace in traces {
            for event_index in 0..trace.len() {
                let features = extract_features(trace, event_index, stats, &schema)?;
                let event = &trace.events[event_index];
                instances.push(Instance {
                    case_id: trace.case_id.clone(),
                    activity: event.activity.clone(),
                    event_index,
                    features,
                    target_minutes: event.processing_time_minutes(),
                });
            }
        }
        Ok(Dataset { schema, instances })
    }

    /// Adapts an already-numeric matrix as a dataset. Each column becomes a
    /// singleton feature group named `x<index>`; rows are identified as
    /// `row<index>`. Useful for data encoded outside this crate and for
    /// driving the model on synthetic matrices.
    pub fn from_numeric_matrix(rows: &[Vec<f64>], targets: &[f64]) -> Result<Dataset, EncodeError> {
        if rows.len() != targets.len() {
            return Err(EncodeError::LengthMismatch {
                rows: rows.len(),
                targets: targets.len(),
            });
        }
        if rows.is_empty() || rows[0].is_empty() {
            return Err(EncodeError::EmptyInput);
        }
        let width = rows[0].len();
        for row in rows {
            if row.len() != width {
                return Err(EncodeError::WidthMismatch {
                    expected: width,
                    got: row.len(),
                });
            }
        }
        if let Some(row) = targets.iter().position(|t| !t.is_finite()) {
            return Err(EncodeError::NonFiniteTarget { row });
        }
        let columns: Vec<String> = (0..width).map(|i| format!("x{i}")).collect();
        let groups = columns
            .iter()
            .enumerate()
            .map(|(i, name)| FeatureGroup {
                name: name.clone(),
                columns: vec![i],
            })
            .collect();
        let schema = Arc::new(EncodingSchema {
            activities: Vec::new(),
            numeric_attrs: columns.clone(),
            categorical_attrs: Vec::new(),
            columns,
            groups,
        });
        let instances = rows
            .iter()
            .zip(targets)
            .enumerate()
            .map(|(i, (row, target))| Instance {
                case_id: format!("row{i}"),
                activity: "all".to_string(),
                event_index: 0,
                features: FeatureVector { values: row.clone() },
                target_minutes: *target,
            })
            .collect();
        Ok(Dataset { schema, instances })
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn targets(&self) -> Vec<f64> {
        self.instances.iter().map(|i| i.target_minutes).collect()
    }

    pub fn features(&self, i: usize) -> &[f64] {
        self.instances[i].features.as_slice()
    }

    /// Writes the encoded matrix with the target as the last column.
    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<(), EncodeError> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = self.schema.columns.iter().map(String::as_str).collect();
        header.push("target");
        wtr.write_record(&header)?;
        for inst in &self.instances {
            let mut record: Vec<String> =
                inst.features.values.iter().map(f64::to_string).collect();
            record.push(inst.target_minutes.to_string());
            wtr.write_record(&record)?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Writes the instance identity columns that accompany the matrix.
    pub fn write_index_csv<W: io::Write>(&self, writer: W) -> Result<(), EncodeError> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["instance_id", "case_id", "activity", "event_index"])?;
        for inst in &self.instances {
            wtr.write_record([
                inst.id(),
                inst.case_id.clone(),
                inst.activity.clone(),
                inst.event_index.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event_log::Event;
    use indexmap::IndexMap;

    fn event_with(
        case: &str,
        activity: &str,
        t: i64,
        minutes: i64,
        attrs: &[(&str, AttrValue)],
    ) -> Event {
        Event {
            case_id: case.to_string(),
            activity: activity.to_string(),
            t_start: t,
            t_complete: t + minutes * 60,
            attributes: attrs
                .iter()
                .map(|(k, v)| (k.to_string(), v.clone()))
                .collect::<IndexMap<_, _>>(),
        }
    }

    fn sample_traces() -> Vec<Trace> {
        let attrs_a = [
            ("Quantity", AttrValue::Numeric(4.0)),
            ("Resource", AttrValue::Categorical("R2".to_string())),
        ];
        let attrs_b = [
            ("Quantity", AttrValue::Numeric(1.5)),
            ("Resource", AttrValue::Categorical("R1".to_string())),
        ];
        vec![
            Trace::new(
                "C1",
                vec![
                    event_with("C1", "Sawing", 0, 10, &attrs_a),
                    event_with("C1", "Welding", 1000, 20, &attrs_a),
                ],
            ),
            Trace::new("C2", vec![event_with("C2", "Sawing", 2000, 20, &attrs_b)]),
        ]
    }

    fn attr_schema() -> AttributeSchema {
        AttributeSchema::new()
            .numeric("Quantity")
            .categorical("Resource")
    }

    #[test]
    fn stats_use_population_standard_deviation() {
        let stats =
            ActivityStats::from_observations([("Sawing", 10.0), ("Sawing", 20.0)]).unwrap();
        let s = &stats.per_activity["Sawing"];
        assert_eq!(s.mean, 15.0);
        assert_eq!(s.std, 5.0);
        assert_eq!(s.count, 2);
        assert_eq!(stats.global_mean, 15.0);
    }

    #[test]
    fn global_mean_covers_unseen_activities() {
        let stats =
            ActivityStats::from_observations([("Sawing", 10.0), ("Welding", 30.0)]).unwrap();
        assert_eq!(stats.mean_minutes("Sawing"), 10.0);
        assert_eq!(stats.mean_minutes("Painting"), 20.0);
    }

    #[test]
    fn stats_require_observations() {
        assert!(matches!(
            ActivityStats::from_observations(std::iter::empty::<(&str, f64)>()),
            Err(EncodeError::EmptyInput)
        ));
    }

    #[test]
    fn schema_lays_out_columns_in_fixed_order() {
        let traces = sample_traces();
        let enc = EncodingSchema::fit(traces.iter(), &attr_schema()).unwrap();
        assert_eq!(
            enc.columns,
            vec![
                "Activity=Sawing",
                "Activity=Welding",
                "Quantity",
                "Resource=R1",
                "Resource=R2",
                "Event_Position",
                "Trace_Length",
                "Prev_Activity=null",
                "Prev_Activity=Sawing",
                "Prev_Activity=Welding",
                "MEAN_stat_Processing_Time",
            ]
        );
        let names: Vec<&str> = enc.groups.iter().map(|g| g.name.as_str()).collect();
        assert_eq!(
            names,
            vec![
                "Activity",
                "Quantity",
                "Resource",
                "Event_Position",
                "Trace_Length",
                "Prev_Activity",
                "MEAN_stat_Processing_Time",
            ]
        );
        // Groups partition the columns.
        let mut seen = vec![false; enc.width()];
        for g in &enc.groups {
            for &c in &g.columns {
                assert!(!seen[c]);
                seen[c] = true;
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn encoding_sets_expected_values() {
        let traces = sample_traces();
        let schema = attr_schema();
        let enc = EncodingSchema::fit(traces.iter(), &schema).unwrap();
        let stats = ActivityStats::from_traces(traces.iter()).unwrap();

        let first = extract_features(&traces[0], 0, &stats, &enc).unwrap();
        let x = first.as_slice();
        assert_eq!(x[0], 1.0); // Activity=Sawing
        assert_eq!(x[1], 0.0);
        assert_eq!(x[2], 4.0); // Quantity
        assert_eq!(x[3], 0.0); // Resource=R1
        assert_eq!(x[4], 1.0); // Resource=R2
        assert_eq!(x[5], 1.0); // Event_Position
        assert_eq!(x[6], 2.0); // Trace_Length
        assert_eq!(x[7], 1.0); // Prev_Activity=null
        assert_eq!(x[10], 15.0); // mean of Sawing: (10 + 20) / 2

        let second = extract_features(&traces[0], 1, &stats, &enc).unwrap();
        let x = second.as_slice();
        assert_eq!(x[0], 0.0);
        assert_eq!(x[1], 1.0); // Activity=Welding
        assert_eq!(x[5], 2.0);
        assert_eq!(x[7], 0.0);
        assert_eq!(x[8], 1.0); // Prev_Activity=Sawing
        assert_eq!(x[10], 20.0); // only Welding observation
    }

    #[test]
    fn unseen_categories_encode_as_zero_groups() {
        let traces = sample_traces();
        let schema = attr_schema();
        let enc = EncodingSchema::fit(traces.iter(), &schema).unwrap();
        let stats = ActivityStats::from_traces(traces.iter()).unwrap();

        let attrs = [
            ("Quantity", AttrValue::Numeric(9.0)),
            ("Resource", AttrValue::Categorical("R9".to_string())),
        ];
        let unseen = Trace::new(
            "C9",
            vec![
                event_with("C9", "Painting", 0, 5, &attrs),
                event_with("C9", "Sawing", 1000, 5, &attrs),
            ],
        );
        let x0 = extract_features(&unseen, 0, &stats, &enc).unwrap();
        // Unknown activity: activity group all zero, stat falls back to the
        // global mean.
        assert_eq!(&x0.as_slice()[0..2], &[0.0, 0.0]);
        assert_eq!(&x0.as_slice()[3..5], &[0.0, 0.0]); // unknown resource
        assert!((x0.as_slice()[10] - 50.0 / 3.0).abs() < 1e-12);

        // Unknown previous activity also yields an all-zero group.
        let x1 = extract_features(&unseen, 1, &stats, &enc).unwrap();
        assert_eq!(&x1.as_slice()[7..10], &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn missing_and_miskinded_attributes_are_errors() {
        let traces = sample_traces();
        let enc = EncodingSchema::fit(traces.iter(), &attr_schema()).unwrap();
        let stats = ActivityStats::from_traces(traces.iter()).unwrap();

        let bare = Trace::new("C3", vec![event_with("C3", "Sawing", 0, 5, &[])]);
        assert!(matches!(
            extract_features(&bare, 0, &stats, &enc),
            Err(EncodeError::MissingAttribute { attribute, .. }) if attribute == "Quantity"
        ));

        let wrong = Trace::new(
            "C4",
            vec![event_with(
                "C4",
                "Sawing",
                0,
                5,
                &[
                    ("Quantity", AttrValue::Categorical("four".to_string())),
                    ("Resource", AttrValue::Categorical("R1".to_string())),
                ],
            )],
        );
        assert!(matches!(
            extract_features(&wrong, 0, &stats, &enc),
            Err(EncodeError::WrongKind { attribute, .. }) if attribute == "Quantity"
        ));
    }

    #[test]
    fn event_index_is_bounds_checked() {
        let traces = sample_traces();
        let enc = EncodingSchema::fit(traces.iter(), &attr_schema()).unwrap();
        let stats = ActivityStats::from_traces(traces.iter()).unwrap();
        assert!(matches!(
            extract_features(&traces[1], 1, &stats, &enc),
            Err(EncodeError::EventIndexOutOfRange { index: 1, len: 1 })
        ));
    }

    #[test]
    fn schema_hash_tracks_content() {
        let traces = sample_traces();
        let enc = EncodingSchema::fit(traces.iter(), &attr_schema()).unwrap();
        let h1 = enc.hash_hex();
        assert_eq!(h1.len(), 64);
        assert_eq!(h1, enc.hash_hex());

        let other = EncodingSchema::fit(traces.iter(), &AttributeSchema::new()).unwrap();
        assert_ne!(h1, other.hash_hex());
    }

    #[test]
    fn original_values_invert_the_encoding() {
        let traces = sample_traces();
        let enc = EncodingSchema::fit(traces.iter(), &attr_schema()).unwrap();
        let stats = ActivityStats::from_traces(traces.iter()).unwrap();
        let x = extract_features(&traces[0], 1, &stats, &enc).unwrap();
        let values = enc.original_values(x.as_slice()).unwrap();
        assert_eq!(values[0], FeatureValue::Categorical("Welding".to_string()));
        assert_eq!(values[1], FeatureValue::Numeric(4.0));
        assert_eq!(values[2], FeatureValue::Categorical("R2".to_string()));
        assert_eq!(values[3], FeatureValue::Numeric(2.0));
        assert_eq!(values[5], FeatureValue::Categorical("Sawing".to_string()));

        let mut zeroed = x.values.clone();
        for c in &enc.group("Resource").unwrap().columns {
            zeroed[*c] = 0.0;
        }
        let values = enc.original_values(&zeroed).unwrap();
        assert_eq!(values[2], FeatureValue::Categorical("(unseen)".to_string()));

        assert!(matches!(
            enc.original_values(&[0.0]),
            Err(EncodeError::WidthMismatch { .. })
        ));
    }

    #[test]
    fn dataset_builds_one_instance_per_event() {
        let traces = sample_traces();
        let enc = Arc::new(EncodingSchema::fit(traces.iter(), &attr_schema()).unwrap());
        let stats = ActivityStats::from_traces(traces.iter()).unwrap();
        let ds = Dataset::build(traces.iter(), &stats, enc).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.instances[0].id(), "C1#0");
        assert_eq!(ds.instances[1].id(), "C1#1");
        assert_eq!(ds.instances[1].target_minutes, 20.0);
        assert_eq!(ds.targets(), vec![10.0, 20.0, 20.0]);
    }

    #[test]
    fn dataset_csv_has_columns_then_target() {
        let traces = sample_traces();
        let enc = Arc::new(EncodingSchema::fit(traces.iter(), &attr_schema()).unwrap());
        let stats = ActivityStats::from_traces(traces.iter()).unwrap();
        let ds = Dataset::build(traces.iter(), &stats, enc.clone()).unwrap();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        let header = lines.next().unwrap();
        assert!(header.starts_with("Activity=Sawing,"));
        assert!(header.ends_with(",target"));
        assert_eq!(lines.count(), 3);

        let mut buf = Vec::new();
        ds.write_index_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("instance_id,case_id,activity,event_index\n"));
        assert!(text.contains("C1#1,C1,Welding,1\n"));
    }
}
