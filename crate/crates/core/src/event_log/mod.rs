//! Event log model: events, traces, logs, and attribute schemas.
//!
//! An event records one executed activity of one case, with a start and a
//! completion timestamp (unix seconds) and a map of case attributes. A trace
//! is the time-ordered sequence of events of one case, and an event log is a
//! set of traces sharing an attribute schema.
//!
//! The prediction target of every event is its processing time, defined as
//! completion minus start converted to minutes.

mod encode;
mod parse;
mod split;

pub use encode::{
    ActivityStat, ActivityStats, Dataset, EncodeError, EncodingSchema, FeatureGroup, FeatureValue,
    FeatureVector, Instance, extract_features,
};
pub use parse::{parse_csv, write_csv, ParseError};
pub use split::{chronological_split, DatasetSplit, SplitError, SplitRatios};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

/// Kind of a case attribute column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttrKind {
    Numeric,
    Categorical,
}

/// Declaration of one attribute column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttrDecl {
    pub kind: AttrKind,
}

/// Declares which CSV columns beyond the four required ones exist and how
/// each is typed. Column order is meaningful: it fixes the order of encoded
/// features and of columns written back to CSV.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AttributeSchema {
    pub columns: IndexMap<String, AttrDecl>,
}

impl AttributeSchema {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn numeric(mut self, name: &str) -> Self {
        self.columns
            .insert(name.to_string(), AttrDecl { kind: AttrKind::Numeric });
        self
    }

    pub fn categorical(mut self, name: &str) -> Self {
        self.columns
            .insert(name.to_string(), AttrDecl { kind: AttrKind::Categorical });
        self
    }

    pub fn kind_of(&self, name: &str) -> Option<AttrKind> {
        self.columns.get(name).map(|d| d.kind)
    }
}

/// Value of one case attribute on one event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttrValue {
    Numeric(f64),
    Categorical(String),
}

/// One executed activity of one case.
///
/// Invariants: `activity` and `case_id` are non-empty and
/// `t_complete >= t_start`. [`parse_csv`] enforces them on input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub case_id: String,
    pub activity: String,
    /// Start of processing, unix seconds.
    pub t_start: i64,
    /// End of processing, unix seconds.
    pub t_complete: i64,
    pub attributes: IndexMap<String, AttrValue>,
}

impl Event {
    pub fn processing_time_seconds(&self) -> i64 {
        self.t_complete - self.t_start
    }

    /// The prediction target: processing time in minutes.
    pub fn processing_time_minutes(&self) -> f64 {
        self.processing_time_seconds() as f64 / 60.0
    }
}

/// The time-ordered event sequence of one case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub case_id: String,
    pub events: Vec<Event>,
}

impl Trace {
    /// Builds a trace from the events of one case, sorting them by start
    /// time (completion time breaks ties, original order after that).
    ///
    /// Panics if `events` is empty or mentions more than one case id.
    pub fn new(case_id: impl Into<String>, mut events: Vec<Event>) -> Self {
        let case_id = case_id.into();
        assert!(!events.is_empty(), "trace {case_id} has no events");
        assert!(
            events.iter().all(|e| e.case_id == case_id),
            "trace {case_id} contains events of another case"
        );
        events.sort_by_key(|e| (e.t_start, e.t_complete));
        Trace { case_id, events }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Earliest start time of the case; used for chronological ordering.
    pub fn start_time(&self) -> i64 {
        self.events[0].t_start
    }

    /// The prefix of the first `min(i, len)` events, `i >= 1`.
    pub fn prefix(&self, i: usize) -> Trace {
        assert!(i >= 1, "prefix index starts at 1");
        let k = i.min(self.events.len());
        Trace {
            case_id: self.case_id.clone(),
            events: self.events[..k].to_vec(),
        }
    }

    /// The suffix starting at the `i`-th event (1-based), `i >= 1`. Past the
    /// end of the trace it degenerates to the last event alone.
    pub fn suffix(&self, i: usize) -> Trace {
        assert!(i >= 1, "suffix index starts at 1");
        let start = i.min(self.events.len()) - 1;
        Trace {
            case_id: self.case_id.clone(),
            events: self.events[start..].to_vec(),
        }
    }
}

/// A set of traces over a common attribute schema.
#[derive(Debug, Clone, PartialEq)]
pub struct EventLog {
    pub traces: Vec<Trace>,
    pub schema: AttributeSchema,
}

impl EventLog {
    pub fn n_cases(&self) -> usize {
        self.traces.len()
    }

    pub fn n_events(&self) -> usize {
        self.traces.iter().map(Trace::len).sum()
    }

    pub fn events(&self) -> impl Iterator<Item = &Event> {
        self.traces.iter().flat_map(|t| t.events.iter())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn event(case: &str, activity: &str, t_start: i64, t_complete: i64) -> Event {
        Event {
            case_id: case.to_string(),
            activity: activity.to_string(),
            t_start,
            t_complete,
            attributes: IndexMap::new(),
        }
    }

    fn chain(case: &str, n: usize) -> Trace {
        let events = (0..n)
            .map(|i| event(case, &format!("A{i}"), i as i64 * 100, i as i64 * 100 + 50))
            .collect();
        Trace::new(case, events)
    }

    #[test]
    fn processing_time_converts_seconds_to_minutes() {
        let e = event("C1", "Cutting", 1_600_000_000, 1_600_005_793);
        assert_eq!(e.processing_time_seconds(), 5793);
        assert!((e.processing_time_minutes() - 96.55).abs() < 1e-12);
    }

    #[test]
    fn zero_duration_events_are_allowed() {
        let e = event("C1", "Check", 100, 100);
        assert_eq!(e.processing_time_minutes(), 0.0);
    }

    #[test]
    fn traces_sort_events_by_start_time() {
        let t = Trace::new(
            "C1",
            vec![
                event("C1", "B", 200, 250),
                event("C1", "A", 100, 150),
                event("C1", "C", 300, 350),
            ],
        );
        let order: Vec<&str> = t.events.iter().map(|e| e.activity.as_str()).collect();
        assert_eq!(order, ["A", "B", "C"]);
        assert_eq!(t.start_time(), 100);
    }

    #[test]
    fn prefix_clamps_to_trace_length() {
        let t = chain("C1", 4);
        assert_eq!(t.prefix(2).len(), 2);
        assert_eq!(t.prefix(4).len(), 4);
        assert_eq!(t.prefix(9), t);
    }

    #[test]
    fn suffix_starts_at_requested_event() {
        let t = chain("C1", 4);
        assert_eq!(t.suffix(1), t);
        let tail = t.suffix(3);
        assert_eq!(tail.len(), 2);
        assert_eq!(tail.events[0].activity, "A2");
        // Past the end only the last event remains.
        assert_eq!(t.suffix(9).len(), 1);
        assert_eq!(t.suffix(9).events[0].activity, "A3");
    }

    #[test]
    #[should_panic(expected = "prefix index starts at 1")]
    fn prefix_rejects_index_zero() {
        chain("C1", 2).prefix(0);
    }

    #[test]
    fn attribute_schema_round_trips_through_json() {
        let schema = AttributeSchema::new()
            .numeric("Quantity")
            .categorical("Resource");
        let json = serde_json::to_string(&schema).unwrap();
        assert_eq!(
            json,
            r#"{"Quantity":{"kind":"numeric"},"Resource":{"kind":"categorical"}}"#
        );
        let back: AttributeSchema = serde_json::from_str(&json).unwrap();
        assert_eq!(back, schema);
    }

    proptest! {
        #[test]
        fn prefix_and_suffix_partition_the_trace(n in 1usize..20, i in 1usize..20) {
            prop_assume!(i < n);
            let t = chain("C1", n);
            let head = t.prefix(i);
            let tail = t.suffix(i + 1);
            prop_assert_eq!(head.len() + tail.len(), n);
            let mut joined = head.events.clone();
            joined.extend(tail.events.clone());
            prop_assert_eq!(joined, t.events);
        }

        #[test]
        fn prefix_is_monotone_in_i(n in 1usize..20, i in 1usize..25, j in 1usize..25) {
            let t = chain("C1", n);
            let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
            let shorter = t.prefix(lo);
            let longer = t.prefix(hi);
            prop_assert!(shorter.len() <= longer.len());
            prop_assert_eq!(&longer.events[..shorter.len()], &shorter.events[..]);
        }
    }
}
