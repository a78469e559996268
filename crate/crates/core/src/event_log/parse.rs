//! CSV parsing and writing of event logs.
//!
//! Expected header: `case_id,activity,t_start,t_complete` followed by the
//! attribute columns declared in the [`AttributeSchema`]. Timestamps are
//! either unix seconds or RFC 3339 (`2024-05-01T08:30:00+02:00`). Undeclared
//! extra columns are ignored. Rows are grouped into traces by case id (in
//! order of first appearance) and each trace is sorted by start time.

use std::io;

use chrono::DateTime;
use indexmap::IndexMap;
use thiserror::Error;

use super::{AttrKind, AttrValue, AttributeSchema, Event, EventLog, Trace};

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("required column {0:?} is missing from the header")]
    MissingColumn(String),
    #[error("row {row}: bad timestamp {value:?} in column {column:?}")]
    BadTimestamp {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}: completion {t_complete} precedes start {t_start}")]
    CompletionBeforeStart {
        row: usize,
        t_start: i64,
        t_complete: i64,
    },
    #[error("row {row}: column {column:?} holds {value:?}, expected a finite number")]
    BadNumber {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}: column {column:?} is empty")]
    EmptyField { row: usize, column: String },
    #[error("log contains no events")]
    EmptyLog,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

const REQUIRED: [&str; 4] = ["case_id", "activity", "t_start", "t_complete"];

fn parse_timestamp(value: &str) -> Option<i64> {
    let value = value.trim();
    if let Ok(secs) = value.parse::<i64>() {
        return Some(secs);
    }
    DateTime::parse_from_rfc3339(value)
        .ok()
        .map(|dt| dt.timestamp())
}

/// Parses an event log from CSV, validating it against `schema`.
pub fn parse_csv<R: io::Read>(reader: R, schema: &AttributeSchema) -> Result<EventLog, ParseError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let index_of = |name: &str| headers.iter().position(|h| h == name);

    let mut required = [0usize; 4];
    for (slot, name) in required.iter_mut().zip(REQUIRED) {
        *slot = index_of(name).ok_or_else(|| ParseError::MissingColumn(name.to_string()))?;
    }
    let [case_col, activity_col, start_col, complete_col] = required;

    let mut attr_cols = Vec::with_capacity(schema.columns.len());
    for (name, decl) in &schema.columns {
        let col = index_of(name).ok_or_else(|| ParseError::MissingColumn(name.clone()))?;
        attr_cols.push((name.clone(), decl.kind, col));
    }

    let non_empty = |row: usize, column: &str, value: &str| -> Result<String, ParseError> {
        if value.is_empty() {
            Err(ParseError::EmptyField {
                row,
                column: column.to_string(),
            })
        } else {
            Ok(value.to_string())
        }
    };

    let mut by_case: IndexMap<String, Vec<Event>> = IndexMap::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row = i + 1;

        let case_id = non_empty(row, "case_id", &record[case_col])?;
        let activity = non_empty(row, "activity", &record[activity_col])?;

        let timestamp = |col: usize, column: &str| -> Result<i64, ParseError> {
            parse_timestamp(&record[col]).ok_or_else(|| ParseError::BadTimestamp {
                row,
                column: column.to_string(),
                value: record[col].to_string(),
            })
        };
        let t_start = timestamp(start_col, "t_start")?;
        let t_complete = timestamp(complete_col, "t_complete")?;
        if t_complete < t_start {
            return Err(ParseError::CompletionBeforeStart {
                row,
                t_start,
                t_complete,
            });
        }

        let mut attributes = IndexMap::with_capacity(attr_cols.len());
        for (name, kind, col) in &attr_cols {
            let raw = non_empty(row, name, &record[*col])?;
            let value = match kind {
                AttrKind::Numeric => {
                    let parsed: f64 = raw.parse().map_err(|_| ParseError::BadNumber {
                        row,
                        column: name.clone(),
                        value: raw.clone(),
                    })?;
                    if !parsed.is_finite() {
                        return Err(ParseError::BadNumber {
                            row,
                            column: name.clone(),
                            value: raw,
                        });
                    }
                    AttrValue::Numeric(parsed)
                }
                AttrKind::Categorical => AttrValue::Categorical(raw),
            };
            attributes.insert(name.clone(), value);
        }

        by_case.entry(case_id.clone()).or_default().push(Event {
            case_id,
            activity,
            t_start,
            t_complete,
            attributes,
        });
    }

    if by_case.is_empty() {
        return Err(ParseError::EmptyLog);
    }

    let traces = by_case
        .into_iter()
        .map(|(case_id, events)| Trace::new(case_id, events))
        .collect();
    Ok(EventLog {
        traces,
        schema: schema.clone(),
    })
}

/// Writes an event log as CSV in the same layout [`parse_csv`] reads:
/// required columns first, then the schema's attribute columns in order.
/// Timestamps are written as unix seconds, numbers in shortest form that
/// parses back to the same value.
pub fn write_csv<W: io::Write>(log: &EventLog, writer: W) -> Result<(), ParseError> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = REQUIRED.to_vec();
    header.extend(log.schema.columns.keys().map(String::as_str));
    wtr.write_record(&header)?;

    for trace in &log.traces {
        for event in &trace.events {
            let mut record = vec![
                event.case_id.clone(),
                event.activity.clone(),
                event.t_start.to_string(),
                event.t_complete.to_string(),
            ];
            for name in log.schema.columns.keys() {
                let cell = match event.attributes.get(name) {
                    Some(AttrValue::Numeric(v)) => v.to_string(),
                    Some(AttrValue::Categorical(s)) => s.clone(),
                    None => String::new(),
                };
                record.push(cell);
            }
            wtr.write_record(&record)?;
        }
    }
    wtr.flush()?;
    Ok(())
}
