//! The scores table: one row per validation or test instance with its
//! actual value and predicted interval. Written by `predict`, consumed by
//! `evaluate`, `profile`, and `report`.

use std::fs::File;
use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};

use proctime_core::qrf::PredictionInterval;

pub const SPLIT_VALIDATION: &str = "validation";
pub const SPLIT_TEST: &str = "test";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub split: String,
    pub instance_id: String,
    pub case_id: String,
    pub activity: String,
    pub event_index: usize,
    pub actual_minutes: f64,
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
}

impl ScoreRow {
    /// Rebuilds the interval; `rwidth` is recomputed from the stored floats
    /// and matches the original exactly because CSV round-trips them.
    pub fn interval(&self, level: f64) -> PredictionInterval {
        PredictionInterval::new(self.lower, self.upper, self.point, level)
    }
}

pub fn write_scores(path: &Path, rows: &[ScoreRow]) -> anyhow::Result<()> {
    let file =
        File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut writer = csv::Writer::from_writer(file);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_scores(path: &Path) -> anyhow::Result<Vec<ScoreRow>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut reader = csv::Reader::from_reader(file);
    let mut rows = Vec::new();
    for row in reader.deserialize() {
        rows.push(row.with_context(|| format!("parsing {}", path.display()))?);
    }
    Ok(rows)
}

/// Splits rows into (validation, test) in file order.
pub fn partition(rows: &[ScoreRow]) -> (Vec<&ScoreRow>, Vec<&ScoreRow>) {
    let validation = rows.iter().filter(|r| r.split == SPLIT_VALIDATION).collect();
    let test = rows.iter().filter(|r| r.split == SPLIT_TEST).collect();
    (validation, test)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(split: &str, id: &str, actual: f64) -> ScoreRow {
        ScoreRow {
            split: split.to_string(),
            instance_id: id.to_string(),
            case_id: id.split('#').next().unwrap().to_string(),
            activity: "A01".to_string(),
            event_index: 0,
            actual_minutes: actual,
            point: actual * 1.1 + 0.123456789012345,
            lower: actual * 0.8,
            upper: actual * 1.5,
        }
    }

    #[test]
    fn scores_round_trip_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scores.csv");
        let rows = vec![
            row(SPLIT_VALIDATION, "c1#0", 12.25),
            row(SPLIT_TEST, "c2#1", 96.55),
        ];
        write_scores(&path, &rows).unwrap();
        let back = read_scores(&path).unwrap();
        assert_eq!(back, rows);
        let (validation, test) = partition(&back);
        assert_eq!(validation.len(), 1);
        assert_eq!(test.len(), 1);
        assert_eq!(test[0].instance_id, "c2#1");
    }

    #[test]
    fn interval_reconstruction_keeps_rwidth() {
        let r = row(SPLIT_TEST, "c9#2", 50.0);
        let interval = r.interval(0.9);
        assert_eq!(interval.lower, r.lower);
        assert_eq!(interval.upper, r.upper);
        let rwidth = interval.rwidth.unwrap();
        assert!((rwidth - (r.upper - r.lower) / r.point).abs() < 1e-15);
    }
}
