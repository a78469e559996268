//! Chronological case-level split into train, validation, and test blocks.
//!
//! Cases are ordered by the start time of their first event (case id breaks
//! ties) and cut into three contiguous blocks, so evaluation data is strictly
//! later than training data at the case level. Activity statistics and the
//! feature encoding are fitted on the training block only, then applied to
//! all three blocks.

use std::sync::Arc;

use thiserror::Error;

use super::{ActivityStats, Dataset, EncodeError, EncodingSchema, EventLog, Trace};

#[derive(Debug, Error)]
pub enum SplitError {
    #[error("split ratios must be positive and sum to 1, got {train}/{validation}/{test}")]
    BadRatios {
        train: f64,
        validation: f64,
        test: f64,
    },
    #[error("need at least 3 cases to split, got {0}")]
    TooFewCases(usize),
    #[error(transparent)]
    Encode(#[from] EncodeError),
}

/// Fractions of cases per block. Must be positive and sum to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl SplitRatios {
    pub fn new(train: f64, validation: f64, test: f64) -> Result<Self, SplitError> {
        let all_positive = train > 0.0 && validation > 0.0 && test > 0.0;
        let sums_to_one = (train + validation + test - 1.0).abs() <= 1e-9;
        if !all_positive || !sums_to_one {
            return Err(SplitError::BadRatios {
                train,
                validation,
                test,
            });
        }
        Ok(SplitRatios {
            train,
            validation,
            test,
        })
    }
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.85,
            validation: 0.075,
            test: 0.075,
        }
    }
}

/// The three encoded blocks plus the training-derived statistics and schema.
#[derive(Debug, Clone)]
pub struct DatasetSplit {
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Dataset,
    pub stats: ActivityStats,
    pub schema: Arc<EncodingSchema>,
}

/// Ceiling of `ratio * n` that tolerates floating-point droop: products
/// within 1e-9 of an integer count as that integer.
fn block_size(ratio: f64, n: usize) -> usize {
    let x = ratio * n as f64;
    let nearest = x.round();
    if (x - nearest).abs() < 1e-9 {
        nearest as usize
    } else {
        x.ceil() as usize
    }
}

/// Splits a log chronologically at the case level and encodes each block.
///
/// Block sizes are the ceiling of `ratio * n_cases`, clamped so every block
/// keeps at least one case; the test block takes the remainder.
pub fn chronological_split(
    log: &EventLog,
    ratios: &SplitRatios,
) -> Result<DatasetSplit, SplitError> {
    let n = log.traces.len();
    if n < 3 {
        return Err(SplitError::TooFewCases(n));
    }

    let mut order: Vec<&Trace> = log.traces.iter().collect();
    order.sort_by(|a, b| {
        a.start_time()
            .cmp(&b.start_time())
            .then_with(|| a.case_id.cmp(&b.case_id))
    });

    let n_train = block_size(ratios.train, n).clamp(1, n - 2);
    let n_val = block_size(ratios.validation, n).clamp(1, n - n_train - 1);
    let (train_cases, rest) = order.split_at(n_train);
    let (val_cases, test_cases) = rest.split_at(n_val);

    let stats = ActivityStats::from_traces(train_cases.iter().copied())?;
    let schema = Arc::new(EncodingSchema::fit(
        train_cases.iter().copied(),
        &log.schema,
    )?);

    let build = |cases: &[&Trace]| {
        Dataset::build(cases.iter().copied(), &stats, Arc::clone(&schema))
    };
    Ok(DatasetSplit {
        train: build(train_cases)?,
        validation: build(val_cases)?,
        test: build(test_cases)?,
        stats,
        schema,
    })
}
