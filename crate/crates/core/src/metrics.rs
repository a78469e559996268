//! Point and interval quality metrics.
//!
//! Point predictions are scored with RMSE and MAE. Prediction intervals are
//! scored with PICP (share of actuals inside the closed interval), MPIW
//! (mean interval width), and MRPIW (mean relative interval width, where each
//! width is divided by the point prediction of the same instance). MRPIW
//! skips instances whose point prediction is not safely positive; the number
//! of skipped instances is reported alongside the value.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qrf::PredictionInterval;

/// Instances with a point prediction at or below this value are excluded
/// from MRPIW, since dividing by a vanishing prediction is meaningless.
pub const DEFAULT_RWIDTH_EPSILON: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("metrics input is empty")]
    EmptyInput,
    #[error("length mismatch: {left} actuals vs {right} predictions")]
    LengthMismatch { left: usize, right: usize },
    #[error("epsilon must be positive and finite, got {0}")]
    InvalidEpsilon(f64),
    #[error("every instance was excluded from MRPIW (no point prediction above epsilon)")]
    AllExcluded,
}

/// RMSE and MAE over a scored set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointMetrics {
    pub rmse: f64,
    pub mae: f64,
    pub n: usize,
}

/// Interval coverage and width metrics over a scored set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalMetrics {
    pub picp: f64,
    pub mpiw: f64,
    pub mrpiw: f64,
    pub n: usize,
    /// Instances excluded from MRPIW because the point prediction was at or
    /// below epsilon.
    pub n_excluded_rwidth: usize,
}

/// Where the misses fall: share of actuals below the lower boundary and
/// above the upper boundary, both unconditionally and conditional on a miss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageBreakdown {
    pub n: usize,
    pub below_count: usize,
    pub above_count: usize,
    pub below_share: f64,
    pub above_share: f64,
    /// Share of misses that fall below the interval; absent when nothing
    /// missed.
    pub conditional_below: Option<f64>,
    pub conditional_above: Option<f64>,
}

fn check_lengths(actual: usize, predicted: usize) -> Result<(), MetricsError> {
    if actual != predicted {
        return Err(MetricsError::LengthMismatch {
            left: actual,
            right: predicted,
        });
    }
    if actual == 0 {
        return Err(MetricsError::EmptyInput);
    }
    Ok(())
}

/// Computes RMSE and MAE of `predicted` against `actual`.
pub fn point_metrics(actual: &[f64], predicted: &[f64]) -> Result<PointMetrics, MetricsError> {
    check_lengths(actual.len(), predicted.len())?;
    let n = actual.len() as f64;
    let mut sq = 0.0;
    let mut abs = 0.0;
    for (a, p) in actual.iter().zip(predicted) {
        let d = a - p;
        sq += d * d;
        abs += d.abs();
    }
    Ok(PointMetrics {
        rmse: (sq / n).sqrt(),
        mae: abs / n,
        n: actual.len(),
    })
}

/// Computes PICP, MPIW, and MRPIW for `intervals` against `actual`.
///
/// Containment uses the closed interval: an actual exactly on a boundary
/// counts as covered. MRPIW averages `(upper - lower) / point` over the
/// instances whose point prediction exceeds `epsilon`; if no instance
/// qualifies the result is [`MetricsError::AllExcluded`].
pub fn interval_metrics(
    actual: &[f64],
    intervals: &[PredictionInterval],
    epsilon: f64,
) -> Result<IntervalMetrics, MetricsError> {
    check_lengths(actual.len(), intervals.len())?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(MetricsError::InvalidEpsilon(epsilon));
    }
    let n = actual.len() as f64;
    let mut covered = 0usize;
    let mut width_sum = 0.0;
    let mut rwidth_sum = 0.0;
    let mut rwidth_n = 0usize;
    for (a, iv) in actual.iter().zip(intervals) {
        if *a >= iv.lower && *a <= iv.upper {
            covered += 1;
        }
        let width = iv.upper - iv.lower;
        width_sum += width;
        if iv.point > epsilon {
            rwidth_sum += width / iv.point;
            rwidth_n += 1;
        }
    }
    if rwidth_n == 0 {
        return Err(MetricsError::AllExcluded);
    }
    Ok(IntervalMetrics {
        picp: covered as f64 / n,
        mpiw: width_sum / n,
        mrpiw: rwidth_sum / rwidth_n as f64,
        n: actual.len(),
        n_excluded_rwidth: actual.len() - rwidth_n,
    })
}

/// Splits interval misses into below-lower and above-upper shares.
pub fn coverage_breakdown(
    actual: &[f64],
    intervals: &[PredictionInterval],
) -> Result<CoverageBreakdown, MetricsError> {
    check_lengths(actual.len(), intervals.len())?;
    let n = actual.len();
    let mut below = 0usize;
    let mut above = 0usize;
    for (a, iv) in actual.iter().zip(intervals) {
        if *a < iv.lower {
            below += 1;
        } else if *a > iv.upper {
            above += 1;
        }
    }
    let misses = below + above;
    Ok(CoverageBreakdown {
        n,
        below_count: below,
        above_count: above,
        below_share: below as f64 / n as f64,
        above_share: above as f64 / n as f64,
        conditional_below: (misses > 0).then(|| below as f64 / misses as f64),
        conditional_above: (misses > 0).then(|| above as f64 / misses as f64),
    })
}
