//! Uncertainty profiles from relative interval widths.
//!
//! The relative width `rwidth = (upper - lower) / point` of a prediction
//! interval is a unit-free uncertainty signal. Calibration takes the rwidth
//! distribution of a validation block and records two percentile cut points;
//! assignment then buckets any instance into a Low, Medium, or High
//! uncertainty profile. Values exactly on a cut point are Medium, so Low and
//! High are reserved for strictly extreme instances.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{
    interval_metrics, point_metrics, IntervalMetrics, MetricsError, PointMetrics,
};
use crate::qrf::PredictionInterval;

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("calibration needs at least {MIN_CALIBRATION} rwidth values, got {0}")]
    TooFewInstances(usize),
    #[error("percentiles must satisfy 0 < p_low < p_high < 100, got {p_low} and {p_high}")]
    InvalidPercentiles { p_low: f64, p_high: f64 },
    #[error("rwidth must be finite and non-negative, got {0}")]
    BadRwidth(f64),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

pub const MIN_CALIBRATION: usize = 4;

/// Uncertainty bucket of one instance; ordered from narrow to wide.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum UncertaintyProfile {
    Low,
    Medium,
    High,
}

impl std::fmt::Display for UncertaintyProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            UncertaintyProfile::Low => "low",
            UncertaintyProfile::Medium => "medium",
            UncertaintyProfile::High => "high",
        })
    }
}

pub const ALL_PROFILES: [UncertaintyProfile; 3] = [
    UncertaintyProfile::Low,
    UncertaintyProfile::Medium,
    UncertaintyProfile::High,
];

/// Calibrated rwidth cut points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileThresholds {
    pub p_low: f64,
    pub p_high: f64,
    pub low_cut: f64,
    pub high_cut: f64,
    pub n_calibration: usize,
}

/// Percentile with linear interpolation between order statistics: rank
/// `p / 100 * (n - 1)` of the sorted values.
fn percentile_linear(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let rank = p / 100.0 * (n - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    if lo == hi {
        return sorted[lo];
    }
    let frac = rank - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Derives profile cut points from the rwidth distribution of a calibration
/// block (typically the validation block).
pub fn calibrate_thresholds(
    rwidths: &[f64],
    p_low: f64,
    p_high: f64,
) -> Result<ProfileThresholds, ProfileError> {
    if !(p_low > 0.0 && p_low < p_high && p_high < 100.0) {
        return Err(ProfileError::InvalidPercentiles { p_low, p_high });
    }
    if rwidths.len() < MIN_CALIBRATION {
        return Err(ProfileError::TooFewInstances(rwidths.len()));
    }
    if let Some(&bad) = rwidths.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(ProfileError::BadRwidth(bad));
    }
    let mut sorted = rwidths.to_vec();
    sorted.sort_by(f64::total_cmp);
    let low_cut = percentile_linear(&sorted, p_low);
    let high_cut = percentile_linear(&sorted, p_high);
    debug_assert!(low_cut <= high_cut);
    Ok(ProfileThresholds {
        p_low,
        p_high,
        low_cut,
        high_cut,
        n_calibration: rwidths.len(),
    })
}

/// Buckets one rwidth value: strictly below the low cut is Low, strictly
/// above the high cut is High, everything else (cut points included) Medium.
pub fn assign_profile(
    rwidth: f64,
    thresholds: &ProfileThresholds,
) -> Result<UncertaintyProfile, ProfileError> {
    if !rwidth.is_finite() || rwidth < 0.0 {
        return Err(ProfileError::BadRwidth(rwidth));
    }
    Ok(if rwidth < thresholds.low_cut {
        UncertaintyProfile::Low
    } else if rwidth > thresholds.high_cut {
        UncertaintyProfile::High
    } else {
        UncertaintyProfile::Medium
    })
}

/// Metrics of the instances assigned to one profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSlice {
    pub n: usize,
    pub share: f64,
    /// Absent when the profile holds no instances.
    pub point: Option<PointMetrics>,
    pub interval: Option<IntervalMetrics>,
}

/// Per-profile metric report over a scored set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerProfileReport {
    pub profiles: BTreeMap<UncertaintyProfile, ProfileSlice>,
    /// Instances without a usable rwidth (point prediction at or below
    /// epsilon); they belong to no profile.
    pub n_unassigned: usize,
    pub n_total: usize,
}

/// Assigns every scored instance to a profile and computes point and
/// interval metrics per profile. Instances whose point prediction is at or
/// below `epsilon` are counted as unassigned.
pub fn per_profile_report(
    actual: &[f64],
    intervals: &[PredictionInterval],
    thresholds: &ProfileThresholds,
    epsilon: f64,
) -> Result<PerProfileReport, ProfileError> {
    if actual.len() != intervals.len() {
        return Err(MetricsError::LengthMismatch {
            left: actual.len(),
            right: intervals.len(),
        }
        .into());
    }
    if actual.is_empty() {
        return Err(MetricsError::EmptyInput.into());
    }

    let mut buckets: BTreeMap<UncertaintyProfile, Vec<usize>> = BTreeMap::new();
    let mut n_unassigned = 0usize;
    for (i, iv) in intervals.iter().enumerate() {
        match iv.rwidth {
            Some(rw) if iv.point > epsilon => {
                buckets
                    .entry(assign_profile(rw, thresholds)?)
                    .or_default()
                    .push(i);
            }
            _ => n_unassigned += 1,
        }
    }

    let n_total = actual.len();
    let mut profiles = BTreeMap::new();
    for profile in ALL_PROFILES {
        let members = buckets.get(&profile).map(Vec::as_slice).unwrap_or(&[]);
        let slice = if members.is_empty() {
            ProfileSlice {
                n: 0,
                share: 0.0,
                point: None,
                interval: None,
            }
        } else {
            let a: Vec<f64> = members.iter().map(|&i| actual[i]).collect();
            let ivs: Vec<PredictionInterval> =
                members.iter().map(|&i| intervals[i]).collect();
            let points: Vec<f64> = ivs.iter().map(|iv| iv.point).collect();
            ProfileSlice {
                n: members.len(),
                share: members.len() as f64 / n_total as f64,
                point: Some(point_metrics(&a, &points)?),
                interval: Some(interval_metrics(&a, &ivs, epsilon)?),
            }
        };
        profiles.insert(profile, slice);
    }

    Ok(PerProfileReport {
        profiles,
        n_unassigned,
        n_total,
    })
}
