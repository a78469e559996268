//! KernelSHAP explanations over pre-encoding feature groups.
//!
//! Explanations attribute a model output to the original features, not to
//! individual one-hot columns: a coalition switches whole column groups
//! between the explained instance and a background row. Masked outputs are
//! averaged over the background set, a weighted least squares fit under the
//! Shapley kernel (with the two standard equality constraints) yields the
//! attribution, and when every interior coalition fits the budget the result
//! is exact.
//!
//! [`exact_shapley`] computes the same attribution by direct enumeration of
//! the Shapley sum. It is exponential in the number of features and exists
//! as an independent oracle to verify the kernel path against.
//!
//! [`explain_instance`] ties the explainer to a [`QrfModel`], explaining the
//! point prediction, both interval boundaries, and the interval width in one
//! pass over a shared coalition plan. Because the width response of every
//! coalition is the difference of the boundary responses and the fit is
//! linear in the responses, the width attribution equals the difference of
//! the boundary attributions up to solver precision; the realized gap is
//! reported so callers can check it.

mod coalitions;
mod wls;

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event_log::{Dataset, EncodingSchema, FeatureValue};
use crate::qrf::{QrfError, QrfModel};
use coalitions::{binomial, plan_coalitions};
use wls::WlsTarget;

/// Exact enumeration is capped at this many feature groups.
pub const MAX_EXACT_FEATURES: usize = 20;

#[derive(Debug, Error)]
pub enum ShapError {
    #[error("feature groups are invalid: {0}")]
    BadGroups(String),
    #[error("vector has {got} values, expected {expected}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("background set is empty")]
    EmptyBackground,
    #[error("exact enumeration supports at most {max} feature groups, got {m}")]
    TooManyFeatures { m: usize, max: usize },
    #[error("coalition budget {budget} is below the minimum {min} for sampling")]
    BudgetTooSmall { budget: usize, min: usize },
    #[error("coalition design is singular; increase the budget or background size")]
    SingularSystem,
    #[error("no explanation targets requested")]
    NoTargets,
    #[error("no explanations given")]
    EmptyInput,
    #[error("explanations disagree on their feature names")]
    MismatchedFeatures,
    #[error("unknown feature {0:?}")]
    UnknownFeature(String),
    #[error("{left} explanations but {right} value rows")]
    LengthMismatch { left: usize, right: usize },
    #[error(transparent)]
    Qrf(#[from] QrfError),
}

/// A subset of feature groups, indexed like [`FeatureGroups::names`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Coalition {
    pub mask: Vec<bool>,
}

impl Coalition {
    pub fn new(mask: Vec<bool>) -> Self {
        Coalition { mask }
    }

    pub fn empty(m: usize) -> Self {
        Coalition {
            mask: vec![false; m],
        }
    }

    pub fn full(m: usize) -> Self {
        Coalition {
            mask: vec![true; m],
        }
    }

    pub fn from_bits(bits: u64, m: usize) -> Self {
        Coalition {
            mask: (0..m).map(|i| bits & (1 << i) != 0).collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.iter().all(|&b| !b)
    }

    pub fn is_full(&self) -> bool {
        self.mask.iter().all(|&b| b)
    }

    pub fn complement(&self) -> Coalition {
        Coalition {
            mask: self.mask.iter().map(|&b| !b).collect(),
        }
    }
}

/// Maps explanation units (pre-encoding features) to the encoded columns
/// they own. Groups must partition the encoded width.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureGroups {
    pub names: Vec<String>,
    pub columns: Vec<Vec<usize>>,
    pub width: usize,
}

impl FeatureGroups {
    pub fn new(
        names: Vec<String>,
        columns: Vec<Vec<usize>>,
        width: usize,
    ) -> Result<Self, ShapError> {
        if names.is_empty() || names.len() != columns.len() {
            return Err(ShapError::BadGroups(
                "need one name per non-empty group".into(),
            ));
        }
        let mut owned = vec![false; width];
        for cols in &columns {
            if cols.is_empty() {
                return Err(ShapError::BadGroups("a group has no columns".into()));
            }
            for &c in cols {
                if c >= width {
                    return Err(ShapError::BadGroups(format!(
                        "column {c} out of range for width {width}"
                    )));
                }
                if owned[c] {
                    return Err(ShapError::BadGroups(format!(
                        "column {c} belongs to two groups"
                    )));
                }
                owned[c] = true;
            }
        }
        if let Some(c) = owned.iter().position(|&o| !o) {
            return Err(ShapError::BadGroups(format!(
                "column {c} belongs to no group"
            )));
        }
        Ok(FeatureGroups {
            names,
            columns,
            width,
        })
    }

    /// Group layout of a fitted encoding schema.
    pub fn from_schema(schema: &EncodingSchema) -> Result<Self, ShapError> {
        Self::new(
            schema.groups.iter().map(|g| g.name.clone()).collect(),
            schema.groups.iter().map(|g| g.columns.clone()).collect(),
            schema.width(),
        )
    }

    /// One group per column, named `x<index>`.
    pub fn singletons(width: usize) -> Self {
        FeatureGroups {
            names: (0..width).map(|i| format!("x{i}")).collect(),
            columns: (0..width).map(|i| vec![i]).collect(),
            width,
        }
    }

    /// Number of groups (the dimension explanations live in).
    pub fn m(&self) -> usize {
        self.names.len()
    }
}

/// Reference rows that absent features fall back to.
#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundSet {
    pub rows: Vec<Vec<f64>>,
}

impl BackgroundSet {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, ShapError> {
        let width = match rows.first() {
            Some(r) => r.len(),
            None => return Err(ShapError::EmptyBackground),
        };
        for r in &rows {
            if r.len() != width {
                return Err(ShapError::WidthMismatch {
                    expected: width,
                    got: r.len(),
                });
            }
        }
        Ok(BackgroundSet { rows })
    }

    /// Draws up to `size` distinct instances from a dataset,
    /// deterministically in the seed.
    pub fn sample_from_dataset(
        dataset: &Dataset,
        size: usize,
        seed: u64,
    ) -> Result<Self, ShapError> {
        let n = dataset.len();
        let k = size.min(n);
        if k == 0 {
            return Err(ShapError::EmptyBackground);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut indices: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = rng.gen_range(i..n);
            indices.swap(i, j);
        }
        let rows = indices[..k]
            .iter()
            .map(|&i| dataset.features(i).to_vec())
            .collect();
        Ok(BackgroundSet { rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn width(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }
}

/// Which model output an explanation is about.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum ExplanationTarget {
    #[serde(rename = "point")]
    PointPrediction,
    #[serde(rename = "lower")]
    LowerBoundary,
    #[serde(rename = "upper")]
    UpperBoundary,
    #[serde(rename = "width")]
    IntervalWidth,
}

pub const ALL_TARGETS: [ExplanationTarget; 4] = [
    ExplanationTarget::PointPrediction,
    ExplanationTarget::LowerBoundary,
    ExplanationTarget::UpperBoundary,
    ExplanationTarget::IntervalWidth,
];

impl std::fmt::Display for ExplanationTarget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ExplanationTarget::PointPrediction => "point",
            ExplanationTarget::LowerBoundary => "lower",
            ExplanationTarget::UpperBoundary => "upper",
            ExplanationTarget::IntervalWidth => "width",
        })
    }
}

impl std::str::FromStr for ExplanationTarget {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "point" => Ok(ExplanationTarget::PointPrediction),
            "lower" => Ok(ExplanationTarget::LowerBoundary),
            "upper" => Ok(ExplanationTarget::UpperBoundary),
            "width" => Ok(ExplanationTarget::IntervalWidth),
            other => Err(format!(
                "unknown target {other:?}, expected point, lower, upper, or width"
            )),
        }
    }
}

/// The raw result of one attribution: intercept (base value), one phi per
/// feature group, and the explained output at `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    pub intercept: f64,
    pub phi: Vec<f64>,
    pub fx: f64,
    /// Distinct coalition evaluations behind the attribution, the empty and
    /// full coalitions included.
    pub coalitions_used: usize,
    /// Whether every interior coalition was enumerated.
    pub exact: bool,
}

/// An attribution labeled with its target and feature names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub target: ExplanationTarget,
    pub feature_names: Vec<String>,
    pub intercept: f64,
    pub phi: Vec<f64>,
    pub fx: f64,
    pub coalitions_used: usize,
    pub exact: bool,
}

/// All requested explanations of one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceExplanation {
    /// One explanation per requested target, in requested order.
    pub explanations: Vec<Explanation>,
    /// Largest coordinate gap between the width attribution and the
    /// difference of the boundary attributions; a consistency indicator
    /// that should sit at solver precision.
    pub width_check_gap: f64,
}

/// Shapley kernel weight of an interior coalition of size `s` out of `m`.
pub fn kernel_weight(m: usize, s: usize) -> f64 {
    assert!(s > 0 && s < m, "kernel weight needs 0 < s < m");
    (m - 1) as f64 / (binomial(m, s) * (s * (m - s)) as f64)
}

fn validate_inputs(
    x: &[f64],
    groups: &FeatureGroups,
    background: &BackgroundSet,
) -> Result<(), ShapError> {
    if groups.width != x.len() {
        return Err(ShapError::WidthMismatch {
            expected: groups.width,
            got: x.len(),
        });
    }
    if background.is_empty() {
        return Err(ShapError::EmptyBackground);
    }
    if background.width() != x.len() {
        return Err(ShapError::WidthMismatch {
            expected: x.len(),
            got: background.width(),
        });
    }
    Ok(())
}

fn overlay(coalition: &Coalition, groups: &FeatureGroups, x: &[f64], buf: &mut [f64]) {
    for (g, &present) in coalition.mask.iter().enumerate() {
        if present {
            for &c in &groups.columns[g] {
                buf[c] = x[c];
            }
        }
    }
}

fn masked_mean<F: Fn(&[f64]) -> f64>(
    f: &F,
    x: &[f64],
    coalition: &Coalition,
    groups: &FeatureGroups,
    background: &BackgroundSet,
    buf: &mut [f64],
) -> f64 {
    if coalition.is_full() {
        return f(x);
    }
    let mut acc = 0.0;
    for row in &background.rows {
        buf.copy_from_slice(row);
        overlay(coalition, groups, x, buf);
        acc += f(buf);
    }
    acc / background.len() as f64
}

/// Masked model output: features in the coalition keep their values from
/// `x` (switched as whole groups), the rest take background values; the
/// output is averaged over the background rows. The full coalition is
/// exactly `f(x)`.
pub fn masked_prediction<F: Fn(&[f64]) -> f64>(
    f: &F,
    x: &[f64],
    coalition: &Coalition,
    groups: &FeatureGroups,
    background: &BackgroundSet,
) -> Result<f64, ShapError> {
    validate_inputs(x, groups, background)?;
    if coalition.mask.len() != groups.m() {
        return Err(ShapError::WidthMismatch {
            expected: groups.m(),
            got: coalition.mask.len(),
        });
    }
    let mut buf = vec![0.0; x.len()];
    Ok(masked_mean(f, x, coalition, groups, background, &mut buf))
}

/// KernelSHAP attribution of `f` at `x`. Enumerates every interior coalition
/// when `2^m - 2 <= budget` (the result is then exact), otherwise samples
/// complement pairs stratified by coalition size.
pub fn explain_kernel<F: Fn(&[f64]) -> f64>(
    f: &F,
    x: &[f64],
    groups: &FeatureGroups,
    background: &BackgroundSet,
    budget: usize,
    seed: u64,
) -> Result<Attribution, ShapError> {
    validate_inputs(x, groups, background)?;
    let m = groups.m();
    let plan = plan_coalitions(m, budget, seed)?;
    let mut buf = vec![0.0; x.len()];
    let responses: Vec<f64> = plan
        .coalitions
        .iter()
        .map(|c| masked_mean(f, x, c, groups, background, &mut buf))
        .collect();
    let base = masked_mean(f, x, &Coalition::empty(m), groups, background, &mut buf);
    let fx = f(x);
    let (intercept, phi) = wls::solve(
        &plan.coalitions,
        &plan.weights,
        m,
        &[WlsTarget {
            responses: &responses,
            base,
            fx,
        }],
    )?
    .pop()
    .expect("one target solved");
    Ok(Attribution {
        intercept,
        phi,
        fx,
        coalitions_used: plan.coalitions.len() + 2,
        exact: plan.exact,
    })
}

/// Exact Shapley values by direct enumeration of all `2^m` coalitions.
/// Exponential in the group count; serves as the verification oracle for
/// [`explain_kernel`].
pub fn exact_shapley<F: Fn(&[f64]) -> f64>(
    f: &F,
    x: &[f64],
    groups: &FeatureGroups,
    background: &BackgroundSet,
) -> Result<Attribution, ShapError> {
    validate_inputs(x, groups, background)?;
    let m = groups.m();
    if m > MAX_EXACT_FEATURES {
        return Err(ShapError::TooManyFeatures {
            m,
            max: MAX_EXACT_FEATURES,
        });
    }
    let total = 1usize << m;
    let mut v = vec![0.0; total];
    let mut buf = vec![0.0; x.len()];
    for bits in 0..total {
        v[bits] = masked_mean(
            f,
            x,
            &Coalition::from_bits(bits as u64, m),
            groups,
            background,
            &mut buf,
        );
    }
    let mut phi = vec![0.0; m];
    for (i, phi_i) in phi.iter_mut().enumerate() {
        let bit = 1usize << i;
        let mut acc = 0.0;
        for sub in 0..total {
            if sub & bit == 0 {
                let s = (sub as u64).count_ones() as usize;
                let weight = 1.0 / (m as f64 * binomial(m - 1, s));
                acc += weight * (v[sub | bit] - v[sub]);
            }
        }
        *phi_i = acc;
    }
    Ok(Attribution {
        intercept: v[0],
        phi,
        fx: v[total - 1],
        coalitions_used: total,
        exact: true,
    })
}

fn target_index(target: ExplanationTarget) -> usize {
    match target {
        ExplanationTarget::PointPrediction => 0,
        ExplanationTarget::LowerBoundary => 1,
        ExplanationTarget::UpperBoundary => 2,
        ExplanationTarget::IntervalWidth => 3,
    }
}

/// Explains a forest's outputs at `x` over one shared coalition plan: the
/// point prediction, both boundaries of the central interval at `level`,
/// and the interval width. The width response of every coalition is the
/// boundary difference computed per background row, so the width
/// attribution is consistent with the boundary attributions by
/// construction.
#[allow(clippy::too_many_arguments)]
pub fn explain_instance(
    model: &QrfModel,
    x: &[f64],
    level: f64,
    targets: &[ExplanationTarget],
    groups: &FeatureGroups,
    background: &BackgroundSet,
    budget: usize,
    seed: u64,
) -> Result<InstanceExplanation, ShapError> {
    if targets.is_empty() {
        return Err(ShapError::NoTargets);
    }
    validate_inputs(x, groups, background)?;
    if x.len() != model.n_features {
        return Err(ShapError::WidthMismatch {
            expected: model.n_features,
            got: x.len(),
        });
    }
    let m = groups.m();
    let plan = plan_coalitions(m, budget, seed)?;

    let b = background.len() as f64;
    let mut buf = vec![0.0; x.len()];
    let mut parts_over_background =
        |coalition: Option<&Coalition>| -> Result<[f64; 4], ShapError> {
            let mut acc = [0.0; 4];
            for row in &background.rows {
                buf.copy_from_slice(row);
                if let Some(c) = coalition {
                    overlay(c, groups, x, &mut buf);
                }
                let (point, lower, upper) = model.predict_parts(&buf, level)?;
                acc[0] += point;
                acc[1] += lower;
                acc[2] += upper;
                acc[3] += upper - lower;
            }
            for v in &mut acc {
                *v /= b;
            }
            Ok(acc)
        };

    let mut responses: [Vec<f64>; 4] = std::array::from_fn(|_| Vec::with_capacity(plan.coalitions.len()));
    for coalition in &plan.coalitions {
        let parts = parts_over_background(Some(coalition))?;
        for (target, &value) in responses.iter_mut().zip(&parts) {
            target.push(value);
        }
    }
    let base = parts_over_background(None)?;
    let (fx_point, fx_lower, fx_upper) = model.predict_parts(x, level)?;
    let fxs = [fx_point, fx_lower, fx_upper, fx_upper - fx_lower];

    let wls_targets: Vec<WlsTarget<'_>> = (0..4)
        .map(|i| WlsTarget {
            responses: &responses[i],
            base: base[i],
            fx: fxs[i],
        })
        .collect();
    let solved = wls::solve(&plan.coalitions, &plan.weights, m, &wls_targets)?;

    let width_check_gap = (0..m)
        .map(|i| (solved[3].1[i] - (solved[2].1[i] - solved[1].1[i])).abs())
        .fold(0.0f64, f64::max);

    let coalitions_used = plan.coalitions.len() + 2;
    let explanations = targets
        .iter()
        .map(|&target| {
            let idx = target_index(target);
            Explanation {
                target,
                feature_names: groups.names.clone(),
                intercept: solved[idx].0,
                phi: solved[idx].1.clone(),
                fx: fxs[idx],
                coalitions_used,
                exact: plan.exact,
            }
        })
        .collect();
    Ok(InstanceExplanation {
        explanations,
        width_check_gap,
    })
}

/// Mean absolute phi per feature over a set of explanations, sorted from
/// most to least important (name breaks ties).
pub fn global_importance(
    explanations: &[Explanation],
) -> Result<Vec<(String, f64)>, ShapError> {
    let first = explanations.first().ok_or(ShapError::EmptyInput)?;
    let names = &first.feature_names;
    let m = names.len();
    let mut acc = vec![0.0; m];
    for e in explanations {
        if e.feature_names != *names || e.phi.len() != m {
            return Err(ShapError::MismatchedFeatures);
        }
        for (a, phi) in acc.iter_mut().zip(&e.phi) {
            *a += phi.abs();
        }
    }
    let n = explanations.len() as f64;
    let mut out: Vec<(String, f64)> = names
        .iter()
        .cloned()
        .zip(acc.into_iter().map(|a| a / n))
        .collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(out)
}

/// One point of a beeswarm-style summary: an instance's phi for one feature
/// together with the instance's original value of that feature.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryPoint {
    pub feature: String,
    pub phi: f64,
    pub value: FeatureValue,
}

/// Long-format summary data: for the `top` most important features (by mean
/// absolute phi), one row per instance and feature, features ordered by
/// importance.
pub fn summary_points(
    explanations: &[Explanation],
    values: &[Vec<FeatureValue>],
    top: usize,
) -> Result<Vec<SummaryPoint>, ShapError> {
    if explanations.len() != values.len() {
        return Err(ShapError::LengthMismatch {
            left: explanations.len(),
            right: values.len(),
        });
    }
    let importance = global_importance(explanations)?;
    let names = &explanations[0].feature_names;
    let m = names.len();
    for row in values {
        if row.len() != m {
            return Err(ShapError::LengthMismatch {
                left: m,
                right: row.len(),
            });
        }
    }
    let mut out = Vec::new();
    for (feature, _) in importance.iter().take(top) {
        let idx = names
            .iter()
            .position(|n| n == feature)
            .expect("importance names come from the explanations");
        for (e, vals) in explanations.iter().zip(values) {
            out.push(SummaryPoint {
                feature: feature.clone(),
                phi: e.phi[idx],
                value: vals[idx].clone(),
            });
        }
    }
    Ok(out)
}

/// One point of a dependence plot: the primary feature's value against its
/// phi, colored by a second feature's value.
#[derive(Debug, Clone, PartialEq)]
pub struct DependencePoint {
    pub primary: FeatureValue,
    pub phi: f64,
    pub color: FeatureValue,
}

/// Dependence data of `primary` (phi and value per instance) colored by
/// `color`.
pub fn dependence_points(
    explanations: &[Explanation],
    values: &[Vec<FeatureValue>],
    primary: &str,
    color: &str,
) -> Result<Vec<DependencePoint>, ShapError> {
    if explanations.len() != values.len() {
        return Err(ShapError::LengthMismatch {
            left: explanations.len(),
            right: values.len(),
        });
    }
    let first = explanations.first().ok_or(ShapError::EmptyInput)?;
    let names = &first.feature_names;
    let p_idx = names
        .iter()
        .position(|n| n == primary)
        .ok_or_else(|| ShapError::UnknownFeature(primary.to_string()))?;
    let c_idx = names
        .iter()
        .position(|n| n == color)
        .ok_or_else(|| ShapError::UnknownFeature(color.to_string()))?;
    explanations
        .iter()
        .zip(values)
        .map(|(e, vals)| {
            if e.feature_names != *names || vals.len() != names.len() {
                return Err(ShapError::MismatchedFeatures);
            }
            Ok(DependencePoint {
                primary: vals[p_idx].clone(),
                phi: e.phi[p_idx],
                color: vals[c_idx].clone(),
            })
        })
        .collect()
}

/// Convenience map from target to mean absolute phi vectors, used by
/// reporting code that aggregates several targets at once.
pub fn importance_by_target(
    explanations: &[Explanation],
) -> Result<BTreeMap<ExplanationTarget, Vec<(String, f64)>>, ShapError> {
    let mut grouped: BTreeMap<ExplanationTarget, Vec<Explanation>> = BTreeMap::new();
    for e in explanations {
        grouped.entry(e.target).or_default().push(e.clone());
    }
    grouped
        .into_iter()
        .map(|(t, es)| Ok((t, global_importance(&es)?)))
        .collect()
}
