//! Processing-time prediction for process event logs.
//!
//! The crate turns raw event logs (one row per executed activity, with start
//! and completion timestamps plus case attributes) into a supervised dataset,
//! trains a quantile regression forest over it, and answers point, quantile,
//! and prediction-interval queries through Meinshausen observation weights.
//! On top of the forest it provides interval-quality metrics, rWidth-based
//! uncertainty profiles, and KernelSHAP explanations of the point prediction
//! and the interval boundaries, including an exact Shapley enumeration used
//! as a verification oracle.
//!
//! Modules follow the pipeline order:
//!
//! * [`event_log`] — parsing, trace reconstruction, labeling, feature
//!   encoding, chronological case splitting.
//! * [`qrf`] — forest training, weight-based quantile queries, grid search,
//!   model persistence.
//! * [`metrics`] — RMSE/MAE and PICP/MPIW/MRPIW interval metrics.
//! * [`profiles`] — low/medium/high uncertainty profiles from rWidth
//!   percentiles calibrated on validation data.
//! * [`shap`] — KernelSHAP over original (pre-encoding) features with an
//!   exact enumeration oracle.
//! * [`synth`] — synthetic manufacturing log generator with a closed-form
//!   conditional-quantile ground truth, used for end-to-end verification.

pub mod event_log;
pub mod metrics;
pub mod profiles;
pub mod qrf;
pub mod rng;
pub mod shap;
pub mod synth;

pub use event_log::{AttributeSchema, Dataset, Event, EventLog, Trace};
pub use qrf::{Hyperparameters, PredictionInterval, QrfModel};
