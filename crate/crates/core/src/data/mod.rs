//! Datasets, measurement preprocessing, metrics and interpolation baselines.

mod baselines;
mod dataset;
mod eval;
mod metrics;
mod sweep;

pub use baselines::{baseline_linear, baseline_nn, linear_weights, nearest_index, LINEAR_NEIGHBOURS};
pub use dataset::{Dataset, DatasetEntry, DatasetIndex, Split};
pub use eval::{evaluate, EvalReport, EvalRow, EvalSummary, MethodScores, TABLE_SCALE};
pub use metrics::{metric_env, metric_lr_energy, metric_lr_energy_batch, metric_mag};
pub use sweep::{deconvolve_sweep, log_sweep, sensitivity_normalize, SWEEP_TAIL_TRIM};
