//! Seeded experiment sweeps with deterministic CSV output.
//!
//! Every `(point, trial)` task draws its covariances and pilots from streams
//! keyed by `(seed, point, trial, role, user)`, so results are identical for
//! any worker count.

mod config;
mod csv_out;
mod instance;
mod recipes;
mod run;

pub use config::{
    CovarianceSpec, ExperimentConfig, InterfererRule, Output, PathlossSpec, PilotLengthRule, SnrSpec, Sweep,
};
pub use csv_out::{config_hash, render_csv, strip_timestamp, write_atomic, write_csv, TIMESTAMP_PREFIX};
pub use instance::{evaluate_deteq, evaluate_mse, evaluate_pilot_length, Instance, InstanceConfig};
pub use recipes::{recipe, Recipe, DEFAULT_RECIPE, RECIPES};
pub use run::{
    normalized_approx_error, resolve_points, run_experiment, Columns, ExperimentOutput, ExperimentRecord, Metric,
    Point,
};
