//! Declarative experiment runner for `lmc-core`.
//!
//! An [`ExperimentConfig`] names a target family, a list of samplers and a
//! grid of step sizes; [`run_experiment`] executes every chain and writes a
//! deterministic bundle of CSV, JSON and PGM files.

pub mod config;
pub mod presets;
pub mod runner;

pub use config::{validate_config, ConfigErrors, ExperimentConfig, Family, FieldError, SamplerKind};
pub use presets::{builtin_configs, preset};
pub use runner::{plan_runs, run_experiment, ExperimentSummary, RunError, RunPlan, RunRecord};

/// Process exit codes of the `lmc` binary.
pub mod exit {
    pub const OK: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const INVALID: i32 = 2;
    pub const DIVERGED: i32 = 3;
}
