//! Experiment runner for identifiability sweeps: JSON-configured
//! phase-transition experiments over the measurement count, executed on a
//! seeded rayon pool and written as CSV plus a JSON echo.

pub mod config;
mod error;
pub mod experiment;
pub mod output;

pub use config::{Budget, Ensemble, ExperimentConfig, FieldError, MRange, Mode};
pub use error::HarnessError;
pub use experiment::{check_bands, run_experiment, run_experiment_with_threads, ExperimentRecord, Row};
pub use output::{to_csv, write_results};
