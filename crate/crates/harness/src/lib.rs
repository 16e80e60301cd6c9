//! Sweep harness for slow-feature value-function experiments.

pub mod config;
pub mod error;
pub mod output;
pub mod plot;
pub mod sweep;

pub use config::{Behavior, Correction, EnvironmentSpec, RewardPosition, SweepConfig, Training};
pub use error::HarnessError;
pub use output::{emit_csv, heatmap_grids, write_features, write_manifest, write_sweep};
pub use sweep::{run_sweep, ExperimentResult, Status};
