//! Experiment runner for cautious policy programming: configuration,
//! trial execution, bound verification and CSV/JSON output.

pub mod algo;
pub mod bounds;
pub mod config;
pub mod error;
pub mod run;

pub use algo::Algorithm;
pub use bounds::{bounds_check, BoundsReport, BoundsRow};
pub use config::{Environment, ExperimentConfig};
pub use error::HarnessError;
pub use run::{run, run_with, Backend, RunResult};
