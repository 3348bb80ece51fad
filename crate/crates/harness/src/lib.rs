//! Experiment harness for the `pdebet` learners: the fixed absolute-loss
//! game, the stochastic coin game and streamed absolute-loss regression,
//! plus dataset preprocessing, CSV/SVG output, invariant suites and the CLI.

pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod experiments;
pub mod output;
pub mod verify;

pub use config::{ExperimentConfig, Task};
pub use dataset::DatasetMatrix;
pub use error::{HarnessError, Result};
pub use experiments::RunRecord;
