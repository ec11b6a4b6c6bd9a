//! Experiment harness for `esprit-core`: seeded parallel Monte Carlo
//! sweeps reproducing the published experiments, CSV and JSON output,
//! log-log slope fitting, and the snapshot data file format.

pub mod error;
pub mod experiment;
pub mod format;
pub mod slope;

pub use error::{LabError, Result};
