//! Validation grids and the age-versus-arrival-rate sweep.

mod grid;
mod sweep;
mod validation;

use thiserror::Error;

pub use grid::GridConfig;
pub use sweep::{sweep_fig2, sweep_rows, write_sweep_csv, LambdaRange, SweepRow, SweepSim, SWEEP_CHANNEL_RATES};
pub use validation::{run_validation, Diagnostic, QuantityCheck, ValidationReport, ValidationRow};

use crate::model::ParamError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid sweep range: {0}")]
    InvalidRange(String),
    #[error("cannot parse grid config: {0}")]
    Parse(String),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Sim(#[from] crate::simulator::SimError),
    #[error("i/o failure on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Seed for work item `index` derived from a base seed (SplitMix64 finaliser).
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
