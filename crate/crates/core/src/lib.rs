//! Age of Information for a bufferless memoryless queue whose server is
//! interrupted by an exponential On-Off process.
//!
//! - [`model`]: parameters, disciplines, the plain M/M/1/1 reference ages.
//! - [`analytics`]: closed-form peak age, mean age and their ingredients.
//! - [`oracle`]: the same quantities by truncated series summation.
//! - [`simulator`]: an exact event-driven simulation with standard errors.
//! - [`harness`]: validation grids and arrival-rate sweeps.

pub mod analytics;
pub mod format;
pub mod harness;
pub mod model;
pub mod oracle;
pub mod simulator;

pub use analytics::{age_metrics, T2Variant};
pub use model::{mm11_reference, validate_params, AgeMetrics, Discipline, Mm11Ages, ParamError, SystemParams};
pub use simulator::{simulate, SimConfig, SimResult};
