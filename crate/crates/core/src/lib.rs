//! Gaussian-mixture trajectory PHD filter with L-scan covariance truncation,
//! a multi-target scenario simulator, and OSPA-based trajectory scoring.

pub mod assignment;
pub mod campaign;
pub mod error;
pub mod gm_tphd;
pub mod linalg;
pub mod metrics;
pub mod models;
pub mod poisson;
pub mod simulator;

pub use error::{Result, TphdError};
pub use gm_tphd::{step, TphdState, TrajectoryComponent, TrajectoryEstimate, TrajectoryEstimateSet};
pub use models::{benchmark_scenario, Lscan, ScenarioConfig};
