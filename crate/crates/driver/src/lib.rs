//! Scenario driver for the space-time melting solver: configuration,
//! analytic references, the time loop and file output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod config;
pub mod convergence;
pub mod error;
pub mod metrics;
pub mod output;
pub mod scenario;
pub mod simulation;

pub use config::Config;
pub use error::{DriverError, Result};
pub use simulation::Simulation;
