//! Waiting-time analysis for high-frequency price-change events.
//!
//! - [`ingest`]: event files to waiting-time series.
//! - [`dist`]: exponential, Weibull, lognormal and discrete power-law models.
//! - [`gof`]: K-L, K-S and D* statistics, the power-law bootstrap, and
//!   cross-validated BIC.
//! - [`elfarol`]: an agent-based market that generates event series.

pub mod dist;
pub mod elfarol;
pub mod error;
pub mod gof;
pub mod ingest;
pub mod json_float;

pub use error::{Error, Result};
