//! Online binary forecasting with pseudo KL-calibration guarantees.
//!
//! The forecaster ([`forecaster`]) runs one EWOO learner ([`ewoo`]) per point
//! of a non-uniform grid ([`grid`]), rounds their predictions onto the grid
//! ([`rounding`]) and plays a stationary distribution of the resulting
//! matrix ([`stationary`]). [`metrics`] measures calibration and swap regret
//! of a [`transcript`] under the losses in [`losses`], and [`harness`] runs
//! experiments against the opponents in [`adversary`].

pub mod adversary;
pub mod error;
pub mod ewoo;
pub mod forecaster;
pub mod grid;
pub mod harness;
pub mod losses;
pub mod metrics;
pub mod rounding;
pub mod stationary;
pub mod transcript;

pub use error::{Error, Result};
pub use grid::{default_k, Grid, GridVariant};
pub use losses::{kl_bernoulli, LossKind, LossSpec};
pub use metrics::MetricReport;
pub use transcript::{Round, Transcript};
