//! Family-wise error rate of Bonferroni's procedure for jointly normal
//! test statistics under structured correlation.
//!
//! The library covers four angles on the same quantity:
//!
//! * [`fwer::estimate_fwer_mc`] — reproducible Monte Carlo estimation
//!   under a structured correlation model, O(n) per replication for
//!   equicorrelated structures;
//! * [`fwer::fwer_independence`] and [`fwer::fwer_corrected`] — the
//!   closed-form independence baseline and its mean-correlation
//!   correction;
//! * [`mills`] — multivariate Mill's ratio bounds on upper-orthant
//!   probabilities and the first-order joint tail approximation;
//! * [`oracle`] — independent quadrature orthant probabilities for
//!   dimensions up to 3, used to validate everything else.

pub mod corr_model;
pub mod error;
pub mod fwer;
pub mod gaussian;
pub mod matrix;
pub mod mills;
pub mod oracle;
pub mod sampler;

pub use error::{Error, Result};
