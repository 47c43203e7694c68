//! Blind pilot decontamination for multi-cell massive MIMO uplinks.
//!
//! The crate covers the channel model of one coherence block, the SVD
//! subspace-projection receiver and its linear baseline, the asymptotic
//! eigenvalue spectrum of the received Gram matrix, closed-form bulk-support
//! approximations, and the Monte Carlo harness that ties them together.

pub mod bulk_support;
pub mod cli;
pub mod error;
pub mod linalg;
pub mod montecarlo;
pub mod numerics;
pub mod rmt_spectrum;
pub mod subspace_receiver;
pub mod system_model;

pub use error::{Error, Result};
pub use numerics::Complex64;
