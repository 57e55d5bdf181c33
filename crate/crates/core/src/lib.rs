//! Supervised clustering in the two-component anisotropic (sub-)Gaussian
//! mixture model.
//!
//! Observations follow `Y_i = theta * eta_i + W_i` where `eta_i` is a ±1
//! label, `theta` is the class center and `W_i` is centered noise with
//! covariance `Sigma`. The crate provides:
//!
//! * dense symmetric linear algebra with closed-form rank-two and
//!   leave-one-column-out inverse identities ([`linalg`]),
//! * covariance spectra, effective ranks and the spike-count threshold
//!   `k*` ([`spectra`]),
//! * mixture sampling and adversarial covariance corruption ([`mixture`]),
//! * five linear classifiers: averaging, LDA, ridge family, minimum-norm
//!   interpolator and hard-margin SVM ([`classify`]),
//! * support-vector-proliferation detection ([`svp`]),
//! * exact Gaussian risk, Monte Carlo risk and theoretical bound curves
//!   ([`risk`]),
//! * reproducible experiment sweeps with CSV output ([`experiments`]).
//!
//! Everything is deterministic given a 64-bit seed; parallel execution
//! never changes results.

// `!(x > 0.0)` style guards reject NaN along with out-of-range values;
// the suggested `partial_cmp` rewrite would lose that.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classify;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod mixture;
pub mod risk;
pub mod rng;
pub mod spectra;
pub mod svp;

pub use error::{Error, Result};

// Re-exported so downstream crates name vector and matrix types without
// pinning their own copy of the dependency.
pub use nalgebra;
