//! # phasebound
//!
//! Lower bounds on the Bayesian mean-squared error of optical phase estimation,
//! obtained by combining the Shannon lower bound on the rate-distortion function
//! of the phase prior with upper bounds on the classical capacity of the
//! phase-modulated optical channel, with and without photon loss.
//!
//! Every bound is cross-checked numerically:
//!
//! - [`rate_distortion`] runs Blahut–Arimoto on a discretized prior, an exact
//!   oracle for the rate-distortion infimum.
//! - [`fock`] builds the lossy number-diagonal-signal (NDS) states in a truncated
//!   Fock basis and evaluates Holevo quantities by eigendecomposition.
//! - [`estimation`] simulates a canonical phase measurement and computes the
//!   achieved posterior-mean MSE and the measurement mutual information.
//!
//! All entropies are in nats, all phases in radians and all mean-squared
//! errors in squared radians. Squared error is plain `(φ̂ − φ)²` on `[0, 2π)`;
//! nothing here uses a circular distance.

#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod capacity;
pub mod cli;
pub mod error;
pub mod estimation;
pub mod fock;
pub mod prior;
pub mod rate_distortion;

mod numerics;

pub use bounds::{BoundReport, ReportOptions};
pub use capacity::LossChannel;
pub use error::{Error, Result};
pub use estimation::SimGrid;
pub use fock::{ChiDecomposition, DensityMatrix, IdlerMode, ProbeSpec};
pub use prior::PhasePrior;
pub use rate_distortion::{RdCurve, RdPoint};

/// `2π`.
pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
