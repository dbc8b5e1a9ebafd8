//! Koopman spectra of random dynamical systems from noisy data.
//!
//! The pipeline simulates a system ([`rds_sim`]), evaluates a dictionary of
//! observables with optional measurement noise ([`observables`]), estimates
//! eigenvalues with one of four DMD variants ([`dmd`]) and compares them to
//! the analytic spectrum ([`harness`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dmd;
pub mod error;
pub mod harness;
pub mod observables;
pub mod rds_sim;
pub mod rng;
mod textio;

pub use error::{Error, Result};
