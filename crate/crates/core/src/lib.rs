//! Desk-scale verification of energy-conservation criteria for the
//! compressible Euler and Navier-Stokes equations in the presence of vacuum.
//!
//! The crate is organised bottom-up:
//!
//! - [`fieldlab`]: grids, sampled fields, the plateau mollifier and discrete convolution.
//! - [`besov`]: shift-scan Besov seminorms, mollification rates and log-log rate fits.
//! - [`pressure`]: polytropic laws, the pressure potential, C² approximants and the
//!   pressure commutator.
//! - [`commutator`]: the commutator terms of the mollified energy balance.
//! - [`vacuum`]: vacuum sets, ratio conditions, QNS checks and the spike counterexample.
//! - [`synth`]: generators for test inputs and exact solutions.
//! - [`energy`]: energy residuals and budgets.
//! - [`study`]: config-driven experiments and reports.

// `!(a < b)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod besov;
pub mod commutator;
pub mod energy;
pub mod error;
pub mod fieldlab;
pub mod pressure;
pub mod study;
pub mod synth;
pub mod vacuum;

pub use error::{LabError, Result};
