//! Lie splitting for the logarithmic Schrödinger equation on the torus, with
//! the spectral tooling, inequality checks and convergence harness around it.

// `!(x > 0.0)` rejects NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod harness;
pub mod initdata;
pub mod nonlinear;
pub mod output;
pub mod propagator;
pub mod quadrature;
pub mod spectral;
pub mod splitting;

pub use error::{Error, Result};
