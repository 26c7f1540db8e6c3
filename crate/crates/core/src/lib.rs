//! Joint modelling of the VIX and VVIX indices: an affine stochastic
//! volatility model for logVIX with optional co-jumps, a simulator, a
//! nonparametric jump test, an MCMC estimator and model diagnostics.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod jump_tests;
pub mod mcmc;
pub mod model;
pub mod pipeline;
pub mod rng;
pub mod simulator;
pub mod stats;

pub use error::{Error, Result};
