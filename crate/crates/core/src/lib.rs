// negated comparisons are used on purpose so that NaN is rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod flow;
pub mod harness;
pub mod lagrangian;
pub mod ode;
pub mod quadrature;
pub mod solver;
pub mod spectral;

pub use error::{Result, WaveError};
