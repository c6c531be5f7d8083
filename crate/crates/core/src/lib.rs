//! Annealed Bregman estimators of normalization constants.

pub mod bregman;
pub mod error;
pub mod estimator;
pub mod exp_family;
pub mod harness;
pub mod math;
pub mod mixture;
pub mod paths;
pub mod quadrature;
pub mod stream;
pub mod theory;

pub use error::{Error, Result};
