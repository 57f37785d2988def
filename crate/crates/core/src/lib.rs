//! Schwarz domain decomposition in time for parabolic optimal control.
//!
//! The optimality system of a tracking-type control problem for the heat
//! equation is discretized in space and time ([`discretize`]) and solved by
//! one- and two-level Schwarz iterations over time strips ([`schwarz`],
//! [`partition`]), either stand-alone or as GMRES preconditioners.

pub mod discretize;
mod error;
pub mod linalg;
pub mod par;
pub mod partition;
pub mod problems;
pub mod schwarz;

pub use error::{Error, Result};
