//! Composite stochastic mirror descent: mirror geometries, composite test
//! problems, gradient noise models, step-size schedules, the iteration engine,
//! and a Monte Carlo harness for last-iterate rate experiments.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod engine;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod noise;
pub mod problems;
pub mod schedules;

pub use error::{CsmdError, Result};
