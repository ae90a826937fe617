//! Direct phase modulation of a gain-switched slave laser by optical
//! injection from a current-modulated master laser.

// `!(x > 0.0)` is used on purpose so NaN is rejected along with the bound.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod config;
pub mod error;
pub mod params;
pub mod parallel;
pub mod runner;
pub mod sim;
pub mod steady;
pub mod thermal;

pub use error::{Error, Result};
pub use params::{CouplingParams, LaserParams};
