//! Planning over rotation states by relaxing SO(n) to its convex hull.
//!
//! [`cones`] holds the hull constraints and projections, [`conic`] the ADMM
//! solver, [`mip`] branch-and-bound on top of it and [`mpc`] the planners.

pub mod cli;
pub mod cones;
pub mod conic;
pub mod error;
pub mod export;
pub mod mip;
pub mod mpc;
pub mod numerics;
pub mod scenario;

pub use error::{Error, Result};
