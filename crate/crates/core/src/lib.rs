//! Coupled geodesic random walks on manifolds with time-dependent metrics.
//!
//! The crate simulates geodesic random walks under an evolving metric `g(t)`,
//! couples pairs of them by reflection or parallel transport, and checks the
//! resulting coupling-time tails, gradient estimates and contraction rates
//! against their one-dimensional comparison bounds.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod comparison;
pub mod coupling;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod models;
pub mod rng;
pub mod walk;

pub use error::{Error, Result};
