//! Pivotal times for random walks on Gromov hyperbolic spaces.
//!
//! The crate provides exact and floating-point space models, samplers for
//! random walks with a Schottky block decomposition, the inductive
//! pivotal-time construction, and estimators for the limit laws of
//! displacement and translation length.

// `!(x > 0.0)` is the intended way to reject NaN along with bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod geometry;
pub mod models;
pub mod pivots;
pub mod presets;
pub mod schottky;
pub mod stats;
pub mod walk;
