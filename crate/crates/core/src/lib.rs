//! Depth-stratified measurement of feature decay across recursive self-training.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aggregates;
pub mod corpus;
pub mod error;
pub mod features;
pub mod io;
pub mod report;
pub mod rng;
pub mod sim;
pub mod stats;
pub mod tau;
pub mod trajectory;

pub use error::{Error, Result};
