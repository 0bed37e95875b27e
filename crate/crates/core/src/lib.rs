//! Discrete-event simulation of primary care physicians and their patients.

// `!(x > 0.0)` deliberately rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod behavior;
pub mod engine;
pub mod experiment;
pub mod generate;
pub mod geo;
pub mod metrics;
pub mod scenario;
pub mod stochastics;
pub mod strategies;
pub mod time;
