// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assignment;
pub mod commands;
pub mod config;
pub mod error;
pub mod identify;
pub mod inference;
pub mod metrics;
pub mod model;
pub mod mot;
pub mod pmbm;
pub mod report;
pub mod rfs;
pub mod simulate;
pub mod sort;
pub mod trajectory;

pub use error::{Error, Result};
