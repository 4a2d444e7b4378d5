#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod cohort;
pub mod dbcv;
pub mod egonet;
pub mod error;
pub mod meanshift;
pub mod metrics;
pub mod model;
pub mod semantic;
pub mod signed;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
