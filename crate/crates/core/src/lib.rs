//! Frame-level simulator of TCP-aware uplink scheduling over a fading
//! channel with adaptive modulation and coding.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod amc;
pub mod analysis;
pub mod channel;
pub mod cli;
pub mod config;
pub mod engine;
pub mod error;
pub mod metrics;
pub mod report;
pub mod scheduler;
pub mod seed;
pub mod tcp;

pub use error::{Error, Result, ValidationError};
