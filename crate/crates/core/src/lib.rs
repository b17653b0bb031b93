//! Simulation of a molecular storage chip: strand encoding, valve-tree
//! addressing, transport physics, nanopore readout and decoding, the
//! write station, and an end-to-end scenario runner.

// `!(x > 0.0)` checks are meant to reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chip;
pub mod codec;
pub mod config;
pub mod decoder;
pub mod error;
pub mod filter;
pub mod orchestrator;
pub mod readout;
pub mod rng;
pub mod transport;
pub mod write;

pub use error::{Error, Result};
