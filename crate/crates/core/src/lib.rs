//! Tracking networks for football: ball flow, signed proximity, marking and
//! functional coordination networks built from per-frame tracking data.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ballflow;
pub mod cli;
pub mod coordination;
pub mod error;
pub mod graphio;
pub mod grid;
pub mod ingest;
pub mod marking;
pub mod model;
pub mod proximity;
pub mod synth;

pub use error::{Error, Result};
