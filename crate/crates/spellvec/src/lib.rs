//! File formats, corpus streaming, multi-worker training and evaluation
//! drivers on top of `spellvec-core`.

pub mod corpus;
pub mod error;
pub mod evaluate;
pub mod formats;
pub mod hogwild;
pub mod synth;
pub mod train;

pub use error::{Error, Result};
pub use spellvec_core as core;
