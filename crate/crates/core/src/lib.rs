//! Subword skip-gram embeddings trained jointly with a spell-correction
//! objective, so that misspellings land near their correct forms.
//!
//! This crate holds the allocation-only algorithmic core: vocabulary
//! construction, character n-gram hashing, the scoring/loss/gradient
//! mathematics of both objectives, the interleaved training schedule, the
//! character-level error model used to synthesize misspellings, and the
//! intrinsic evaluation metrics. File formats, threads and the command line
//! live in the `spellvec` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod eval;
pub mod misspell;
pub mod model;
pub mod real;
pub mod sampler;
pub mod subword;
pub mod trainer;
pub mod vocab;

pub use error::ConfigError;
pub use model::{EmbeddingModel, Matrix, Parameters, Side};
pub use real::Real;
pub use subword::{InputIds, NgramConfig};
pub use vocab::Vocabulary;
