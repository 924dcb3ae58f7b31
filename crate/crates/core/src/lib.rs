//! Contrastive sentence-embedding training with LLM-simulated similarity
//! patterns, plus the representation and lexical metrics used to study it.

pub mod cli;
pub mod embeddings;
pub mod error;
pub mod io;
pub mod lexical_metrics;
pub mod losses;
pub mod pattern_sim;
pub mod repr_metrics;
pub mod seeds;
pub mod synthetic;
pub mod text;
pub mod train_eval;

pub use error::{Error, Result};
