//! Commonsense knowledge acquisition pipeline.
//!
//! Stages: gather interrogative text (autocomplete probing + forum corpora),
//! rewrite questions into statements, extract candidate triples, normalize
//! them into scored tuples, corroborate against evidence sources, rank by
//! typicality and saliency, and soft co-cluster the result.

pub mod corroborate;
pub mod error;
pub mod evalkit;
pub mod extract;
pub mod group;
pub mod inflect;
pub mod ingest;
pub mod lexicon;
pub mod normalize;
pub mod pipeline;
pub mod pos;
pub mod rank;
pub mod rewrite;

pub use error::{Error, Result};
