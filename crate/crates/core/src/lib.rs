//! Budget-aware active learning for trainable text rankers.
//!
//! The crate simulates the annotate-and-train loop used when fine-tuning a
//! ranker with a limited labelling budget:
//!
//! ```text
//! pool T ──select S──▶ annotate (qrels oracle, count assessments)
//!    ▲                        │
//!    └── T \ S      D ∪= S ◀──┘ ──▶ train ranker on D ──▶ evaluate nDCG@10
//! ```
//!
//! Modules follow the pipeline: [`datamodel`] holds corpora, qrels and runs;
//! [`lexical`] supplies BM25 candidates and negatives; [`ranker`] holds the
//! three trainable reference rankers; [`selection`] implements the random,
//! uncertainty, query-by-committee and diversity strategies;
//! [`annotation`] simulates the annotator; [`budget`] turns assessments and
//! compute hours into money; [`evaluation`] computes metrics and writes
//! reports; [`experiment`] drives the whole loop with resumable state.
//!
//! Runnable walkthroughs live in the crate's `examples/` directory.

pub mod annotation;
mod binio;
pub mod budget;
pub mod cli;
pub mod datamodel;
pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod lexical;
pub mod ranker;
pub mod rng;
pub mod selection;

pub use error::{Error, Result};
