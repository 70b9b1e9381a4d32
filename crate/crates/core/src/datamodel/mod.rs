//! Corpus, query, qrels, run and triplet types with TREC-compatible file
//! formats.
//!
//! | File                | Line layout                                 |
//! |---------------------|---------------------------------------------|
//! | collection/queries  | `<id>\t<text>`                              |
//! | qrels               | `<qid> 0 <docid> <grade>`                   |
//! | run                 | `<qid> Q0 <docid> <rank> <score> <tag>`     |
//! | triplets            | `<qid>\t<posid>\t<negid>`                   |
//!
//! All files are UTF-8 with LF line endings. Parsers report 1-based line
//! numbers and skip blank lines.

mod collection;
mod ids;
mod qrels;
mod run;
mod synthetic;
mod triplet;

pub use collection::{Collection, Corpus, QuerySet};
pub use ids::{DocumentId, QueryId};
pub use qrels::{Qrels, DEFAULT_RELEVANCE_THRESHOLD};
pub use run::{RankedList, Run, ScoredDoc};
pub use synthetic::{generate_synthetic, SyntheticData, SyntheticSpec};
pub use triplet::{parse_triplets, read_triplets, triplets_to_tsv, write_triplets, TrainingTriplet};

use std::path::Path;

use crate::error::{Error, Result};

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_text(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Non-blank lines with their 1-based line numbers.
pub(crate) fn numbered_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.split('\n')
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty())
}
