use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{numbered_lines, read_text, write_text, Corpus, DocumentId, QueryId};
use crate::error::{Error, Result};

/// A (query, relevant passage, irrelevant passage) training unit.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TrainingTriplet {
    pub query: QueryId,
    pub positive: DocumentId,
    pub negative: DocumentId,
}

impl TrainingTriplet {
    pub fn new(query: QueryId, positive: DocumentId, negative: DocumentId) -> Result<Self> {
        if positive == negative {
            return Err(Error::invalid(format!(
                "triplet for {query}: positive and negative are both {positive}"
            )));
        }
        Ok(Self {
            query,
            positive,
            negative,
        })
    }

    /// Checks that both documents exist in `corpus`.
    pub fn validate(&self, corpus: &Corpus) -> Result<()> {
        for doc in [&self.positive, &self.negative] {
            if !corpus.contains(doc) {
                return Err(Error::invalid(format!(
                    "triplet for {} references unknown document {doc}",
                    self.query
                )));
            }
        }
        Ok(())
    }
}

pub fn triplets_to_tsv(triplets: &[TrainingTriplet]) -> String {
    let mut out = String::new();
    for t in triplets {
        out.push_str(&format!("{}\t{}\t{}\n", t.query, t.positive, t.negative));
    }
    out
}

pub fn write_triplets(path: impl AsRef<Path>, triplets: &[TrainingTriplet]) -> Result<()> {
    write_text(path.as_ref(), &triplets_to_tsv(triplets))
}

pub fn parse_triplets(text: &str, path: &Path) -> Result<Vec<TrainingTriplet>> {
    let mut out = Vec::new();
    for (line_no, line) in numbered_lines(text) {
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 3 {
            return Err(Error::parse(path, line_no, format!("expected 3 tab-separated fields, found {}", f.len())));
        }
        let err = |e: Error| Error::parse(path, line_no, e.to_string());
        let t = TrainingTriplet::new(
            f[0].parse().map_err(err)?,
            f[1].parse().map_err(err)?,
            f[2].parse().map_err(err)?,
        )
        .map_err(err)?;
        out.push(t);
    }
    Ok(out)
}

pub fn read_triplets(path: impl AsRef<Path>) -> Result<Vec<TrainingTriplet>> {
    let path = path.as_ref();
    parse_triplets(&read_text(path)?, path)
}
