use std::collections::BTreeMap;
use std::path::Path;

use super::{numbered_lines, read_text, write_text, DocumentId, QueryId};
use crate::error::{Error, Result};

pub const DEFAULT_RELEVANCE_THRESHOLD: u32 = 1;

/// Graded relevance judgments keyed by query then document.
///
/// `is_relevant(q, d)` holds iff the grade is at least `threshold`. Metrics
/// use the raw grades; training triplets use the thresholded view.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Qrels {
    judgments: BTreeMap<QueryId, BTreeMap<DocumentId, u32>>,
    threshold: u32,
}

impl Default for Qrels {
    fn default() -> Self {
        Self {
            judgments: BTreeMap::new(),
            threshold: DEFAULT_RELEVANCE_THRESHOLD,
        }
    }
}

impl Qrels {
    pub fn new(threshold: u32) -> Result<Self> {
        if threshold == 0 {
            return Err(Error::invalid("relevance threshold must be >= 1"));
        }
        Ok(Self {
            judgments: BTreeMap::new(),
            threshold,
        })
    }

    pub fn threshold(&self) -> u32 {
        self.threshold
    }

    pub fn insert(&mut self, query: QueryId, doc: DocumentId, grade: u32) -> Result<()> {
        let per_query = self.judgments.entry(query.clone()).or_default();
        if per_query.contains_key(&doc) {
            return Err(Error::invalid(format!("duplicate judgment for ({query}, {doc})")));
        }
        per_query.insert(doc, grade);
        Ok(())
    }

    pub fn grade(&self, query: &QueryId, doc: &DocumentId) -> Option<u32> {
        self.judgments.get(query)?.get(doc).copied()
    }

    pub fn is_relevant(&self, query: &QueryId, doc: &DocumentId) -> bool {
        self.grade(query, doc).is_some_and(|g| g >= self.threshold)
    }

    pub fn judged(&self, query: &QueryId) -> Option<&BTreeMap<DocumentId, u32>> {
        self.judgments.get(query)
    }

    pub fn relevant_docs<'a>(&'a self, query: &QueryId) -> impl Iterator<Item = &'a DocumentId> + 'a {
        let threshold = self.threshold;
        self.judgments
            .get(query)
            .into_iter()
            .flat_map(move |m| m.iter().filter(move |(_, &g)| g >= threshold).map(|(d, _)| d))
    }

    pub fn queries(&self) -> impl Iterator<Item = &QueryId> {
        self.judgments.keys()
    }

    /// The judgments of `keep` only.
    pub fn restrict<'a>(&self, keep: impl IntoIterator<Item = &'a QueryId>) -> Qrels {
        let mut judgments = BTreeMap::new();
        for q in keep {
            if let Some(m) = self.judgments.get(q) {
                judgments.insert(q.clone(), m.clone());
            }
        }
        Qrels {
            judgments,
            threshold: self.threshold,
        }
    }

    /// Total number of (query, document) judgments.
    pub fn len(&self) -> usize {
        self.judgments.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = (&QueryId, &DocumentId, u32)> {
        self.judgments
            .iter()
            .flat_map(|(q, m)| m.iter().map(move |(d, &g)| (q, d, g)))
    }

    pub fn parse_str(text: &str, path: &Path, threshold: u32) -> Result<Self> {
        let mut out = Self::new(threshold)?;
        for (line_no, line) in numbered_lines(text) {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(Error::parse(
                    path,
                    line_no,
                    format!("expected 4 fields, found {}", fields.len()),
                ));
            }
            let err = |e: Error| Error::parse(path, line_no, e.to_string());
            let query: QueryId = fields[0].parse().map_err(err)?;
            let doc: DocumentId = fields[2].parse().map_err(err)?;
            let grade: u32 = fields[3].parse().map_err(|_| {
                Error::parse(path, line_no, format!("grade {:?} is not a non-negative integer", fields[3]))
            })?;
            out.insert(query, doc, grade).map_err(err)?;
        }
        Ok(out)
    }

    pub fn read(path: impl AsRef<Path>, threshold: u32) -> Result<Self> {
        let path = path.as_ref();
        Self::parse_str(&read_text(path)?, path, threshold)
    }

    pub fn to_trec_string(&self) -> String {
        let mut out = String::new();
        for (q, d, g) in self.iter() {
            out.push_str(&format!("{q} 0 {d} {g}\n"));
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        write_text(path.as_ref(), &self.to_trec_string())
    }
}
