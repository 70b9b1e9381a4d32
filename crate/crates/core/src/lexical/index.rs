use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::tokenize;
use crate::datamodel::{Corpus, DocumentId, QueryId, RankedList};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 0.9, b: 0.4 }
    }
}

impl Bm25Params {
    pub fn validate(&self) -> Result<()> {
        if !(self.k1 >= 0.0 && self.k1.is_finite()) {
            return Err(Error::invalid(format!("k1 must be >= 0, got {}", self.k1)));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(Error::invalid(format!("b must lie in [0, 1], got {}", self.b)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Posting {
    pub doc: u32,
    pub tf: u32,
}

/// Immutable BM25 index over a corpus. Document ordinals follow corpus
/// order; postings are sorted by ordinal.
#[derive(Debug, Clone, PartialEq)]
pub struct InvertedIndex {
    pub(super) params: Bm25Params,
    pub(super) doc_ids: Vec<DocumentId>,
    pub(super) doc_lengths: Vec<u32>,
    pub(super) avgdl: f64,
    pub(super) postings: BTreeMap<String, Vec<Posting>>,
    pub(super) stopwords: BTreeSet<String>,
}

/// Builds an index with no stopwords.
pub fn build_index(corpus: &Corpus, params: Bm25Params) -> Result<InvertedIndex> {
    InvertedIndex::build(corpus, params, BTreeSet::new())
}

impl InvertedIndex {
    pub fn build(corpus: &Corpus, params: Bm25Params, stopwords: BTreeSet<String>) -> Result<Self> {
        params.validate()?;
        if corpus.is_empty() {
            return Err(Error::invalid("cannot index an empty corpus"));
        }
        let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        let mut doc_ids = Vec::with_capacity(corpus.len());
        let mut doc_lengths = Vec::with_capacity(corpus.len());
        for (ordinal, (id, text)) in corpus.iter().enumerate() {
            let mut counts: BTreeMap<String, u32> = BTreeMap::new();
            let mut len = 0u32;
            for term in tokenize(text) {
                if stopwords.contains(&term) {
                    continue;
                }
                len += 1;
                *counts.entry(term).or_default() += 1;
            }
            for (term, tf) in counts {
                postings.entry(term).or_default().push(Posting {
                    doc: ordinal as u32,
                    tf,
                });
            }
            doc_ids.push(id.clone());
            doc_lengths.push(len);
        }
        let total: u64 = doc_lengths.iter().map(|&l| u64::from(l)).sum();
        let avgdl = total as f64 / doc_lengths.len() as f64;
        Ok(Self {
            params,
            doc_ids,
            doc_lengths,
            avgdl,
            postings,
            stopwords,
        })
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    pub fn num_docs(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn avgdl(&self) -> f64 {
        self.avgdl
    }

    pub fn doc_id(&self, ordinal: usize) -> &DocumentId {
        &self.doc_ids[ordinal]
    }

    pub fn doc_length(&self, ordinal: usize) -> u32 {
        self.doc_lengths[ordinal]
    }

    pub fn df(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map_or(&[], Vec::as_slice)
    }

    pub fn num_terms(&self) -> usize {
        self.postings.len()
    }

    pub fn stopwords(&self) -> &BTreeSet<String> {
        &self.stopwords
    }

    /// Tokenizes `text` and drops stopwords.
    pub fn analyze(&self, text: &str) -> Vec<String> {
        let mut terms = tokenize(text);
        terms.retain(|t| !self.stopwords.contains(t));
        terms
    }

    pub fn idf(&self, term: &str) -> f64 {
        let n = self.num_docs() as f64;
        let df = self.df(term) as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    fn contribution(&self, idf: f64, tf: u32, ordinal: usize) -> f64 {
        let Bm25Params { k1, b } = self.params;
        let tf = f64::from(tf);
        let dl = f64::from(self.doc_lengths[ordinal]);
        idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / self.avgdl))
    }

    /// BM25 score of one document. Zero when no query term occurs in it,
    /// and for every document of an all-empty corpus.
    pub fn bm25_score(&self, terms: &[String], ordinal: usize) -> f64 {
        if self.avgdl == 0.0 {
            return 0.0;
        }
        let mut score = 0.0;
        for term in terms {
            let list = self.postings(term);
            if let Ok(pos) = list.binary_search_by_key(&(ordinal as u32), |p| p.doc) {
                score += self.contribution(self.idf(term), list[pos].tf, ordinal);
            }
        }
        score
    }

    /// Term-at-a-time accumulation of every document's score.
    pub fn score_all(&self, terms: &[String]) -> Vec<f64> {
        let mut scores = vec![0.0; self.num_docs()];
        if self.avgdl == 0.0 {
            return scores;
        }
        for term in terms {
            let idf = self.idf(term);
            for p in self.postings(term) {
                scores[p.doc as usize] += self.contribution(idf, p.tf, p.doc as usize);
            }
        }
        scores
    }

    /// The `k` highest-scoring documents with positive score.
    pub fn retrieve_topk(&self, query: &QueryId, text: &str, k: usize) -> RankedList {
        let terms = self.analyze(text);
        let scores = self.score_all(&terms);
        let hits = scores
            .into_iter()
            .enumerate()
            .filter(|(_, s)| *s > 0.0)
            .map(|(ord, s)| (self.doc_ids[ord].clone(), s));
        RankedList::from_scored(query.clone(), hits)
            .expect("index holds unique ids and finite scores")
            .top(k)
    }
}
