//! Tokenized texts and the hashed joint features of the cross ranker.

use std::collections::BTreeMap;

use super::hashing::{bucket, combine, sign, token_hash};
use crate::datamodel::Corpus;
use crate::lexical::tokenize;

/// A text reduced to its token hashes, in order, with repeats.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PreparedText {
    tokens: Vec<u64>,
}

impl PreparedText {
    pub fn new(text: &str) -> Self {
        Self {
            tokens: tokenize(text).iter().map(|t| token_hash(t)).collect(),
        }
    }

    pub fn tokens(&self) -> &[u64] {
        &self.tokens
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    /// Distinct tokens with their counts, ordered by hash.
    pub fn counts(&self) -> BTreeMap<u64, u32> {
        let mut m = BTreeMap::new();
        for &t in &self.tokens {
            *m.entry(t).or_insert(0) += 1;
        }
        m
    }
}

/// Every corpus text prepared once, addressed by corpus ordinal.
#[derive(Debug, Clone, Default)]
pub struct PreparedCorpus {
    texts: Vec<PreparedText>,
}

impl PreparedCorpus {
    pub fn new(corpus: &Corpus) -> Self {
        Self {
            texts: corpus.iter().map(|(_, t)| PreparedText::new(t)).collect(),
        }
    }

    pub fn get(&self, ordinal: usize) -> &PreparedText {
        &self.texts[ordinal]
    }

    pub fn len(&self) -> usize {
        self.texts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.texts.is_empty()
    }
}

// Salts keep the four feature families in separate hash spaces.
pub(crate) const SALT_QUERY: u64 = 0x7175_6572_79;
pub(crate) const SALT_MATCH: u64 = 0x6d61_7463_68;
pub(crate) const SALT_PAIR: u64 = 0x7061_6972;
pub(crate) const SALT_OVERLAP: u64 = 0x6f76_6572_6c61_70;

/// Calls `emit(bucket, value)` for every hashed joint feature; buckets
/// may repeat.
pub(crate) fn for_each_cross_feature(
    query: &PreparedText,
    doc: &PreparedText,
    dim: usize,
    seed: u64,
    mut emit: impl FnMut(usize, f64),
) {
    let mut add = |key: u64, value: f64| emit(bucket(key, seed, dim), sign(key, seed) * value);
    let q = query.counts();
    if q.is_empty() {
        return;
    }
    let uq = q.len() as f64;
    for &qt in q.keys() {
        add(combine(qt, SALT_QUERY), 1.0 / uq);
    }
    let d = doc.counts();
    if d.is_empty() {
        return;
    }
    let mut overlap = 0usize;
    for &qt in q.keys() {
        if let Some(&tf) = d.get(&qt) {
            overlap += 1;
            add(combine(qt, SALT_MATCH), f64::from(tf).ln_1p());
        }
    }
    add(SALT_OVERLAP, overlap as f64 / uq);
    let pair_weight = 1.0 / (uq * d.len() as f64).sqrt();
    for &qt in q.keys() {
        for &dt in d.keys() {
            add(combine(combine(qt, dt), SALT_PAIR), pair_weight);
        }
    }
}

/// Joint query/document features hashed into `dim` signed buckets.
///
/// With `U_q`, `U_d` the distinct query and document tokens:
///
/// * query unigram `qt`:        `1/|U_q|`
/// * exact match `qt ∈ U_d`:    `ln(1 + tf_d(qt))`
/// * overlap ratio:              `|U_q ∩ U_d| / |U_q|`
/// * co-occurrence `(qt, dt)`:  `1/sqrt(|U_q|·|U_d|)`
///
/// An empty document leaves only the unigram block, which is what the
/// cross ranker uses as its query representation.
pub fn cross_features(query: &PreparedText, doc: &PreparedText, dim: usize, seed: u64) -> Vec<f64> {
    let mut phi = vec![0.0; dim];
    for_each_cross_feature(query, doc, dim, seed, |i, v| phi[i] += v);
    phi
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prepared_text_keeps_repeats() {
        let p = PreparedText::new("a b a");
        assert_eq!(p.len(), 3);
        assert_eq!(p.counts().len(), 2);
        assert!(PreparedText::new(" , ").is_empty());
    }

    #[test]
    fn empty_query_has_no_features() {
        let phi = cross_features(&PreparedText::new(""), &PreparedText::new("x y"), 16, 1);
        assert!(phi.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn empty_doc_leaves_only_unigrams() {
        let q = PreparedText::new("alpha beta");
        let phi = cross_features(&q, &PreparedText::new(""), 1024, 3);
        let mass: f64 = phi.iter().map(|v| v.abs()).sum();
        assert!((mass - 1.0).abs() < 1e-12, "{mass}");
    }
}
