//! Tokenization, inverted index and BM25 retrieval.
//!
//! BM25 here is the non-negative (Lucene) variant:
//!
//! ```text
//! score(q, d) = Σ_{t ∈ q} idf(t) · tf·(k1+1) / (tf + k1·(1 − b + b·dl/avgdl))
//! idf(t)      = ln(1 + (N − df + 0.5) / (df + 0.5))
//! ```
//!
//! Query terms are summed in the order given, repeated terms included.

mod index;
mod persist;

pub use index::{build_index, Bm25Params, InvertedIndex, Posting};

/// Lowercases and splits on every non-alphanumeric code point.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}
