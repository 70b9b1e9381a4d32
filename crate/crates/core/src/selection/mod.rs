//! Picking the next batch to annotate.
//!
//! | strategy      | unit            | signal                                   |
//! |---------------|-----------------|------------------------------------------|
//! | `random`      | query           | none                                     |
//! | `uncertainty` | (query, doc)    | score closest to the global mean score   |
//! | `qbc`         | query           | vote entropy across a ranker committee   |
//! | `diversity`   | query           | one query per k-means cluster            |

mod entropy;
mod kmeans;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::{IteratorRandom, SliceRandom};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datamodel::{Corpus, DocumentId, QueryId, QuerySet, RankedList, Run};
use crate::error::{Error, Result};
use crate::ranker::{PreparedCorpus, PreparedText, RankerState};

pub use entropy::vote_entropy;
pub use kmeans::{kmeans, Clustering};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Random,
    Uncertainty,
    Qbc,
    Diversity,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::Random, Strategy::Uncertainty, Strategy::Qbc, Strategy::Diversity];

    pub fn tag(self) -> &'static str {
        match self {
            Strategy::Random => "random",
            Strategy::Uncertainty => "uncertainty",
            Strategy::Qbc => "qbc",
            Strategy::Diversity => "diversity",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.tag() == s)
            .ok_or_else(|| Error::Config(format!("unknown strategy {s:?} (random|uncertainty|qbc|diversity)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionConfig {
    pub strategy: Strategy,
    /// Items selected per iteration.
    pub select_size: usize,
    /// BM25 candidates scored per query.
    pub candidate_depth: usize,
    pub committee_size: usize,
    /// Share of the annotated set each committee member trains on.
    pub member_fraction: f64,
    /// Pair depth for vote entropy; `None` uses `candidate_depth`.
    pub pair_depth: Option<usize>,
    pub kmeans_max_iters: usize,
    /// Uncertainty only: at most one selected pair per query.
    pub one_pair_per_query: bool,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::Random,
            select_size: 20,
            candidate_depth: 100,
            committee_size: 2,
            member_fraction: 0.8,
            pair_depth: None,
            kmeans_max_iters: 100,
            one_pair_per_query: false,
        }
    }
}

impl SelectionConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(format!("selection: {m}")));
        if self.select_size == 0 || self.candidate_depth == 0 {
            return fail("select_size and candidate_depth must be >= 1");
        }
        if self.committee_size < 2 {
            return fail("committee_size must be >= 2");
        }
        if !(self.member_fraction > 0.0 && self.member_fraction <= 1.0) {
            return fail("member_fraction must be in (0, 1]");
        }
        if self.pair_depth.is_some_and(|k| k < 2) {
            return fail("pair_depth must be >= 2");
        }
        Ok(())
    }

    pub fn effective_pair_depth(&self) -> usize {
        self.pair_depth.unwrap_or(self.candidate_depth)
    }
}

/// What a strategy picked, with one diagnostic score per item.
#[derive(Debug, Clone, PartialEq)]
pub enum Selection {
    Queries(Vec<(QueryId, f64)>),
    Pairs(Vec<(QueryId, DocumentId, f64)>),
}

impl Selection {
    pub fn len(&self) -> usize {
        match self {
            Selection::Queries(v) => v.len(),
            Selection::Pairs(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Selected queries in selection order; a query appears once even when
    /// several of its pairs were picked.
    pub fn queries(&self) -> Vec<QueryId> {
        match self {
            Selection::Queries(v) => v.iter().map(|(q, _)| q.clone()).collect(),
            Selection::Pairs(v) => {
                let mut out: Vec<QueryId> = Vec::new();
                for (q, _, _) in v {
                    if !out.contains(q) {
                        out.push(q.clone());
                    }
                }
                out
            }
        }
    }
}

/// Everything the model-based strategies need to rerank pool queries.
#[derive(Clone, Copy)]
pub struct PoolContext<'a> {
    pub queries: &'a QuerySet,
    pub corpus: &'a Corpus,
    pub prepared: &'a PreparedCorpus,
    pub bm25: &'a Run,
    pub depth: usize,
}

impl PoolContext<'_> {
    fn candidates(&self, query: &QueryId) -> Result<RankedList> {
        self.bm25
            .get(query)
            .map(|l| l.top(self.depth))
            .ok_or_else(|| Error::invalid(format!("no BM25 candidates for pool query {query}")))
    }

    fn prepared_query(&self, query: &QueryId) -> Result<PreparedText> {
        self.queries
            .get(query)
            .map(PreparedText::new)
            .ok_or_else(|| Error::invalid(format!("unknown query {query}")))
    }

    /// The ranker's reordering of one query's BM25 top `depth`.
    pub fn rerank(&self, state: &RankerState, query: &QueryId) -> Result<RankedList> {
        state.rerank_prepared(&self.prepared_query(query)?, &self.candidates(query)?, self.corpus, self.prepared)
    }

    /// [`Self::rerank`] for every pool query, in parallel.
    pub fn rerank_pool(&self, state: &RankerState, pool: &[QueryId]) -> Result<BTreeMap<QueryId, RankedList>> {
        let lists = pool.par_iter().map(|q| self.rerank(state, q)).collect::<Result<Vec<_>>>()?;
        Ok(pool.iter().cloned().zip(lists).collect())
    }
}

/// Uniform sample without replacement of `min(s, |pool|)` queries.
pub fn select_random(pool: &[QueryId], s: usize, rng: &mut impl Rng) -> Result<Vec<QueryId>> {
    if pool.is_empty() {
        return Err(Error::invalid("cannot select from an empty pool"));
    }
    if s == 0 {
        return Err(Error::invalid("selection size must be >= 1"));
    }
    let mut picked = pool.iter().cloned().choose_multiple(rng, s.min(pool.len()));
    picked.shuffle(rng);
    Ok(picked)
}

/// The `s` pairs whose score is closest to the mean of all scores.
///
/// Ties go by `(|score − μ|, query id, doc id)` ascending, so the input
/// order never matters. Each returned item carries `|score − μ|`.
pub fn select_uncertainty_scored(
    scores: &[(QueryId, DocumentId, f64)],
    s: usize,
    one_per_query: bool,
) -> Result<Vec<(QueryId, DocumentId, f64)>> {
    if scores.is_empty() {
        return Err(Error::invalid("uncertainty selection found no candidates"));
    }
    let mut sorted: Vec<&(QueryId, DocumentId, f64)> = scores.iter().collect();
    // the mean is taken in canonical order so it never depends on input order
    sorted.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
    let mu = sorted.iter().map(|t| t.2).sum::<f64>() / sorted.len() as f64;
    let mut ranked: Vec<(QueryId, DocumentId, f64)> =
        sorted.into_iter().map(|(q, d, x)| (q.clone(), d.clone(), (x - mu).abs())).collect();
    ranked.sort_by(|a, b| {
        a.2.total_cmp(&b.2)
            .then_with(|| a.0.cmp(&b.0))
            .then_with(|| a.1.cmp(&b.1))
    });
    let mut out = Vec::with_capacity(s);
    for item in ranked {
        if out.len() == s {
            break;
        }
        if one_per_query && out.iter().any(|(q, _, _): &(QueryId, DocumentId, f64)| *q == item.0) {
            continue;
        }
        out.push(item);
    }
    Ok(out)
}

/// Uncertainty selection from the ranker's scores of each pool query's
/// candidates.
pub fn select_uncertainty(
    reranked: &BTreeMap<QueryId, RankedList>,
    pool: &[QueryId],
    s: usize,
    one_per_query: bool,
) -> Result<Vec<(QueryId, DocumentId, f64)>> {
    let mut scores = Vec::new();
    for q in pool {
        let list = reranked
            .get(q)
            .ok_or_else(|| Error::invalid(format!("no scored candidates for pool query {q}")))?;
        scores.extend(list.entries().iter().map(|e| (q.clone(), e.doc.clone(), e.score)));
    }
    select_uncertainty_scored(&scores, s, one_per_query)
}

/// The `s` highest-entropy queries, ties by query id ascending.
pub fn top_by_entropy(entropies: Vec<(QueryId, f64)>, s: usize) -> Vec<(QueryId, f64)> {
    let mut v = entropies;
    v.sort_by(|a, b| match b.1.total_cmp(&a.1) {
        Ordering::Equal => a.0.cmp(&b.0),
        o => o,
    });
    v.truncate(s);
    v
}

/// Query-by-committee: every member reranks each pool query's
/// candidates, and the queries they disagree on most are picked.
pub fn select_qbc(
    committee: &[RankerState],
    pool: &[QueryId],
    ctx: &PoolContext<'_>,
    pair_depth: usize,
    s: usize,
) -> Result<Vec<(QueryId, f64)>> {
    if committee.len() < 2 {
        return Err(Error::invalid("query-by-committee needs at least 2 members"));
    }
    if pool.is_empty() {
        return Err(Error::invalid("cannot select from an empty pool"));
    }
    let entropies = pool
        .par_iter()
        .map(|q| {
            let rankings = committee.iter().map(|m| ctx.rerank(m, q)).collect::<Result<Vec<_>>>()?;
            Ok((q.clone(), vote_entropy(&rankings, pair_depth)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(top_by_entropy(entropies, s))
}

/// Clusters encoded queries with k = `min(s, |pool|)` and samples one
/// query per cluster. Each item carries its cluster index.
pub fn select_diversity(
    state: &RankerState,
    pool: &[QueryId],
    queries: &QuerySet,
    s: usize,
    max_iters: usize,
    rng: &mut impl Rng,
) -> Result<Vec<(QueryId, f64)>> {
    if pool.is_empty() {
        return Err(Error::invalid("cannot select from an empty pool"));
    }
    let points = pool
        .iter()
        .map(|q| {
            queries
                .get(q)
                .map(|t| state.encode_prepared(&PreparedText::new(t)))
                .ok_or_else(|| Error::invalid(format!("unknown query {q}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let k = s.min(pool.len());
    let clustering = kmeans(&points, k, max_iters, rng)?;
    Ok((0..k)
        .map(|c| {
            let members: Vec<usize> = clustering.members(c).collect();
            let pick = members[rng.gen_range(0..members.len())];
            (pool[pick].clone(), c as f64)
        })
        .collect())
}
