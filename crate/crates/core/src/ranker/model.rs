use rand::Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::features::{cross_features, for_each_cross_feature, PreparedCorpus, PreparedText};
use super::hashing::bucket;
use super::train::{self, GradBuffer, TrainParams};
use super::{Architecture, RankerConfig, WeightInit};
use crate::datamodel::{Corpus, QueryId, QuerySet, RankedList, TrainingTriplet};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Behaviour shared by every trainable ranker.
pub trait TrainableRanker: Sized {
    fn score(&self, query: &str, doc: &str) -> f64;

    fn encode_query(&self, query: &str) -> Vec<f64>;

    fn rerank(&self, query: &str, candidates: &RankedList, corpus: &Corpus) -> Result<RankedList>;

    /// Returns a trained copy; `self` is left untouched.
    #[allow(clippy::too_many_arguments)]
    fn train(
        &self,
        params: &TrainParams,
        triplets: &[TrainingTriplet],
        queries: &QuerySet,
        corpus: &Corpus,
        epochs: usize,
        seed: u64,
    ) -> Result<Self>;

    /// Fresh weights of the same shape.
    fn reset(&self, init: WeightInit, seed: u64) -> Self;
}

/// Weights plus everything needed to interpret them.
///
/// `weights` is row-major with shape `[rows, dim]`: one row for `cross`,
/// `buckets` rows for `bi` and `maxsim`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankerState {
    pub(super) architecture: Architecture,
    pub(super) dim: usize,
    pub(super) rows: usize,
    pub(super) hash_seed: u64,
    pub(super) weights: Vec<f64>,
    pub(super) step: u64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl RankerState {
    pub fn new(config: &RankerConfig, seed: u64) -> Self {
        Self::with_init(config.architecture, config.dim, config.buckets, config.hash_seed, config.init, seed)
    }

    pub fn zeros(config: &RankerConfig) -> Self {
        Self::with_init(config.architecture, config.dim, config.buckets, config.hash_seed, WeightInit::Zero, 0)
    }

    fn with_init(architecture: Architecture, dim: usize, buckets: usize, hash_seed: u64, init: WeightInit, seed: u64) -> Self {
        let rows = match architecture {
            Architecture::Cross => 1,
            Architecture::Bi | Architecture::MaxSim => buckets,
        };
        let weights = match init {
            WeightInit::Zero => vec![0.0; rows * dim],
            WeightInit::Uniform => {
                let bound = 1.0 / (dim as f64).sqrt();
                let mut rng = rng_from_seed(seed);
                (0..rows * dim).map(|_| rng.gen_range(-bound..=bound)).collect()
            }
        };
        Self {
            architecture,
            dim,
            rows,
            hash_seed,
            weights,
            step: 0,
        }
    }

    /// Rebuilds a state from raw parts, checking the declared shape.
    pub fn from_parts(
        architecture: Architecture,
        dim: usize,
        rows: usize,
        hash_seed: u64,
        weights: Vec<f64>,
        step: u64,
    ) -> Result<Self> {
        if dim == 0 || rows == 0 {
            return Err(Error::Checkpoint("dim and rows must be >= 1".into()));
        }
        if architecture == Architecture::Cross && rows != 1 {
            return Err(Error::Checkpoint(format!("cross ranker must have 1 row, found {rows}")));
        }
        if weights.len() != rows * dim {
            return Err(Error::Checkpoint(format!(
                "weight length {} does not match shape [{rows}, {dim}]",
                weights.len()
            )));
        }
        Ok(Self {
            architecture,
            dim,
            rows,
            hash_seed,
            weights,
            step,
        })
    }

    pub fn architecture(&self) -> Architecture {
        self.architecture
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn hash_seed(&self) -> u64 {
        self.hash_seed
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    /// Hex digest of the shape-defining settings.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update([self.architecture.code()]);
        h.update((self.dim as u64).to_le_bytes());
        h.update((self.rows as u64).to_le_bytes());
        h.update(self.hash_seed.to_le_bytes());
        h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Errors unless this state has the architecture and shape `config`
    /// would create.
    pub fn check_compatible(&self, config: &RankerConfig) -> Result<()> {
        let expected = RankerState::zeros(config);
        if self.architecture != config.architecture {
            return Err(Error::Checkpoint(format!(
                "checkpoint architecture {} does not match configured {}",
                self.architecture, config.architecture
            )));
        }
        if self.fingerprint() != expected.fingerprint() {
            return Err(Error::Checkpoint(format!(
                "checkpoint shape [{}, {}] seed {} does not match config [{}, {}] seed {}",
                self.rows, self.dim, self.hash_seed, expected.rows, expected.dim, expected.hash_seed
            )));
        }
        Ok(())
    }

    pub(super) fn row_of(&self, token: u64) -> usize {
        bucket(token, self.hash_seed, self.rows)
    }

    fn row(&self, r: usize) -> &[f64] {
        &self.weights[r * self.dim..(r + 1) * self.dim]
    }

    fn mean_embedding(&self, text: &PreparedText) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        if text.is_empty() {
            return v;
        }
        for &t in text.tokens() {
            for (acc, w) in v.iter_mut().zip(self.row(self.row_of(t))) {
                *acc += w;
            }
        }
        let n = text.len() as f64;
        v.iter_mut().for_each(|x| *x /= n);
        v
    }

    /// Index of the document token with the highest similarity to `qrow`
    /// (first one on ties) and that similarity.
    fn best_match(&self, qrow: &[f64], doc: &PreparedText) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for (i, &t) in doc.tokens().iter().enumerate() {
            let s = dot(qrow, self.row(self.row_of(t)));
            if s > best.1 {
                best = (i, s);
            }
        }
        best
    }

    pub fn score_prepared(&self, query: &PreparedText, doc: &PreparedText) -> f64 {
        if query.is_empty() || doc.is_empty() {
            return 0.0;
        }
        match self.architecture {
            Architecture::Cross => {
                let mut s = 0.0;
                for_each_cross_feature(query, doc, self.dim, self.hash_seed, |i, v| s += self.weights[i] * v);
                s
            }
            Architecture::Bi => dot(&self.mean_embedding(query), &self.mean_embedding(doc)),
            Architecture::MaxSim => query
                .tokens()
                .iter()
                .map(|&qt| self.best_match(self.row(self.row_of(qt)), doc).1)
                .sum(),
        }
    }

    pub fn encode_prepared(&self, query: &PreparedText) -> Vec<f64> {
        match self.architecture {
            Architecture::Cross => {
                let phi = cross_features(query, &PreparedText::default(), self.dim, self.hash_seed);
                phi.iter().zip(&self.weights).map(|(p, w)| p * w).collect()
            }
            Architecture::Bi | Architecture::MaxSim => self.mean_embedding(query),
        }
    }

    /// Adds `coeff · ∂score/∂weights` into `grad`.
    pub(super) fn accumulate_score_grad(&self, query: &PreparedText, doc: &PreparedText, coeff: f64, grad: &mut GradBuffer) {
        if query.is_empty() || doc.is_empty() || coeff == 0.0 {
            return;
        }
        match self.architecture {
            Architecture::Cross => {
                let row = grad.row_mut(0);
                for_each_cross_feature(query, doc, self.dim, self.hash_seed, |i, v| row[i] += coeff * v);
            }
            Architecture::Bi => {
                let vq = self.mean_embedding(query);
                let vd = self.mean_embedding(doc);
                let cq = coeff / query.len() as f64;
                for &t in query.tokens() {
                    for (g, x) in grad.row_mut(self.row_of(t)).iter_mut().zip(&vd) {
                        *g += cq * x;
                    }
                }
                let cd = coeff / doc.len() as f64;
                for &t in doc.tokens() {
                    for (g, x) in grad.row_mut(self.row_of(t)).iter_mut().zip(&vq) {
                        *g += cd * x;
                    }
                }
            }
            Architecture::MaxSim => {
                for &qt in query.tokens() {
                    let qr = self.row_of(qt);
                    let (i, _) = self.best_match(self.row(qr), doc);
                    let dr = self.row_of(doc.tokens()[i]);
                    for (g, x) in grad.row_mut(qr).iter_mut().zip(self.row(dr)) {
                        *g += coeff * x;
                    }
                    for (g, x) in grad.row_mut(dr).iter_mut().zip(self.row(qr)) {
                        *g += coeff * x;
                    }
                }
            }
        }
    }

    /// Reorders `candidates` by ranker score. Scoring runs in parallel;
    /// the result does not depend on the thread count.
    pub fn rerank_prepared(
        &self,
        query: &PreparedText,
        candidates: &RankedList,
        corpus: &Corpus,
        prepared: &PreparedCorpus,
    ) -> Result<RankedList> {
        let ordinals = candidates
            .docs()
            .map(|d| {
                corpus
                    .ordinal(d)
                    .ok_or_else(|| Error::invalid(format!("candidate {d} is not in the corpus")))
            })
            .collect::<Result<Vec<_>>>()?;
        let scores: Vec<f64> = ordinals
            .par_iter()
            .map(|&o| self.score_prepared(query, prepared.get(o)))
            .collect();
        RankedList::from_scored(candidates.query().clone(), candidates.docs().cloned().zip(scores))
    }

    /// Scores the whole corpus and keeps the top `k`.
    pub fn retrieve_full(
        &self,
        query_id: &QueryId,
        query: &PreparedText,
        corpus: &Corpus,
        prepared: &PreparedCorpus,
        k: usize,
    ) -> Result<RankedList> {
        let scores: Vec<f64> = (0..prepared.len())
            .into_par_iter()
            .map(|o| self.score_prepared(query, prepared.get(o)))
            .collect();
        let list = RankedList::from_scored(query_id.clone(), corpus.ids().cloned().zip(scores))?;
        Ok(list.top(k))
    }
}

impl TrainableRanker for RankerState {
    fn score(&self, query: &str, doc: &str) -> f64 {
        self.score_prepared(&PreparedText::new(query), &PreparedText::new(doc))
    }

    fn encode_query(&self, query: &str) -> Vec<f64> {
        self.encode_prepared(&PreparedText::new(query))
    }

    fn rerank(&self, query: &str, candidates: &RankedList, corpus: &Corpus) -> Result<RankedList> {
        let prepared_query = PreparedText::new(query);
        let ordinals = candidates
            .docs()
            .map(|d| {
                corpus
                    .ordinal(d)
                    .ok_or_else(|| Error::invalid(format!("candidate {d} is not in the corpus")))
            })
            .collect::<Result<Vec<_>>>()?;
        let scores: Vec<f64> = ordinals
            .par_iter()
            .map(|&o| self.score_prepared(&prepared_query, &PreparedText::new(corpus.text_at(o).unwrap_or(""))))
            .collect();
        RankedList::from_scored(candidates.query().clone(), candidates.docs().cloned().zip(scores))
    }

    fn train(
        &self,
        params: &TrainParams,
        triplets: &[TrainingTriplet],
        queries: &QuerySet,
        corpus: &Corpus,
        epochs: usize,
        seed: u64,
    ) -> Result<Self> {
        train::train(self, params, triplets, queries, corpus, epochs, seed).map(|o| o.state)
    }

    fn reset(&self, init: WeightInit, seed: u64) -> Self {
        RankerState::with_init(self.architecture, self.dim, self.rows, self.hash_seed, init, seed)
    }
}
