use std::path::Path;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::{hex, ExperimentConfig};
use crate::datamodel::{
    generate_synthetic, write_text, Corpus, QueryId, QuerySet, Qrels, Run, SyntheticSpec, DEFAULT_RELEVANCE_THRESHOLD,
};
use crate::error::{Error, Result};
use crate::evaluation::{ndcg_at_k, MetricResult};
use crate::lexical::{build_index, Bm25Params, InvertedIndex};
use crate::ranker::{PreparedCorpus, PreparedText, RankerState};

/// Everything an experiment reads: corpus, query splits, qrels, index.
#[derive(Debug, Clone)]
pub struct DataBundle {
    pub corpus: Corpus,
    pub train: QuerySet,
    pub test: QuerySet,
    pub qrels: Qrels,
    /// Held-out queries for early stopping.
    pub validation: Option<QuerySet>,
    pub index: InvertedIndex,
}

pub const CORPUS_FILE: &str = "corpus.tsv";
pub const TRAIN_FILE: &str = "train_queries.tsv";
pub const TEST_FILE: &str = "test_queries.tsv";
pub const VALIDATION_FILE: &str = "validation_queries.tsv";
pub const QRELS_FILE: &str = "qrels.txt";
pub const INDEX_FILE: &str = "index.bin";

impl DataBundle {
    pub fn new(corpus: Corpus, train: QuerySet, test: QuerySet, qrels: Qrels, bm25: Bm25Params) -> Result<Self> {
        if train.is_empty() || test.is_empty() {
            return Err(Error::invalid("train and test query sets must be non-empty"));
        }
        if let Some(q) = train.ids().find(|q| test.contains(q)) {
            return Err(Error::invalid(format!("query {q} is in both the train and test sets")));
        }
        let index = build_index(&corpus, bm25)?;
        Ok(Self {
            corpus,
            train,
            test,
            qrels,
            validation: None,
            index,
        })
    }

    pub fn synthetic(spec: &SyntheticSpec, seed: u64, bm25: Bm25Params) -> Result<Self> {
        let d = generate_synthetic(spec, seed)?;
        Self::new(d.corpus, d.train, d.test, d.qrels, bm25)
    }

    /// Reads a data directory. A saved index is used when its BM25
    /// parameters match `bm25`; otherwise the index is rebuilt.
    pub fn load(dir: &Path, bm25: Bm25Params) -> Result<Self> {
        let need = |name: &str| {
            let p = dir.join(name);
            if p.exists() {
                Ok(p)
            } else {
                Err(Error::invalid(format!("data directory {} has no {name}", dir.display())))
            }
        };
        let corpus = Corpus::read_tsv(need(CORPUS_FILE)?)?;
        let train = QuerySet::read_tsv(need(TRAIN_FILE)?)?;
        let test = QuerySet::read_tsv(need(TEST_FILE)?)?;
        let qrels = Qrels::read(need(QRELS_FILE)?, DEFAULT_RELEVANCE_THRESHOLD)?;
        let mut bundle = Self::new(corpus, train, test, qrels, bm25)?;
        let validation = dir.join(VALIDATION_FILE);
        if validation.exists() {
            bundle.validation = Some(QuerySet::read_tsv(validation)?);
        }
        let saved = dir.join(INDEX_FILE);
        if saved.exists() {
            let index = InvertedIndex::load(&saved)?;
            if index.params() == bm25 && index.num_docs() == bundle.corpus.len() {
                bundle.index = index;
            }
        }
        Ok(bundle)
    }

    /// Writes the bundle in the layout [`Self::load`] reads.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.corpus.write_tsv(dir.join(CORPUS_FILE))?;
        self.train.write_tsv(dir.join(TRAIN_FILE))?;
        self.test.write_tsv(dir.join(TEST_FILE))?;
        self.qrels.write(dir.join(QRELS_FILE))?;
        if let Some(v) = &self.validation {
            v.write_tsv(dir.join(VALIDATION_FILE))?;
        }
        self.index.save(dir.join(INDEX_FILE))
    }

    /// SHA-256 over the corpus, query splits, qrels and BM25 parameters.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for part in [
            self.corpus.to_tsv_string(),
            self.train.to_tsv_string(),
            self.test.to_tsv_string(),
            self.validation.as_ref().map(|v| v.to_tsv_string()).unwrap_or_default(),
            self.qrels.to_trec_string(),
            format!("{:?}", self.index.params()),
        ] {
            h.update((part.len() as u64).to_le_bytes());
            h.update(part.as_bytes());
        }
        hex(&h.finalize())
    }

    /// BM25 top `k` for every query of `queries`.
    pub fn bm25_run(&self, queries: &QuerySet, k: usize) -> Run {
        let ids: Vec<(&QueryId, &str)> = queries.iter().collect();
        let lists: Vec<_> = ids.par_iter().map(|(q, t)| self.index.retrieve_topk(q, t, k)).collect();
        let mut run = Run::new("bm25").expect("valid tag");
        for l in lists {
            run.insert(l);
        }
        run
    }

    pub(crate) fn check_index(&self, bm25: Bm25Params) -> Result<()> {
        if self.index.params() != bm25 {
            return Err(Error::Config(format!(
                "index was built with {:?} but the config asks for {bm25:?}",
                self.index.params()
            )));
        }
        Ok(())
    }
}

/// Precomputed retrieval state shared by every iteration.
pub(crate) struct Workspace<'a> {
    pub data: &'a DataBundle,
    pub prepared: PreparedCorpus,
    /// Training queries to the deepest depth any component needs.
    pub bm25_train: Run,
    pub bm25_test: Run,
    pub test_qrels: Qrels,
    pub validation: Option<(Run, Qrels)>,
}

impl<'a> Workspace<'a> {
    pub fn new(data: &'a DataBundle, config: &ExperimentConfig) -> Result<Self> {
        data.check_index(config.bm25)?;
        let depth = config
            .annotation
            .negative_depth
            .max(config.selection.candidate_depth)
            .max(config.annotation.annotation_depth);
        let test_qrels = data.qrels.restrict(data.test.ids());
        if test_qrels.is_empty() {
            return Err(Error::invalid("no test query has judgments"));
        }
        let validation = data.validation.as_ref().map(|v| {
            (
                data.bm25_run(v, config.selection.candidate_depth),
                data.qrels.restrict(v.ids()),
            )
        });
        Ok(Self {
            data,
            prepared: PreparedCorpus::new(&data.corpus),
            bm25_train: data.bm25_run(&data.train, depth),
            bm25_test: data.bm25_run(&data.test, config.selection.candidate_depth),
            test_qrels,
            validation,
        })
    }

    /// Reranks BM25 candidates of `queries` with `state`.
    pub fn rerank_run(&self, state: &RankerState, queries: &QuerySet, candidates: &Run) -> Result<Run> {
        let lists = candidates
            .iter()
            .collect::<Vec<_>>()
            .par_iter()
            .map(|(q, l)| {
                let text = queries
                    .get(q)
                    .ok_or_else(|| Error::invalid(format!("no text for query {q}")))?;
                state.rerank_prepared(&PreparedText::new(text), l, &self.data.corpus, &self.prepared)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut run = Run::new("ranker").expect("valid tag");
        for l in lists {
            run.insert(l);
        }
        Ok(run)
    }

    pub fn evaluate(&self, state: &RankerState, config: &ExperimentConfig) -> Result<MetricResult> {
        let run = self.rerank_run(state, &self.data.test, &self.bm25_test)?;
        ndcg_at_k(&run, &self.test_qrels, 10, config.gain)
    }

    /// Validation nDCG@10, or `None` without a validation split.
    pub fn validate(&self, state: &RankerState, config: &ExperimentConfig) -> Option<f64> {
        let (candidates, qrels) = self.validation.as_ref()?;
        let queries = self.data.validation.as_ref()?;
        let run = self.rerank_run(state, queries, candidates).ok()?;
        ndcg_at_k(&run, qrels, 10, config.gain).ok().map(|m| m.mean)
    }
}

pub(crate) fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_text(path, &s)
}
