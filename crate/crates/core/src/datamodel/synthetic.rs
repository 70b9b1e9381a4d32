//! Planted-topic corpora for desk-scale experiments.
//!
//! Each topic owns a small vocabulary (`t<topic>x<j>`) and a block of
//! documents; a shared noise vocabulary (`n<j>`) pads every document. A
//! query draws 2–4 tokens from its topic vocabulary and is planted into
//! `rel_per_query` documents of its topic, which receive the query tokens
//! (plus more topic tokens up to at least three). With `variant_rate` a
//! planted query token appears in its variant spelling `t<topic>v<j>`
//! instead, so exact matching alone misses part of the relevance signal
//! and a ranker has something to learn. Documents that are not
//! planted for any query carry noise and, with `distractor_rate`, one or
//! two tokens from a different topic.

use std::collections::BTreeMap;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Corpus, DocumentId, QueryId, QuerySet, Qrels};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub topics: usize,
    pub docs_per_topic: usize,
    pub noise_vocab: usize,
    pub topic_vocab: usize,
    pub train_queries_per_topic: usize,
    pub test_queries_per_topic: usize,
    pub rel_per_query: usize,
    pub min_noise_tokens: usize,
    pub max_noise_tokens: usize,
    /// Extra topic tokens (0..=n) added to planted documents.
    pub extra_topic_tokens: usize,
    pub distractor_rate: f64,
    /// Chance that a planted query token is written in its variant form.
    pub variant_rate: f64,
}

impl Default for SyntheticSpec {
    /// 2,000 documents, 300 training and 100 test queries.
    fn default() -> Self {
        Self {
            topics: 20,
            docs_per_topic: 100,
            noise_vocab: 2000,
            topic_vocab: 30,
            train_queries_per_topic: 15,
            test_queries_per_topic: 5,
            rel_per_query: 2,
            min_noise_tokens: 20,
            max_noise_tokens: 40,
            extra_topic_tokens: 3,
            distractor_rate: 0.3,
            variant_rate: 0.5,
        }
    }
}

/// Planted documents always carry at least this many topic tokens.
const MIN_TOPIC_TOKENS: usize = 3;

impl SyntheticSpec {
    fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::invalid(format!("synthetic spec: {m}")));
        if self.topics == 0 || self.docs_per_topic == 0 || self.noise_vocab == 0 {
            return fail("topics, docs_per_topic and noise_vocab must be >= 1");
        }
        if self.rel_per_query == 0 {
            return fail("rel_per_query must be >= 1");
        }
        if self.rel_per_query > self.docs_per_topic {
            return fail(&format!(
                "rel_per_query ({}) exceeds docs_per_topic ({})",
                self.rel_per_query, self.docs_per_topic
            ));
        }
        if self.topic_vocab < MIN_TOPIC_TOKENS {
            return fail("topic_vocab must be >= 3");
        }
        if self.min_noise_tokens > self.max_noise_tokens {
            return fail("min_noise_tokens exceeds max_noise_tokens");
        }
        if !(0.0..=1.0).contains(&self.distractor_rate) || !(0.0..=1.0).contains(&self.variant_rate) {
            return fail("distractor_rate and variant_rate must lie in [0, 1]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub corpus: Corpus,
    pub train: QuerySet,
    pub test: QuerySet,
    pub qrels: Qrels,
    /// Planted topic of every train and test query.
    pub query_topics: BTreeMap<QueryId, usize>,
}

fn topic_token(topic: usize, j: usize) -> String {
    format!("t{topic}x{j}")
}

fn variant_token(topic: usize, j: usize) -> String {
    format!("t{topic}v{j}")
}

struct PlantedQuery {
    topic: usize,
    test: bool,
    tokens: Vec<usize>,
    relevant_slots: Vec<usize>,
}

/// Generates a corpus, train/test query sets and qrels. The output is a
/// pure function of `(spec, seed)`.
pub fn generate_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<SyntheticData> {
    spec.validate()?;
    let mut rng = rng_from_seed(seed);
    let n_docs = spec.topics * spec.docs_per_topic;
    // topic token -> written as variant, per document slot
    let mut required: Vec<BTreeMap<usize, bool>> = vec![BTreeMap::new(); n_docs];

    let mut queries = Vec::new();
    for topic in 0..spec.topics {
        let per_topic = spec.train_queries_per_topic + spec.test_queries_per_topic;
        for n in 0..per_topic {
            let len = rng.gen_range(2..=4).min(spec.topic_vocab);
            let mut tokens = index::sample(&mut rng, spec.topic_vocab, len).into_vec();
            tokens.sort_unstable();
            let relevant_slots: Vec<usize> = index::sample(&mut rng, spec.docs_per_topic, spec.rel_per_query)
                .into_iter()
                .map(|j| topic * spec.docs_per_topic + j)
                .collect();
            for &slot in &relevant_slots {
                for &j in &tokens {
                    let variant = rng.gen_bool(spec.variant_rate);
                    required[slot].entry(j).or_insert(variant);
                }
            }
            queries.push(PlantedQuery {
                topic,
                test: n >= spec.train_queries_per_topic,
                tokens,
                relevant_slots,
            });
        }
    }

    let mut texts = Vec::with_capacity(n_docs);
    for (slot, req) in required.iter().enumerate() {
        let topic = slot / spec.docs_per_topic;
        let mut words: Vec<String> = Vec::new();
        if !req.is_empty() {
            let mut topic_tokens = req.clone();
            while topic_tokens.len() < MIN_TOPIC_TOKENS {
                topic_tokens.entry(rng.gen_range(0..spec.topic_vocab)).or_insert(false);
            }
            for _ in 0..rng.gen_range(0..=spec.extra_topic_tokens) {
                words.push(topic_token(topic, rng.gen_range(0..spec.topic_vocab)));
            }
            words.extend(topic_tokens.into_iter().map(|(j, variant)| {
                if variant {
                    variant_token(topic, j)
                } else {
                    topic_token(topic, j)
                }
            }));
        } else if spec.topics > 1 && rng.gen_bool(spec.distractor_rate) {
            let mut other = rng.gen_range(0..spec.topics - 1);
            if other >= topic {
                other += 1;
            }
            for _ in 0..rng.gen_range(1..=2) {
                words.push(topic_token(other, rng.gen_range(0..spec.topic_vocab)));
            }
        }
        let noise = rng.gen_range(spec.min_noise_tokens..=spec.max_noise_tokens);
        for _ in 0..noise {
            words.push(format!("n{}", rng.gen_range(0..spec.noise_vocab)));
        }
        words.shuffle(&mut rng);
        texts.push(words.join(" "));
    }

    // Ids are assigned through a permutation so id order carries no topic
    // information.
    let mut perm: Vec<usize> = (0..n_docs).collect();
    perm.shuffle(&mut rng);
    let mut slot_ids = vec![String::new(); n_docs];
    let mut corpus = Corpus::new();
    for (pos, &slot) in perm.iter().enumerate() {
        let id = format!("D{pos:05}");
        slot_ids[slot] = id.clone();
        corpus.insert(DocumentId::new(id)?, std::mem::take(&mut texts[slot]))?;
    }

    let (mut train_q, mut test_q): (Vec<_>, Vec<_>) = queries.into_iter().partition(|q| !q.test);
    train_q.shuffle(&mut rng);
    test_q.shuffle(&mut rng);

    let mut qrels = Qrels::default();
    let mut query_topics = BTreeMap::new();
    let mut build = |planted: Vec<PlantedQuery>, prefix: &str| -> Result<QuerySet> {
        let mut set = QuerySet::new();
        for (i, pq) in planted.into_iter().enumerate() {
            let qid = QueryId::new(format!("{prefix}{:04}", i + 1))?;
            let text: Vec<String> = pq.tokens.iter().map(|&j| topic_token(pq.topic, j)).collect();
            for slot in &pq.relevant_slots {
                qrels.insert(qid.clone(), DocumentId::new(slot_ids[*slot].clone())?, 1)?;
            }
            query_topics.insert(qid.clone(), pq.topic);
            set.insert(qid, text.join(" "))?;
        }
        Ok(set)
    };
    let train = build(train_q, "tr")?;
    let test = build(test_q, "te")?;

    Ok(SyntheticData {
        corpus,
        train,
        test,
        qrels,
        query_topics,
    })
}
