//! Independent reference implementations and small fixtures shared by the
//! integration tests. Nothing here calls the code it is used to check.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use alrank::datamodel::SyntheticSpec;
use alrank::experiment::{DataBundle, ExperimentConfig};
use alrank::lexical::Bm25Params;
use alrank::ranker::hashing::{bucket, combine, sign, token_hash};
use alrank::ranker::{Architecture, RankerConfig};

pub fn words(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in lower.chars() {
        if c.is_alphanumeric() {
            cur.push(c);
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Scores every document from scratch and sorts by (score desc, id asc),
/// keeping positive scores only.
pub fn brute_bm25(docs: &[(String, String)], query: &str, k1: f64, b: f64) -> Vec<(String, f64)> {
    let tokenized: Vec<Vec<String>> = docs.iter().map(|(_, t)| words(t)).collect();
    let n = docs.len() as f64;
    let total: usize = tokenized.iter().map(Vec::len).sum();
    let avgdl = total as f64 / n;
    let q = words(query);
    let mut scored = Vec::new();
    for ((id, _), toks) in docs.iter().zip(&tokenized) {
        if avgdl == 0.0 {
            break;
        }
        let dl = toks.len() as f64;
        let mut s = 0.0;
        for term in &q {
            let tf = toks.iter().filter(|t| *t == term).count() as f64;
            if tf == 0.0 {
                continue;
            }
            let df = tokenized.iter().filter(|d| d.contains(term)).count() as f64;
            let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
            s += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / avgdl));
        }
        if s > 0.0 {
            scored.push((id.clone(), s));
        }
    }
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored
}

/// Vote entropy by explicit vote counting: every member casts one vote for
/// each ordered pair it ranks in that order.
pub fn pair_counting_entropy(rankings: &[Vec<String>], k: usize) -> f64 {
    let m = rankings.len() as f64;
    let mut votes: HashMap<(String, String), usize> = HashMap::new();
    for r in rankings {
        for i in 0..r.len() {
            for j in i + 1..r.len() {
                *votes.entry((r[i].clone(), r[j].clone())).or_default() += 1;
            }
        }
    }
    let top = &rankings[0][..k.min(rankings[0].len())];
    let mut h = 0.0;
    for a in top {
        for b in top {
            if a == b {
                continue;
            }
            let n = *votes.get(&(a.clone(), b.clone())).unwrap_or(&0) as f64;
            if n > 0.0 {
                let p = n / m;
                h -= p * p.ln();
            }
        }
    }
    h
}

/// Mean nDCG@k with linear gains over queries holding a positive grade.
pub fn reference_ndcg(
    run: &BTreeMap<String, Vec<String>>,
    qrels: &BTreeMap<String, BTreeMap<String, u32>>,
    k: usize,
) -> (f64, BTreeMap<String, f64>) {
    let mut per = BTreeMap::new();
    for (q, judged) in qrels {
        let mut ideal: Vec<u32> = judged.values().copied().filter(|&g| g > 0).collect();
        if ideal.is_empty() {
            continue;
        }
        ideal.sort_unstable_by(|a, b| b.cmp(a));
        let dcg_of = |gains: &mut dyn Iterator<Item = u32>| -> f64 {
            gains
                .take(k)
                .enumerate()
                .map(|(i, g)| f64::from(g) / (i as f64 + 2.0).log2())
                .sum()
        };
        let idcg = dcg_of(&mut ideal.iter().copied());
        let dcg = run.get(q).map_or(0.0, |docs| {
            dcg_of(&mut docs.iter().map(|d| judged.get(d).copied().unwrap_or(0)))
        });
        per.insert(q.clone(), dcg / idcg);
    }
    let mean = per.values().sum::<f64>() / per.len() as f64;
    (mean, per)
}

// Feature family salts of the cross ranker; part of its checkpoint format.
const SALT_QUERY: u64 = 0x7175_6572_79;
const SALT_MATCH: u64 = 0x6d61_7463_68;
const SALT_PAIR: u64 = 0x7061_6972;
const SALT_OVERLAP: u64 = 0x6f76_6572_6c61_70;

/// The cross ranker's joint features built from string token sets.
pub fn cross_oracle(query: &str, doc: &str, dim: usize, seed: u64) -> Vec<f64> {
    let mut phi = vec![0.0; dim];
    let mut add = |key: u64, v: f64| phi[bucket(key, seed, dim)] += sign(key, seed) * v;
    let q: std::collections::BTreeSet<String> = words(query).into_iter().collect();
    if q.is_empty() {
        return phi;
    }
    let mut d_tf: BTreeMap<String, u32> = BTreeMap::new();
    for w in words(doc) {
        *d_tf.entry(w).or_default() += 1;
    }
    let uq = q.len() as f64;
    for t in &q {
        add(combine(token_hash(t), SALT_QUERY), 1.0 / uq);
    }
    if d_tf.is_empty() {
        return phi;
    }
    let matched: Vec<&String> = q.iter().filter(|t| d_tf.contains_key(*t)).collect();
    for t in &matched {
        add(combine(token_hash(t), SALT_MATCH), (1.0 + f64::from(d_tf[*t])).ln());
    }
    add(SALT_OVERLAP, matched.len() as f64 / uq);
    let w = 1.0 / (uq * d_tf.len() as f64).sqrt();
    for t in &q {
        for u in d_tf.keys() {
            add(combine(combine(token_hash(t), token_hash(u)), SALT_PAIR), w);
        }
    }
    phi
}

pub fn tiny_spec() -> SyntheticSpec {
    SyntheticSpec {
        topics: 2,
        docs_per_topic: 20,
        noise_vocab: 100,
        topic_vocab: 10,
        train_queries_per_topic: 5,
        test_queries_per_topic: 2,
        min_noise_tokens: 5,
        max_noise_tokens: 10,
        ..SyntheticSpec::default()
    }
}

/// Ten training queries, four test queries, forty documents.
pub fn tiny_bundle(seed: u64) -> DataBundle {
    DataBundle::synthetic(&tiny_spec(), seed, Bm25Params::default()).unwrap()
}

/// Two iterations of three items on a small cross ranker.
pub fn tiny_config() -> ExperimentConfig {
    let mut c = ExperimentConfig::desk();
    c.iterations = 2;
    c.selection.select_size = 3;
    c.selection.candidate_depth = 20;
    c.annotation.annotation_depth = 20;
    c.annotation.negative_depth = 40;
    c.ranker = RankerConfig {
        dim: 256,
        epochs_selection: 2,
        epochs_evaluation: 4,
        batch_size: 4,
        ..RankerConfig::desk(Architecture::Cross)
    };
    c
}

/// Every regular file under `dir`, keyed by relative path.
pub fn dir_bytes(dir: &std::path::Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &std::path::Path, dir: &std::path::Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

pub mod checks;
