//! Library results against independent reference implementations.

mod common;

use alrank::datamodel::{Corpus, DocumentId, QueryId, RankedList};
use alrank::lexical::{build_index, Bm25Params};
use alrank::ranker::{cross_features, Architecture, PreparedCorpus, PreparedText, RankerConfig, RankerState, TrainableRanker};
use alrank::rng::rng_from_seed;
use alrank::selection::vote_entropy;
use common::checks;
use proptest::prelude::*;
use rand::Rng;

#[test]
fn bm25_matches_brute_force() {
    checks::bm25_oracle(50, 11).unwrap();
}

#[test]
fn vote_entropy_matches_pair_counting() {
    checks::entropy_oracle(100, 12).unwrap();
}

#[test]
fn uncertainty_matches_brute_force() {
    checks::uncertainty_oracle(100, 13).unwrap();
}

#[test]
fn ndcg_matches_reference() {
    checks::ndcg_oracle(100, 14).unwrap();
}

fn sentence(rng: &mut impl Rng, vocab: usize, len: usize) -> String {
    (0..len).map(|_| format!("x{}", rng.gen_range(0..vocab))).collect::<Vec<_>>().join(" ")
}

#[test]
fn cross_features_match_string_oracle() {
    let mut rng = rng_from_seed(21);
    for _ in 0..200 {
        let dim = rng.gen_range(1..64);
        let seed: u64 = rng.gen();
        let (lq, ld) = (rng.gen_range(0..6), rng.gen_range(0..20));
        let q = sentence(&mut rng, 15, lq);
        let d = sentence(&mut rng, 15, ld);
        let got = cross_features(&PreparedText::new(&q), &PreparedText::new(&d), dim, seed);
        let want = common::cross_oracle(&q, &d, dim, seed);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() <= 1e-12, "{q:?} / {d:?}: {got:?} vs {want:?}");
        }

        let config = RankerConfig { dim, hash_seed: seed, ..RankerConfig::default() };
        let state = RankerState::new(&config, rng.gen());
        let dot: f64 = state.weights().iter().zip(&want).map(|(w, x)| w * x).sum();
        let s = state.score(&q, &d);
        let expected = if q.is_empty() || d.is_empty() { 0.0 } else { dot };
        assert!((s - expected).abs() <= 1e-12, "score {s} vs w·φ {expected}");
    }
}

fn tiny_state(arch: Architecture, seed: u64) -> RankerState {
    let config = RankerConfig { dim: 16, buckets: 64, hash_seed: seed, ..RankerConfig::desk(arch) };
    RankerState::new(&config, seed)
}

#[test]
fn rerank_is_a_sort_of_scores() {
    let data = common::tiny_bundle(2);
    for arch in Architecture::ALL {
        let state = tiny_state(arch, 4);
        for (q, text) in data.train.iter() {
            let candidates = data.index.retrieve_topk(q, text, 30);
            let got = state.rerank(text, &candidates, &data.corpus).unwrap();
            let mut want: Vec<(String, f64)> = candidates
                .docs()
                .map(|d| (d.to_string(), state.score(text, data.corpus.get(d).unwrap()) + 0.0))
                .collect();
            want.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            let got: Vec<(String, f64)> = got.entries().iter().map(|e| (e.doc.to_string(), e.score)).collect();
            assert_eq!(got, want, "{arch} {q}");
        }
    }
}

#[test]
fn full_retrieval_equals_reranking_everything() {
    let data = common::tiny_bundle(6);
    let prepared = PreparedCorpus::new(&data.corpus);
    for arch in [Architecture::Bi, Architecture::MaxSim] {
        let state = tiny_state(arch, 9);
        let everything =
            RankedList::from_scored(QueryId::new("all").unwrap(), data.corpus.ids().map(|d| (d.clone(), 0.0))).unwrap();
        for (q, text) in data.test.iter() {
            let full = state.retrieve_full(q, &PreparedText::new(text), &data.corpus, &prepared, 10).unwrap();
            let all = RankedList::from_scored(q.clone(), everything.entries().iter().map(|e| (e.doc.clone(), 0.0))).unwrap();
            let reranked = state.rerank(text, &all, &data.corpus).unwrap().top(10);
            assert_eq!(full, reranked, "{arch} {q}");
        }
    }
}

fn list(docs: &[usize]) -> RankedList {
    RankedList::from_scored(
        QueryId::new("q").unwrap(),
        docs.iter().enumerate().map(|(i, d)| (DocumentId::new(format!("p{d}")).unwrap(), -(i as f64))),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bm25_small_corpora(texts in prop::collection::vec("[a-d ]{0,12}", 1..20), query in "[a-e ]{1,8}", k in 1usize..25) {
        let docs: Vec<(String, String)> = texts.iter().enumerate().map(|(i, t)| (format!("d{i:02}"), t.clone())).collect();
        let corpus = Corpus::from_pairs(docs.iter().map(|(i, t)| (DocumentId::new(i).unwrap(), t.clone()))).unwrap();
        let index = build_index(&corpus, Bm25Params::default()).unwrap();
        let got: Vec<(String, f64)> = index
            .retrieve_topk(&QueryId::new("q").unwrap(), &query, k)
            .entries()
            .iter()
            .map(|e| (e.doc.to_string(), e.score))
            .collect();
        let mut want = common::brute_bm25(&docs, &query, 0.9, 0.4);
        want.truncate(k);
        prop_assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(&want) {
            prop_assert_eq!(&g.0, &w.0);
            prop_assert!((g.1 - w.1).abs() <= 1e-12);
        }
    }

    #[test]
    fn vote_entropy_is_order_free_and_bounded(perms in prop::collection::vec(Just((0..6usize).collect::<Vec<_>>()).prop_shuffle(), 2..6), k in 2usize..7) {
        let lists: Vec<RankedList> = perms.iter().map(|p| list(p)).collect();
        let h = vote_entropy(&lists, k).unwrap();
        prop_assert!(h >= 0.0);
        // each of the k(k−1) ordered pairs contributes at most 1/e
        prop_assert!(h <= (k.min(6) * (k.min(6) - 1)) as f64 / std::f64::consts::E + 1e-12);
        let mut rotated = lists.clone();
        rotated[1..].reverse();
        prop_assert!((vote_entropy(&rotated, k).unwrap() - h).abs() <= 1e-12);
        let same = vec![lists[0].clone(); lists.len()];
        prop_assert_eq!(vote_entropy(&same, k).unwrap(), 0.0);
    }
}
