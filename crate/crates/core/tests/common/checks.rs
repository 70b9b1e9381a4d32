//! The acceptance checks. Each returns a one-line detail on success and a
//! reason on failure; the acceptance target prints them, the focused test
//! files assert them.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use alrank::budget::{annotation_cost, compute_cost, CostConfig};
use alrank::datamodel::{Corpus, DocumentId, QueryId, Qrels, RankedList, Run, SyntheticSpec};
use alrank::evaluation::{emit_reports, ndcg_at_k, Gain};
use alrank::experiment::{
    load_states, run_dir_name, run_experiment, run_strategies, run_variability, untrained_baseline, DataBundle,
    ExperimentConfig, IterationState, RunOptions,
};
use alrank::lexical::{build_index, Bm25Params};
use alrank::ranker::{
    batch_gradient, batch_loss, load_checkpoint, ranknet_grad, ranknet_loss, Architecture, PreparedText,
    PreparedTriplet, RankerConfig, RankerState, TrainableRanker,
};
use alrank::rng::rng_from_seed;
use alrank::selection::{select_uncertainty, vote_entropy, Strategy};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use super::{brute_bm25, dir_bytes, pair_counting_entropy, reference_ndcg, tiny_bundle, tiny_config};

pub type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn qid(s: &str) -> QueryId {
    QueryId::new(s).unwrap()
}

fn did(s: &str) -> DocumentId {
    DocumentId::new(s).unwrap()
}

fn ranking(query: &str, docs: &[String]) -> RankedList {
    RankedList::from_scored(qid(query), docs.iter().enumerate().map(|(i, d)| (did(d), -(i as f64)))).unwrap()
}

// ---------------------------------------------------------------- 1

pub fn formulas() -> Check {
    let abc: Vec<String> = ["a", "b", "c"].map(String::from).to_vec();
    let agree = vote_entropy(&[ranking("q", &abc), ranking("q", &abc), ranking("q", &abc)], 3).map_err(|e| e.to_string())?;
    ensure!(agree == 0.0, "full agreement gave {agree}");
    let ab: Vec<String> = ["a", "b"].map(String::from).to_vec();
    let ba: Vec<String> = ["b", "a"].map(String::from).to_vec();
    let split = vote_entropy(&[ranking("q", &ab), ranking("q", &ba)], 2).map_err(|e| e.to_string())?;
    ensure!(split == std::f64::consts::LN_2, "2-member disagreement gave {split}");
    let c = CostConfig::default();
    let c_a = annotation_cost(75, &c);
    ensure!((c_a - 50.0).abs() <= 1e-12, "annotation cost {c_a}");
    let c_c = compute_cost(2.0, 1.0, 3, &c).map_err(|e| e.to_string())?;
    ensure!((c_c - 6.936).abs() <= 1e-12, "compute cost {c_c}");
    Ok(format!("VE 0 / ln2, C_A={c_a}, C_C={c_c}"))
}

// ---------------------------------------------------------------- 2

fn random_text(rng: &mut impl Rng, vocab: usize, len: usize) -> String {
    let seps = [" ", " ", " ", ", ", "-", ". "];
    let mut s = String::new();
    for i in 0..len {
        if i > 0 {
            s.push_str(seps[rng.gen_range(0..seps.len())]);
        }
        // skewed draw so document frequencies vary widely
        let w = (rng.gen::<f64>().powi(2) * vocab as f64) as usize;
        if rng.gen_bool(0.1) {
            s.push_str(&format!("W{w}"));
        } else {
            s.push_str(&format!("w{w}"));
        }
    }
    s
}

pub fn bm25_oracle(corpora: usize, seed: u64) -> Check {
    let mut rng = rng_from_seed(seed);
    let mut lists = 0;
    let mut max_docs = 0;
    for _ in 0..corpora {
        let n = rng.gen_range(1..=500);
        max_docs = max_docs.max(n);
        let vocab = rng.gen_range(3..150);
        let docs: Vec<(String, String)> = (0..n)
            .map(|i| {
                let len = rng.gen_range(0..30);
                (format!("d{}", rng.gen_range(0..1_000_000) * 1000 + i), random_text(&mut rng, vocab, len))
            })
            .collect();
        let params = Bm25Params {
            k1: rng.gen_range(0.3..2.0),
            b: rng.gen_range(0.0..=1.0),
        };
        let corpus = Corpus::from_pairs(docs.iter().map(|(id, t)| (did(id), t.clone()))).map_err(|e| e.to_string())?;
        let index = build_index(&corpus, params).map_err(|e| e.to_string())?;
        for _ in 0..5 {
            let len = rng.gen_range(1..6);
            let text = format!("{} zzunseen", random_text(&mut rng, vocab + 3, len));
            let k = rng.gen_range(1..=60);
            let got = index.retrieve_topk(&qid("q"), &text, k);
            let want = brute_bm25(&docs, &text, params.k1, params.b);
            let want = &want[..k.min(want.len())];
            ensure!(got.len() == want.len(), "{text:?}: {} hits, brute force has {}", got.len(), want.len());
            for (r, (g, w)) in got.entries().iter().zip(want).enumerate() {
                ensure!(
                    g.doc.as_str() == w.0 && (g.score - w.1).abs() <= 1e-9 * w.1.max(1.0),
                    "{text:?} rank {}: index ({}, {}) vs brute force ({}, {})",
                    r + 1,
                    g.doc,
                    g.score,
                    w.0,
                    w.1
                );
            }
            lists += 1;
        }
    }
    Ok(format!("{corpora} corpora (up to {max_docs} docs), {lists} rankings"))
}

pub fn entropy_oracle(instances: usize, seed: u64) -> Check {
    let mut rng = rng_from_seed(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let n = rng.gen_range(2..14);
        let m = rng.gen_range(2..7);
        let docs: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
        let mut members: Vec<Vec<String>> = Vec::new();
        for j in 0..m {
            let mut r = docs.clone();
            if j > 0 && rng.gen_bool(0.3) {
                r = members[rng.gen_range(0..j)].clone();
            } else {
                r.shuffle(&mut rng);
            }
            members.push(r);
        }
        let k = rng.gen_range(2..=n + 2);
        let lists: Vec<RankedList> = members.iter().map(|r| ranking("q", r)).collect();
        let got = vote_entropy(&lists, k).map_err(|e| e.to_string())?;
        let want = pair_counting_entropy(&members, k);
        ensure!((got - want).abs() <= 1e-12, "m={m} n={n} k={k}: {got} vs {want}");
        worst = worst.max((got - want).abs());
    }
    Ok(format!("{instances} committees, max |Δ| {worst:.1e}"))
}

pub fn uncertainty_oracle(instances: usize, seed: u64) -> Check {
    let mut rng = rng_from_seed(seed);
    for inst in 0..instances {
        let nq = rng.gen_range(1..8);
        let mut reranked = BTreeMap::new();
        let mut flat: Vec<(String, String, f64)> = Vec::new();
        // a small value set forces exact ties
        let values: Vec<f64> = (0..rng.gen_range(1..6)).map(|_| rng.gen_range(-3.0..3.0)).collect();
        for q in 0..nq {
            let qs = format!("q{q}");
            let nd = rng.gen_range(1..8);
            let scored: Vec<(DocumentId, f64)> = (0..nd)
                .map(|d| {
                    let x = if rng.gen_bool(0.5) { values[rng.gen_range(0..values.len())] } else { rng.gen_range(-3.0..3.0) };
                    (did(&format!("d{d}")), x)
                })
                .collect();
            for (d, x) in &scored {
                flat.push((qs.clone(), d.to_string(), *x));
            }
            reranked.insert(qid(&qs), RankedList::from_scored(qid(&qs), scored).unwrap());
        }
        let pool: Vec<QueryId> = reranked.keys().cloned().collect();
        let s = rng.gen_range(1..10);
        let one = rng.gen_bool(0.3);
        let got: Vec<(String, String)> = select_uncertainty(&reranked, &pool, s, one)
            .map_err(|e| e.to_string())?
            .into_iter()
            .map(|(q, d, _)| (q.to_string(), d.to_string()))
            .collect();

        flat.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
        let mu = flat.iter().map(|t| t.2).sum::<f64>() / flat.len() as f64;
        let mut by_dist: Vec<(f64, String, String)> = flat.iter().map(|(q, d, x)| ((x - mu).abs(), q.clone(), d.clone())).collect();
        by_dist.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| (&a.1, &a.2).cmp(&(&b.1, &b.2))));
        let mut want: Vec<(String, String)> = Vec::new();
        for (_, q, d) in by_dist {
            if want.len() == s {
                break;
            }
            if one && want.iter().any(|(wq, _)| *wq == q) {
                continue;
            }
            want.push((q, d));
        }
        ensure!(got == want, "instance {inst}: {got:?} vs {want:?}");
    }
    Ok(format!("{instances} pools"))
}

pub fn ndcg_oracle(instances: usize, seed: u64) -> Check {
    let mut rng = rng_from_seed(seed);
    let mut worst: f64 = 0.0;
    for inst in 0..instances {
        let nq = rng.gen_range(1..8);
        let mut qrels_map: BTreeMap<String, BTreeMap<String, u32>> = BTreeMap::new();
        let mut run_map: BTreeMap<String, Vec<String>> = BTreeMap::new();
        let mut qrels = Qrels::new(1).unwrap();
        let mut run = Run::new("r").unwrap();
        for q in 0..nq {
            let qs = format!("q{q}");
            let judged = rng.gen_range(1..15);
            let mut m = BTreeMap::new();
            for d in 0..judged {
                let g = rng.gen_range(0..4);
                let ds = format!("d{}", d * 2);
                qrels.insert(qid(&qs), did(&ds), g).unwrap();
                m.insert(ds, g);
            }
            if q == 0 && m.values().all(|&g| g == 0) {
                qrels.insert(qid(&qs), did("d1"), 2).unwrap();
                m.insert("d1".into(), 2);
            }
            qrels_map.insert(qs.clone(), m);
            if q == 0 || rng.gen_bool(0.8) {
                let mut docs: Vec<String> = (0..rng.gen_range(0..30)).map(|d| format!("d{d}")).collect();
                docs.shuffle(&mut rng);
                run.insert(ranking(&qs, &docs));
                run_map.insert(qs, docs);
            }
        }
        let got = ndcg_at_k(&run, &qrels, 10, Gain::Linear).map_err(|e| e.to_string())?;
        let (mean, per) = reference_ndcg(&run_map, &qrels_map, 10);
        ensure!(got.per_query.len() == per.len(), "instance {inst}: query sets differ");
        for (q, v) in &per {
            let g = got.per_query[&qid(q)];
            ensure!((g - v).abs() <= 1e-8, "instance {inst} {q}: {g} vs {v}");
            worst = worst.max((g - v).abs());
        }
        ensure!((got.mean - mean).abs() <= 1e-8, "instance {inst}: mean {} vs {mean}", got.mean);
    }
    Ok(format!("{instances} run/qrels pairs, max |Δ| {worst:.1e}"))
}

// ---------------------------------------------------------------- 3

/// Relative error with the denominator floored at 1e-6: central
/// differences in f64 carry up to ~1e-11 of absolute noise, so smaller
/// gradients are compared at that absolute scale instead.
fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

pub fn ranknet_gradient(instances: usize, seed: u64) -> Check {
    let mut rng = rng_from_seed(seed);
    let h = 1e-4;
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let (sp, sn, sigma) = (rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0), rng.gen_range(0.2..3.0));
        let g = ranknet_grad(sp, sn, sigma);
        let fd_pos = (ranknet_loss(sp + h, sn, sigma) - ranknet_loss(sp - h, sn, sigma)) / (2.0 * h);
        let fd_neg = (ranknet_loss(sp, sn + h, sigma) - ranknet_loss(sp, sn - h, sigma)) / (2.0 * h);
        let e = rel_err(g, fd_pos).max(rel_err(-g, fd_neg));
        ensure!(e <= 1e-5, "s+={sp} s-={sn} σ={sigma}: analytic {g}, numeric {fd_pos}/{fd_neg}");
        worst = worst.max(e);
    }
    Ok(format!("{instances} pairs, max rel err {worst:.1e}"))
}

pub fn model_gradient(arch: Architecture, instances: usize, seed: u64) -> Check {
    let mut rng = rng_from_seed(seed);
    let h = 1e-4;
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    for inst in 0..instances {
        let config = RankerConfig {
            architecture: arch,
            dim: if arch == Architecture::Cross { rng.gen_range(8..40) } else { rng.gen_range(2..5) },
            buckets: rng.gen_range(3..9),
            hash_seed: rng.gen(),
            ..RankerConfig::default()
        };
        let mut state = RankerState::new(&config, rng.gen());
        // larger weights keep max-sim argmaxes far apart
        state.weights_mut().iter_mut().for_each(|w| *w *= 3.0);
        let text = |rng: &mut alrank::rng::HarnessRng, len: usize| {
            (0..len).map(|_| format!("t{}", rng.gen_range(0..12))).collect::<Vec<_>>().join(" ")
        };
        let triplets: Vec<PreparedTriplet> = (0..rng.gen_range(1..4))
            .map(|_| {
                let (lq, lp, ln) = (rng.gen_range(1..4), rng.gen_range(1..7), rng.gen_range(1..7));
                PreparedTriplet {
                    query: PreparedText::new(&text(&mut rng, lq)),
                    positive: PreparedText::new(&text(&mut rng, lp)),
                    negative: PreparedText::new(&text(&mut rng, ln)),
                }
            })
            .collect();
        let sigma = rng.gen_range(0.5..2.0);
        let grad = batch_gradient(&state, &triplets, sigma);
        for i in 0..state.weights().len() {
            let mut plus = state.clone();
            plus.weights_mut()[i] += h;
            let mut minus = state.clone();
            minus.weights_mut()[i] -= h;
            let fd = (batch_loss(&plus, &triplets, sigma) - batch_loss(&minus, &triplets, sigma)) / (2.0 * h);
            let e = rel_err(grad[i], fd);
            ensure!(e <= 1e-4, "{arch} instance {inst} weight {i}: analytic {} numeric {fd}", grad[i]);
            worst = worst.max(e);
            checked += 1;
        }
    }
    Ok(format!("{arch}: {instances} instances, {checked} weights, max rel err {worst:.1e}"))
}

// ---------------------------------------------------------------- 4

fn err(e: alrank::Error) -> String {
    e.to_string()
}

pub fn pool_contract() -> Check {
    let data = tiny_bundle(3);
    ensure!(data.train.len() == 10, "tiny bundle has {} training queries", data.train.len());
    for s in Strategy::ALL {
        let dir = tempfile::tempdir().unwrap();
        let config = tiny_config().with_strategy(s);
        ensure!(config.iterations == 2 && config.sizes() == vec![3, 3], "fixture is not I=2, s=3");
        let states = run_experiment(&config, &data, 0, dir.path()).map_err(err)?;
        let last = states.last().unwrap();
        ensure!(
            last.annotated_queries.len() == 6 && last.pool.len() == 4,
            "{s}: {} annotated, {} in pool",
            last.annotated_queries.len(),
            last.pool.len()
        );
    }
    Ok("all strategies: 6 annotated, 4 left".into())
}

fn selection_is_disjoint(states: &[IterationState], train: &BTreeSet<QueryId>) -> Result<(), String> {
    let mut seen: BTreeSet<QueryId> = BTreeSet::new();
    let mut pool = train.clone();
    for st in states {
        let picked: BTreeSet<QueryId> = st.selected.iter().map(|it| it.query.clone()).collect();
        for q in &picked {
            ensure!(pool.contains(q), "iteration {} picked {q}, which is not in the pool", st.iteration);
            ensure!(seen.insert(q.clone()), "iteration {} picked {q} a second time", st.iteration);
        }
        pool = st.pool.iter().cloned().collect();
        ensure!(pool.is_disjoint(&seen), "iteration {} pool still holds selected queries", st.iteration);
    }
    let last = states.last().unwrap();
    let unique: BTreeSet<&QueryId> = last.annotated_queries.iter().collect();
    ensure!(unique.len() == last.annotated_queries.len(), "annotated query list has duplicates");
    ensure!(seen.len() + pool.len() == train.len(), "queries were lost from the pool");
    Ok(())
}

pub fn no_duplicates(seeds: u64) -> Check {
    let bundles: Vec<DataBundle> = (0..8).map(tiny_bundle).collect();
    let mut base = tiny_config();
    base.iterations = 4;
    base.ranker.dim = 64;
    base.ranker.epochs_selection = 1;
    base.ranker.epochs_evaluation = 1;
    let root = tempfile::tempdir().unwrap();
    let jobs: Vec<(u64, Strategy)> = (0..seeds).flat_map(|s| Strategy::ALL.map(|st| (s, st))).collect();
    jobs.par_iter()
        .map(|&(seed, s)| {
            let mut config = base.with_strategy(s);
            config.master_seed = seed;
            let data = &bundles[(seed % 8) as usize];
            let dir = root.path().join(format!("{s}-{seed}"));
            let states = run_experiment(&config, data, 0, &dir).map_err(err)?;
            let train: BTreeSet<QueryId> = data.train.ids().cloned().collect();
            selection_is_disjoint(&states, &train).map_err(|e| format!("{s} seed {seed}: {e}"))?;
            let _ = std::fs::remove_dir_all(&dir);
            Ok(())
        })
        .collect::<Result<Vec<()>, String>>()?;
    Ok(format!("{} runs ({seeds} seeds × 4 strategies)", jobs.len()))
}

/// Candidates and the assessments one item costs, recomputed from the raw
/// texts: BM25 by brute force, reranking with `score()` on loaded weights.
fn expected_assessments(
    data: &DataBundle,
    config: &ExperimentConfig,
    reranker: Option<&RankerState>,
    query: &QueryId,
    pair: Option<&DocumentId>,
) -> u64 {
    let docs: Vec<(String, String)> = data.corpus.iter().map(|(d, t)| (d.to_string(), t.to_string())).collect();
    let qtext = data.train.get(query).unwrap();
    let params = data.index.params();
    let mut list: Vec<(String, f64)> = brute_bm25(&docs, qtext, params.k1, params.b);
    list.truncate(config.selection.candidate_depth);
    if let Some(state) = reranker {
        for (d, s) in list.iter_mut() {
            *s = state.score(qtext, data.corpus.get(&did(d)).unwrap()) + 0.0;
        }
        list.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    }
    let depth = config.annotation.annotation_depth;
    let walk = list
        .iter()
        .take(depth)
        .position(|(d, _)| data.qrels.is_relevant(query, &did(d)))
        .map_or(depth.min(list.len()) as u64, |r| r as u64 + 1);
    match pair {
        None => walk,
        Some(d) if data.qrels.is_relevant(query, d) => 1,
        Some(_) => 1 + walk,
    }
}

pub fn ledger_recomputed() -> Check {
    let data = tiny_bundle(5);
    let mut items = 0;
    for s in Strategy::ALL {
        let dir = tempfile::tempdir().unwrap();
        let mut config = tiny_config().with_strategy(s);
        config.iterations = 3;
        let states = run_experiment(&config, &data, 0, dir.path()).map_err(err)?;
        for (k, st) in states.iter().enumerate() {
            let uses_bm25 = st.iteration == 1 || s == Strategy::Random;
            ensure!(
                uses_bm25 == (st.selected_with == Strategy::Random),
                "{s} iteration {} selected with {}",
                st.iteration,
                st.selected_with
            );
            let reranker = if uses_bm25 {
                None
            } else {
                Some(load_checkpoint(&dir.path().join(&states[k - 1].selection_checkpoint)).map_err(err)?)
            };
            let mut want: Vec<(String, u64)> = st
                .selected
                .iter()
                .map(|it| {
                    (it.query.to_string(), expected_assessments(&data, &config, reranker.as_ref(), &it.query, it.doc.as_ref()))
                })
                .collect();
            let mut got: Vec<(String, u64)> = st
                .ledger
                .rows()
                .iter()
                .filter(|r| r.iteration == st.iteration)
                .map(|r| (r.query_id.to_string(), r.assessments))
                .collect();
            want.sort();
            got.sort();
            ensure!(got == want, "{s} iteration {}: ledger {got:?}, recomputed {want:?}", st.iteration);
            let spent: u64 = want.iter().map(|w| w.1).sum();
            ensure!(st.ledger.spent(st.iteration) == spent, "{s} iteration {} total differs", st.iteration);
            items += want.len();
        }
    }
    Ok(format!("{items} annotated items across 4 strategies"))
}

// ---------------------------------------------------------------- 5

/// Medians at sizes 25, 50, 100, 200 recorded from the first full run;
/// later runs must stay within `MEDIAN_TOLERANCE`.
pub const PINNED_MEDIANS: [f64; 4] = [0.4338, 0.5486, 0.6099, 0.6239];
pub const MEDIAN_TOLERANCE: f64 = 0.01;

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

pub fn desk_bundle() -> DataBundle {
    DataBundle::synthetic(&SyntheticSpec::default(), 42, Bm25Params::default()).unwrap()
}

pub fn variability_study(data: &DataBundle) -> Check {
    ensure!(
        data.corpus.len() == 2000 && data.train.len() == 300 && data.test.len() == 100,
        "synthetic bundle has the wrong shape"
    );
    let config = ExperimentConfig::desk();
    let sizes = [25, 50, 100, 200];
    let records = run_variability(&config, data, &sizes, 4).map_err(err)?;
    let baseline = untrained_baseline(&config, data, 4).map_err(err)?;
    let by_size = |s: usize| records.iter().filter(|r| r.size == s).map(|r| r.ndcg10).collect::<Vec<f64>>();
    let medians: Vec<f64> = sizes.iter().map(|&s| median(by_size(s))).collect();
    ensure!(medians.windows(2).all(|w| w[0] <= w[1]), "medians not non-decreasing: {medians:?}");
    let first = by_size(25);
    let range = first.iter().cloned().fold(f64::MIN, f64::max) - first.iter().cloned().fold(f64::MAX, f64::min);
    ensure!(range > 0.0, "no inter-seed spread at size 25");
    let last = by_size(200);
    let mean = last.iter().sum::<f64>() / last.len() as f64;
    ensure!(mean - baseline >= 0.1, "size 200 mean {mean:.4} vs untrained {baseline:.4}");
    for (m, p) in medians.iter().zip(PINNED_MEDIANS) {
        ensure!((m - p).abs() <= MEDIAN_TOLERANCE, "median {m:.4} drifted from pinned {p}");
    }
    Ok(format!(
        "medians {}, range@25 {range:.4}, mean@200 {mean:.4} vs untrained {baseline:.4}",
        medians.iter().map(|m| format!("{m:.4}")).collect::<Vec<_>>().join("/")
    ))
}

// ---------------------------------------------------------------- 6

fn read_csv(path: &Path) -> Result<Vec<BTreeMap<String, String>>, String> {
    let mut r = csv::Reader::from_path(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let header: Vec<String> = r.headers().map_err(|e| e.to_string())?.iter().map(String::from).collect();
    r.records()
        .map(|rec| {
            let rec = rec.map_err(|e| e.to_string())?;
            Ok(header.iter().cloned().zip(rec.iter().map(String::from)).collect())
        })
        .collect()
}

fn run_all(config: &ExperimentConfig, data: &DataBundle, out: &Path, options: RunOptions) -> Result<(), String> {
    let summaries = run_strategies(config, data, &Strategy::ALL, out, options).map_err(err)?;
    emit_reports(&summaries, &[], config.alpha, &out.join("report")).map_err(err)?;
    Ok(())
}

pub fn run_al_config() -> ExperimentConfig {
    let c = ExperimentConfig::desk();
    assert_eq!((c.iterations, c.selection.select_size), (5, 20));
    c
}

pub fn active_learning(data: &DataBundle, scratch: &Path) -> Check {
    let config = run_al_config();
    let first = scratch.join("first");
    let second = scratch.join("second");
    run_all(&config, data, &first, RunOptions::default())?;
    run_all(&config, data, &second, RunOptions::default())?;

    let mut rows = 0;
    for s in Strategy::ALL {
        for r in 0..config.repeats_for(s) {
            let cost = read_csv(&first.join(run_dir_name(s, r)).join("cost.csv"))?;
            ensure!(cost.len() == config.iterations, "{s}-r{r}: {} cost rows", cost.len());
            let mut prev = 0u64;
            for row in &cost {
                let f = |k: &str| row[k].parse::<f64>().unwrap();
                ensure!(f("C_total") == f("C_A") + f("C_C"), "{s}-r{r}: C != C_A + C_C in {row:?}");
                let a: u64 = row["assessments"].parse().unwrap();
                ensure!(a >= prev, "{s}-r{r}: assessments fell from {prev} to {a}");
                prev = a;
                rows += 1;
            }
        }
    }
    let results = read_csv(&first.join("report/results.csv"))?;
    for row in &results {
        let f = |k: &str| row[k].parse::<f64>().unwrap();
        ensure!(f("C_total") == f("C_A") + f("C_C"), "results.csv: C != C_A + C_C in {row:?}");
    }
    for name in ["summary.txt", "cost_stacked.csv", "ndcg_vs_assessments.csv", "results.csv"] {
        let p = first.join("report").join(name);
        ensure!(p.exists() && std::fs::metadata(&p).unwrap().len() > 0, "{name} missing or empty");
    }
    let (a, b) = (dir_bytes(&first), dir_bytes(&second));
    ensure!(a == b, "re-run differs in {:?}", a.keys().find(|k| a.get(*k) != b.get(*k)));
    Ok(format!("{rows} cost rows, {} files byte-identical on re-run", a.len()))
}

// ---------------------------------------------------------------- 7

pub fn determinism(data: &DataBundle, scratch: &Path) -> Check {
    let config = run_al_config();
    let pool = |n: usize| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
    let straight = scratch.join("straight-4");
    pool(4).install(|| run_all(&config, data, &straight, RunOptions::default()))?;
    let resumed = scratch.join("resumed-1");
    pool(1).install(|| -> Result<(), String> {
        run_strategies(&config, data, &Strategy::ALL, &resumed, RunOptions { stop_after: Some(2) }).map_err(err)?;
        let partial = load_states(&resumed.join(run_dir_name(Strategy::Qbc, 0))).map_err(err)?;
        ensure!(partial.len() == 2, "interrupted run kept {} iterations", partial.len());
        run_all(&config, data, &resumed, RunOptions::default())
    })?;
    let single = scratch.join("straight-1");
    pool(1).install(|| run_all(&config, data, &single, RunOptions::default()))?;

    for s in Strategy::ALL {
        for r in 0..config.repeats_for(s) {
            let name = run_dir_name(s, r);
            let a = load_states(&straight.join(&name)).map_err(err)?;
            let b = load_states(&resumed.join(&name)).map_err(err)?;
            ensure!(a.len() == config.iterations && a == b, "{name}: resumed states differ");
        }
    }
    let (a, b, c) = (dir_bytes(&straight), dir_bytes(&resumed), dir_bytes(&single));
    ensure!(a == b, "resume changed {:?}", a.keys().find(|k| a.get(*k) != b.get(*k)));
    ensure!(a == c, "thread count changed {:?}", a.keys().find(|k| a.get(*k) != c.get(*k)));
    Ok(format!("resume and 1 vs 4 threads: {} files identical", a.len()))
}
