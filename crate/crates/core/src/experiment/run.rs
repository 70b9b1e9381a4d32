use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::{write_json, Workspace};
use super::{DataBundle, ExperimentConfig};
use crate::annotation::{annotate_pair, annotate_query, Annotation, AssessmentLedger, ExhaustedPolicy};
use crate::budget::{total_cost, TimeLedger};
use crate::datamodel::{write_text, write_triplets, DocumentId, QueryId, RankedList, TrainingTriplet};
use crate::error::{Error, Result};
use crate::evaluation::{IterationSummary, RunSummary};
use crate::ranker::{load_checkpoint, save_checkpoint, train_with, PreparedTriplet, RankerState, Sgd};
use crate::rng::{derive_seed, derived_rng, rng_from_seed, SeedPart};
use crate::selection::{
    select_diversity, select_qbc, select_random, select_uncertainty, PoolContext, Strategy,
};

/// One selected item with its strategy score (see the selection module).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedItem {
    pub query: QueryId,
    /// Set for pair-level selection.
    pub doc: Option<DocumentId>,
    pub score: f64,
}

/// Everything known after iteration `iteration`; enough to continue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationState {
    pub strategy: Strategy,
    pub repeat: usize,
    pub iteration: usize,
    /// The strategy actually used this iteration.
    pub selected_with: Strategy,
    pub selected: Vec<SelectedItem>,
    /// `D`, in the order triplets were added.
    pub annotated: Vec<TrainingTriplet>,
    /// Every query selected so far, in selection order.
    pub annotated_queries: Vec<QueryId>,
    /// Remaining pool, sorted.
    pub pool: Vec<QueryId>,
    /// File names inside the run directory.
    pub selection_checkpoint: String,
    pub evaluation_checkpoint: String,
    pub selection_fingerprint: String,
    pub ledger: AssessmentLedger,
    pub time: TimeLedger,
    pub summary: IterationSummary,
    pub terminated: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Stop (as if interrupted) once this iteration is persisted.
    pub stop_after: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RunMeta {
    strategy: Strategy,
    repeat: usize,
    config_fingerprint: String,
    data_fingerprint: String,
    config: ExperimentConfig,
}

const META_FILE: &str = "run.json";

fn state_file(i: usize) -> String {
    format!("iter-{i:03}.json")
}

/// `<strategy>-r<repeat>`
pub fn run_dir_name(strategy: Strategy, repeat: usize) -> String {
    format!("{strategy}-r{repeat}")
}

/// Runs one strategy/repeat into `dir`. An existing run with the same
/// fingerprints is resumed instead; a different one is an error.
pub fn run_experiment(config: &ExperimentConfig, data: &DataBundle, repeat: usize, dir: &Path) -> Result<Vec<IterationState>> {
    run_experiment_with(config, data, repeat, dir, RunOptions::default())
}

pub fn run_experiment_with(
    config: &ExperimentConfig,
    data: &DataBundle,
    repeat: usize,
    dir: &Path,
    options: RunOptions,
) -> Result<Vec<IterationState>> {
    config.validate()?;
    if dir.join(META_FILE).exists() {
        return resume_with(config, data, dir, options);
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let meta = RunMeta {
        strategy: config.selection.strategy,
        repeat,
        config_fingerprint: config.fingerprint(),
        data_fingerprint: data.fingerprint(),
        config: config.clone(),
    };
    write_json(&dir.join(META_FILE), &meta)?;
    drive(config, data, repeat, dir, Vec::new(), options)
}

/// Continues an interrupted run. `config` and `data` must match the ones
/// the run started with; a finished run is returned unchanged.
pub fn resume(config: &ExperimentConfig, data: &DataBundle, dir: &Path) -> Result<Vec<IterationState>> {
    resume_with(config, data, dir, RunOptions::default())
}

fn resume_with(config: &ExperimentConfig, data: &DataBundle, dir: &Path, options: RunOptions) -> Result<Vec<IterationState>> {
    let meta: RunMeta = read_json(&dir.join(META_FILE))?;
    if meta.config_fingerprint != config.fingerprint() {
        return Err(Error::Resume(format!(
            "config fingerprint mismatch in {}: run has {}, given config has {}",
            dir.display(),
            &meta.config_fingerprint[..12],
            &config.fingerprint()[..12]
        )));
    }
    if meta.data_fingerprint != data.fingerprint() {
        return Err(Error::Resume(format!("data fingerprint mismatch in {}", dir.display())));
    }
    let states = load_states(dir)?;
    drive(config, data, meta.repeat, dir, states, options)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = crate::datamodel::read_text(path)?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()))
}

/// Every persisted iteration of a run directory, in order.
pub fn load_states(dir: &Path) -> Result<Vec<IterationState>> {
    let mut states = Vec::new();
    for i in 1.. {
        let path = dir.join(state_file(i));
        if !path.exists() {
            break;
        }
        let state: IterationState = read_json(&path)?;
        if state.iteration != i {
            return Err(Error::Resume(format!("{} holds iteration {}", path.display(), state.iteration)));
        }
        states.push(state);
    }
    Ok(states)
}

fn is_complete(config: &ExperimentConfig, states: &[IterationState]) -> bool {
    states
        .last()
        .is_some_and(|s| s.iteration >= config.iterations || s.terminated.is_some())
}

fn drive(
    config: &ExperimentConfig,
    data: &DataBundle,
    repeat: usize,
    dir: &Path,
    mut states: Vec<IterationState>,
    options: RunOptions,
) -> Result<Vec<IterationState>> {
    if is_complete(config, &states) || options.stop_after.is_some_and(|s| states.len() >= s) {
        return Ok(states);
    }
    let ws = Workspace::new(data, config)?;
    let start = config.start_state(repeat)?;
    let mut selector = match states.last() {
        Some(last) => {
            let s = load_checkpoint(&dir.join(&last.selection_checkpoint))?;
            if s.fingerprint() != last.selection_fingerprint {
                return Err(Error::Resume(format!(
                    "{} does not match the fingerprint recorded for iteration {}",
                    last.selection_checkpoint, last.iteration
                )));
            }
            Some(s)
        }
        None => None,
    };
    while !is_complete(config, &states) {
        let (state, sel) = iterate(config, &ws, &start, repeat, states.last(), selector.as_ref(), dir)?;
        write_json(&dir.join(state_file(state.iteration)), &state)?;
        states.push(state);
        selector = Some(sel);
        write_derived(dir, &states, config)?;
        if options.stop_after.is_some_and(|s| states.len() >= s) {
            break;
        }
    }
    Ok(states)
}

/// The `RunSummary` of a sequence of states.
pub fn run_summary(states: &[IterationState]) -> Result<RunSummary> {
    let first = states.first().ok_or_else(|| Error::invalid("run has no iterations"))?;
    Ok(RunSummary {
        strategy: first.strategy.tag().to_string(),
        seed: first.repeat as u64,
        iterations: states.iter().map(|s| s.summary.clone()).collect(),
    })
}

/// Rewrites the files derived from the states, so an interrupted and a
/// straight run leave identical directories.
fn write_derived(dir: &Path, states: &[IterationState], config: &ExperimentConfig) -> Result<()> {
    let last = states.last().expect("at least one state");
    last.ledger.write_csv(dir.join("ledger.csv"))?;
    write_triplets(dir.join("triplets.tsv"), &last.annotated)?;

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["iteration", "strategy", "query_id", "doc_id", "score"])?;
    for s in states {
        for item in &s.selected {
            w.write_record([
                s.iteration.to_string(),
                s.selected_with.to_string(),
                item.query.to_string(),
                item.doc.as_ref().map(|d| d.to_string()).unwrap_or_default(),
                item.score.to_string(),
            ])?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
    write_text(&dir.join("selection.csv"), &String::from_utf8(bytes).expect("csv output is utf-8"))?;

    let cumulative: Vec<u64> = (1..=last.ledger.iterations()).map(|i| last.ledger.cumulative(i)).collect();
    let report = total_cost(&cumulative, &last.time, &config.cost)?;
    write_text(&dir.join("cost.csv"), &report.to_csv_string()?)?;
    write_json(&dir.join("summary.json"), &run_summary(states)?)
}

enum Job {
    Query(QueryId, RankedList),
    Pair(QueryId, DocumentId, RankedList),
}

impl Job {
    fn query(&self) -> &QueryId {
        match self {
            Job::Query(q, _) | Job::Pair(q, _, _) => q,
        }
    }
}

fn hours(config: &ExperimentConfig, triplet_epochs: usize, started: Instant) -> f64 {
    match config.cost.gpu_hours_per_triplet_epoch {
        Some(rate) => rate * triplet_epochs as f64,
        None => started.elapsed().as_secs_f64() / 3600.0,
    }
}

struct Trained {
    selection: RankerState,
    evaluation: RankerState,
    triplet_epochs: usize,
}

/// Resets to `start` and trains on `triplets`: `epochs_selection` epochs
/// for the selection ranker, then on to `epochs_evaluation`.
fn train_pair(
    config: &ExperimentConfig,
    ws: &Workspace<'_>,
    start: &RankerState,
    triplets: &[TrainingTriplet],
    seeds: (u64, u64),
) -> Result<Trained> {
    if triplets.is_empty() {
        return Ok(Trained {
            selection: start.clone(),
            evaluation: start.clone(),
            triplet_epochs: 0,
        });
    }
    let prepared = PreparedTriplet::prepare_all(triplets, &ws.data.train, &ws.data.corpus, Some(&ws.prepared))?;
    let params = config.ranker.train_params();
    let mut sgd = Sgd {
        learning_rate: params.learning_rate,
    };
    let e_sel = config.ranker.epochs_selection;
    let selection = train_with(start, &params, &prepared, e_sel, seeds.0, &mut sgd, None)?.state;
    let rest = config.ranker.epochs_evaluation - e_sel;
    if rest == 0 {
        return Ok(Trained {
            evaluation: selection.clone(),
            selection,
            triplet_epochs: triplets.len() * e_sel,
        });
    }
    let mut validate = |s: &RankerState| ws.validate(s, config).unwrap_or(f64::NEG_INFINITY);
    let early = match (config.ranker.early_stopping(), ws.validation.is_some()) {
        (Some(es), true) => Some((es, &mut validate as &mut dyn FnMut(&RankerState) -> f64)),
        _ => None,
    };
    let outcome = train_with(&selection, &params, &prepared, rest, seeds.1, &mut sgd, early)?;
    Ok(Trained {
        selection,
        evaluation: outcome.state,
        triplet_epochs: triplets.len() * (e_sel + outcome.epochs_run),
    })
}

/// QBC members: each trained from the start on its own random share of `D`.
fn train_committee(
    config: &ExperimentConfig,
    ws: &Workspace<'_>,
    start: &RankerState,
    annotated: &[TrainingTriplet],
    repeat: usize,
    i: usize,
) -> Result<(Vec<RankerState>, usize)> {
    let members = (0..config.selection.committee_size)
        .into_par_iter()
        .map(|m| {
            if annotated.is_empty() {
                return Ok((start.clone(), 0));
            }
            let n = annotated.len();
            let take = ((config.selection.member_fraction * n as f64).round() as usize).clamp(1, n);
            let mut rng = rng_from_seed(config.seed("committee", &[repeat as u64, i as u64, m as u64]));
            let mut picked = index::sample(&mut rng, n, take).into_vec();
            picked.sort_unstable();
            let subset: Vec<TrainingTriplet> = picked.iter().map(|&k| annotated[k].clone()).collect();
            let prepared =
                PreparedTriplet::prepare_all(&subset, &ws.data.train, &ws.data.corpus, Some(&ws.prepared))?;
            let params = config.ranker.train_params();
            let mut sgd = Sgd {
                learning_rate: params.learning_rate,
            };
            let seed = config.seed("committee-train", &[repeat as u64, i as u64, m as u64]);
            let out = train_with(start, &params, &prepared, config.ranker.epochs_selection, seed, &mut sgd, None)?;
            Ok((out.state, take * config.ranker.epochs_selection))
        })
        .collect::<Result<Vec<_>>>()?;
    let triplet_epochs = members.iter().map(|(_, t)| t).sum();
    Ok((members.into_iter().map(|(s, _)| s).collect(), triplet_epochs))
}

#[allow(clippy::too_many_arguments)]
fn iterate(
    config: &ExperimentConfig,
    ws: &Workspace<'_>,
    start: &RankerState,
    repeat: usize,
    prev: Option<&IterationState>,
    selector: Option<&RankerState>,
    dir: &Path,
) -> Result<(IterationState, RankerState)> {
    let i = prev.map_or(1, |p| p.iteration + 1);
    let s = config.sizes()[i - 1];
    let strategy = config.selection.strategy;
    let pool: Vec<QueryId> = match prev {
        Some(p) => p.pool.clone(),
        None => {
            let mut v: Vec<QueryId> = ws.data.train.ids().cloned().collect();
            v.sort();
            v
        }
    };
    let empty = Vec::new();
    let annotated_before = prev.map_or(&empty, |p| &p.annotated);
    let ctx = PoolContext {
        queries: &ws.data.train,
        corpus: &ws.data.corpus,
        prepared: &ws.prepared,
        bm25: &ws.bm25_train,
        depth: config.selection.candidate_depth,
    };
    let bm25_list = |q: &QueryId| -> Result<RankedList> {
        ws.bm25_train
            .get(q)
            .map(|l| l.top(config.selection.candidate_depth))
            .ok_or_else(|| Error::invalid(format!("no BM25 run for {q}")))
    };

    // Selection. The first iteration and the random strategy use BM25
    // rankings; the others use the previous selection ranker.
    let selection_started = Instant::now();
    let mut committee_epochs = 0;
    let selected_with = match (i, selector) {
        (1, _) | (_, None) => Strategy::Random,
        _ => strategy,
    };
    let mut selected = Vec::new();
    let mut jobs = Vec::new();
    match selected_with {
        Strategy::Random => {
            let mut rng = rng_from_seed(config.seed("select", &[repeat as u64, i as u64]));
            for q in select_random(&pool, s, &mut rng)? {
                jobs.push(Job::Query(q.clone(), bm25_list(&q)?));
                selected.push(SelectedItem { query: q, doc: None, score: 0.0 });
            }
        }
        Strategy::Uncertainty => {
            let ranker = selector.expect("checked above");
            let reranked = ctx.rerank_pool(ranker, &pool)?;
            for (q, d, score) in select_uncertainty(&reranked, &pool, s, config.selection.one_pair_per_query)? {
                jobs.push(Job::Pair(q.clone(), d.clone(), reranked[&q].clone()));
                selected.push(SelectedItem { query: q, doc: Some(d), score });
            }
        }
        Strategy::Qbc => {
            let ranker = selector.expect("checked above");
            let (committee, epochs) = train_committee(config, ws, start, annotated_before, repeat, i)?;
            committee_epochs = epochs;
            let picked = select_qbc(&committee, &pool, &ctx, config.selection.effective_pair_depth(), s)?;
            for (q, score) in picked {
                jobs.push(Job::Query(q.clone(), ctx.rerank(ranker, &q)?));
                selected.push(SelectedItem { query: q, doc: None, score });
            }
        }
        Strategy::Diversity => {
            let ranker = selector.expect("checked above");
            let mut rng = rng_from_seed(config.seed("kmeans", &[repeat as u64, i as u64]));
            let picked = select_diversity(ranker, &pool, &ws.data.train, s, config.selection.kmeans_max_iters, &mut rng)?;
            for (q, score) in picked {
                jobs.push(Job::Query(q.clone(), ctx.rerank(ranker, &q)?));
                selected.push(SelectedItem { query: q, doc: None, score });
            }
        }
    }
    let selection_seconds = selection_started.elapsed().as_secs_f64();

    // Annotation, one independent random stream per item.
    let annotations = jobs
        .par_iter()
        .map(|job| {
            let q = job.query();
            let bm25 = ws
                .bm25_train
                .get(q)
                .ok_or_else(|| Error::invalid(format!("no BM25 run for {q}")))?;
            let doc = match job {
                Job::Pair(_, d, _) => d.as_str(),
                Job::Query(..) => "",
            };
            let parts = [
                SeedPart::Int(repeat as u64),
                SeedPart::Int(i as u64),
                SeedPart::Str(q.as_str()),
                SeedPart::Str(doc),
            ];
            let mut rng = derived_rng(config.master_seed, "annotate", &parts);
            match job {
                Job::Query(q, ranked) => annotate_query(q, ranked, bm25, &ws.data.qrels, &config.annotation, &mut rng),
                Job::Pair(q, d, ranked) => {
                    annotate_pair(q, d, ranked, bm25, &ws.data.qrels, &config.annotation, &mut rng)
                }
            }
        })
        .collect::<Result<Vec<Annotation>>>()?;

    let mut ledger = prev.map(|p| p.ledger.clone()).unwrap_or_default();
    ledger.update(i, &annotations)?;
    let mut annotated = annotated_before.clone();
    annotated.extend(annotations.iter().filter_map(|a| a.triplet.clone()));

    let picked: BTreeSet<&QueryId> = selected.iter().map(|it| &it.query).collect();
    let mut annotated_queries = prev.map(|p| p.annotated_queries.clone()).unwrap_or_default();
    for item in &selected {
        if !annotated_queries.contains(&item.query) {
            annotated_queries.push(item.query.clone());
        }
    }
    let mut next_pool: Vec<QueryId> = pool.iter().filter(|q| !picked.contains(q)).cloned().collect();
    if config.annotation.exhausted == ExhaustedPolicy::ReturnToPool {
        let returned: BTreeSet<QueryId> = annotations.iter().filter(|a| a.is_skipped()).map(|a| a.query.clone()).collect();
        next_pool.extend(returned);
        next_pool.sort();
        next_pool.dedup();
    }

    // Training from the scenario start on all of D.
    let training_started = Instant::now();
    let trained = train_pair(
        config,
        ws,
        start,
        &annotated,
        (
            config.seed("train-selection", &[repeat as u64, i as u64]),
            config.seed("train-evaluation", &[repeat as u64, i as u64]),
        ),
    )?;
    let mut time = prev.map(|p| p.time.clone()).unwrap_or_default();
    let selection_hours = match (i, config.cost.cpu_hours_measured) {
        (1, _) => 0.0,
        (_, true) => selection_seconds / 3600.0,
        (_, false) => config.cost.cpu_hours,
    };
    time.push(hours(config, trained.triplet_epochs + committee_epochs, training_started), selection_hours)?;

    let metric = ws.evaluate(&trained.evaluation, config)?;
    let cumulative: Vec<u64> = (1..=i).map(|k| ledger.cumulative(k)).collect();
    let cost = total_cost(&cumulative, &time, &config.cost)?
        .rows
        .pop()
        .expect("one row per iteration");

    let selection_checkpoint = format!("selection-{i:03}.ckpt");
    let evaluation_checkpoint = format!("evaluation-{i:03}.ckpt");
    save_checkpoint(&trained.selection, &dir.join(&selection_checkpoint))?;
    save_checkpoint(&trained.evaluation, &dir.join(&evaluation_checkpoint))?;

    let terminated = (next_pool.is_empty() && i < config.iterations)
        .then(|| format!("pool exhausted after iteration {i}"));
    let state = IterationState {
        strategy,
        repeat,
        iteration: i,
        selected_with,
        selected,
        annotated_queries,
        pool: next_pool,
        selection_checkpoint,
        evaluation_checkpoint,
        selection_fingerprint: trained.selection.fingerprint(),
        ledger,
        time,
        summary: IterationSummary {
            iteration: i,
            train_size: annotated.len(),
            ndcg10: metric.mean,
            per_query: metric.per_query,
            cost,
        },
        annotated,
        terminated,
    };
    Ok((state, trained.selection))
}

/// Runs every `(strategy, repeat)` of `strategies` under `out`, in
/// parallel, and returns their summaries in a fixed order.
pub fn run_strategies(
    config: &ExperimentConfig,
    data: &DataBundle,
    strategies: &[Strategy],
    out: &Path,
    options: RunOptions,
) -> Result<Vec<RunSummary>> {
    config.validate()?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let config_path = out.join("config.json");
    if config_path.exists() {
        let existing = ExperimentConfig::default().merge_file(&config_path)?;
        if existing.fingerprint() != config.fingerprint() {
            return Err(Error::Resume(format!(
                "{} holds a run with a different config (fingerprint {} vs {})",
                out.display(),
                &existing.fingerprint()[..12],
                &config.fingerprint()[..12]
            )));
        }
    }
    write_text(&config_path, &config.to_json_pretty())?;
    let jobs: Vec<(Strategy, usize)> = strategies
        .iter()
        .flat_map(|&s| (0..config.repeats_for(s)).map(move |r| (s, r)))
        .collect();
    jobs.par_iter()
        .map(|&(s, r)| {
            let dir: PathBuf = out.join(run_dir_name(s, r));
            let states = run_experiment_with(&config.with_strategy(s), data, r, &dir, options)?;
            run_summary(&states)
        })
        .collect()
}

/// Summaries of every finished or partial run found under `dir`.
pub fn collect_summaries(dir: &Path) -> Result<Vec<RunSummary>> {
    let mut found = Vec::new();
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let summary = path.join("summary.json");
        if path.is_dir() && summary.exists() {
            found.push(read_json::<RunSummary>(&summary)?);
        }
    }
    found.sort_by(|a, b| (&a.strategy, a.seed).cmp(&(&b.strategy, b.seed)));
    Ok(found)
}

/// Seed for the per-repeat variability streams.
pub(crate) fn variability_seed(config: &ExperimentConfig, size: usize, repeat: usize) -> u64 {
    derive_seed(config.master_seed, "variability", &[SeedPart::Int(size as u64), SeedPart::Int(repeat as u64)])
}
