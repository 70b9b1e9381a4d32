use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::data::Workspace;
use super::run::variability_seed;
use super::{DataBundle, ExperimentConfig};
use crate::annotation::{annotate_query, first_relevant, FirstRelevant};
use crate::datamodel::QueryId;
use crate::error::{Error, Result};
use crate::evaluation::{MetricResult, VariabilityRecord};
use crate::ranker::{train_with, PreparedTriplet, Sgd};
use crate::rng::rng_from_seed;

/// Trains on random training sets of each size, `repeats` times each, and
/// evaluates on the test queries. Positives come from BM25 rankings.
///
/// Records are ordered by size, then repeat.
pub fn run_variability(
    config: &ExperimentConfig,
    data: &DataBundle,
    sizes: &[usize],
    repeats: usize,
) -> Result<Vec<VariabilityRecord>> {
    config.validate()?;
    if repeats < 2 {
        return Err(Error::invalid("variability needs at least 2 repeats"));
    }
    let ws = Workspace::new(data, config)?;
    let mut ids: Vec<QueryId> = data.train.ids().cloned().collect();
    ids.sort();
    let candidates = |q: &QueryId| {
        ws.bm25_train
            .get(q)
            .map(|l| l.top(config.selection.candidate_depth))
            .ok_or_else(|| Error::invalid(format!("no BM25 run for {q}")))
    };
    let mut producible = 0;
    for q in &ids {
        if let FirstRelevant::Found { .. } = first_relevant(&candidates(q)?, &data.qrels, config.annotation.annotation_depth)? {
            producible += 1;
        }
    }
    if let Some(&too_big) = sizes.iter().find(|&&s| s > producible || s == 0) {
        return Err(Error::invalid(format!(
            "size {too_big} is outside 1..={producible} (training queries that yield a triplet)"
        )));
    }

    let jobs: Vec<(usize, usize)> = sizes.iter().flat_map(|&s| (0..repeats).map(move |r| (s, r))).collect();
    jobs.par_iter()
        .map(|&(size, repeat)| {
            let mut rng = rng_from_seed(variability_seed(config, size, repeat));
            let mut order = ids.clone();
            order.shuffle(&mut rng);
            let mut triplets = Vec::with_capacity(size);
            for q in &order {
                if triplets.len() == size {
                    break;
                }
                let bm25 = ws.bm25_train.get(q).expect("every training query has a run");
                let a = annotate_query(q, &candidates(q)?, bm25, &data.qrels, &config.annotation, &mut rng)?;
                triplets.extend(a.triplet);
            }
            let prepared = PreparedTriplet::prepare_all(&triplets, &data.train, &data.corpus, Some(&ws.prepared))?;
            let params = config.ranker.train_params();
            let mut sgd = Sgd {
                learning_rate: params.learning_rate,
            };
            let seed = config.seed("variability-train", &[size as u64, repeat as u64]);
            let start = config.start_state(repeat)?;
            let trained = train_with(&start, &params, &prepared, config.ranker.epochs_evaluation, seed, &mut sgd, None)?;
            Ok(VariabilityRecord {
                strategy: "random".into(),
                size,
                seed: repeat as u64,
                ndcg10: ws.evaluate(&trained.state, config)?.mean,
            })
        })
        .collect()
}

/// Test nDCG@10 of the untrained starting ranker of `repeat`.
pub fn evaluate_start(config: &ExperimentConfig, data: &DataBundle, repeat: usize) -> Result<MetricResult> {
    let ws = Workspace::new(data, config)?;
    ws.evaluate(&config.start_state(repeat)?, config)
}

/// Mean of [`evaluate_start`] over repeats `0..repeats`.
pub fn untrained_baseline(config: &ExperimentConfig, data: &DataBundle, repeats: usize) -> Result<f64> {
    if repeats == 0 {
        return Err(Error::invalid("repeats must be >= 1"));
    }
    let ws = Workspace::new(data, config)?;
    let mut sum = 0.0;
    for r in 0..repeats {
        sum += ws.evaluate(&config.start_state(r)?, config)?.mean;
    }
    Ok(sum / repeats as f64)
}
