//! Mini-batch training on RankNet loss.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::features::{PreparedCorpus, PreparedText};
use super::loss::{ranknet_grad, ranknet_loss};
use super::model::RankerState;
use crate::datamodel::{Corpus, DocumentId, QueryId, QuerySet, TrainingTriplet};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainParams {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EarlyStopping {
    /// Validate every this many epochs.
    pub every: usize,
    /// Stop after this many validations without improvement.
    pub patience: usize,
}

/// A triplet with its three texts already tokenized.
#[derive(Debug, Clone)]
pub struct PreparedTriplet {
    pub query: PreparedText,
    pub positive: PreparedText,
    pub negative: PreparedText,
}

impl PreparedTriplet {
    pub fn prepare_all(
        triplets: &[TrainingTriplet],
        queries: &QuerySet,
        corpus: &Corpus,
        prepared: Option<&PreparedCorpus>,
    ) -> Result<Vec<PreparedTriplet>> {
        let doc = |id: &DocumentId, query: &QueryId| -> Result<PreparedText> {
            let ordinal = corpus
                .ordinal(id)
                .ok_or_else(|| Error::invalid(format!("triplet for {query} references unknown document {id}")))?;
            Ok(match prepared {
                Some(p) => p.get(ordinal).clone(),
                None => PreparedText::new(corpus.text_at(ordinal).unwrap_or_default()),
            })
        };
        let mut out = Vec::with_capacity(triplets.len());
        for t in triplets {
            let query_text = queries
                .get(&t.query)
                .ok_or_else(|| Error::invalid(format!("triplet references unknown query {}", t.query)))?;
            out.push(PreparedTriplet {
                query: PreparedText::new(query_text),
                positive: doc(&t.positive, &t.query)?,
                negative: doc(&t.negative, &t.query)?,
            });
        }
        Ok(out)
    }
}

/// Dense gradient storage that remembers which rows were written.
#[derive(Debug, Clone)]
pub struct GradBuffer {
    dim: usize,
    values: Vec<f64>,
    marked: Vec<bool>,
    touched: Vec<usize>,
}

impl GradBuffer {
    pub fn new(rows: usize, dim: usize) -> Self {
        Self {
            dim,
            values: vec![0.0; rows * dim],
            marked: vec![false; rows],
            touched: Vec::new(),
        }
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        if !self.marked[r] {
            self.marked[r] = true;
            self.touched.push(r);
        }
        &mut self.values[r * self.dim..(r + 1) * self.dim]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.dim..(r + 1) * self.dim]
    }

    pub fn touched_rows(&self) -> &[usize] {
        &self.touched
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn clear(&mut self) {
        for &r in &self.touched {
            self.values[r * self.dim..(r + 1) * self.dim].fill(0.0);
            self.marked[r] = false;
        }
        self.touched.clear();
    }
}

/// Applies a gradient to the weights.
pub trait Optimizer {
    fn apply(&mut self, weights: &mut [f64], dim: usize, grad: &GradBuffer);
}

/// Plain gradient descent.
#[derive(Debug, Clone, Copy)]
pub struct Sgd {
    pub learning_rate: f64,
}

impl Optimizer for Sgd {
    fn apply(&mut self, weights: &mut [f64], dim: usize, grad: &GradBuffer) {
        for &r in grad.touched_rows() {
            for (w, g) in weights[r * dim..(r + 1) * dim].iter_mut().zip(grad.row(r)) {
                *w -= self.learning_rate * g;
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub state: RankerState,
    /// Mean loss per epoch, measured while the epoch ran.
    pub epoch_losses: Vec<f64>,
    pub epochs_run: usize,
    pub best_validation: Option<f64>,
}

/// Mean RankNet loss of `state` over `triplets`.
pub fn batch_loss(state: &RankerState, triplets: &[PreparedTriplet], sigma: f64) -> f64 {
    let total: f64 = triplets
        .iter()
        .map(|t| {
            ranknet_loss(
                state.score_prepared(&t.query, &t.positive),
                state.score_prepared(&t.query, &t.negative),
                sigma,
            )
        })
        .sum();
    total / triplets.len() as f64
}

fn accumulate_batch(state: &RankerState, batch: &[&PreparedTriplet], sigma: f64, grad: &mut GradBuffer) -> f64 {
    let scale = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    for t in batch {
        let sp = state.score_prepared(&t.query, &t.positive);
        let sn = state.score_prepared(&t.query, &t.negative);
        loss += ranknet_loss(sp, sn, sigma);
        let g = ranknet_grad(sp, sn, sigma) * scale;
        state.accumulate_score_grad(&t.query, &t.positive, g, grad);
        state.accumulate_score_grad(&t.query, &t.negative, -g, grad);
    }
    loss
}

/// Dense gradient of [`batch_loss`] with respect to every weight.
pub fn batch_gradient(state: &RankerState, triplets: &[PreparedTriplet], sigma: f64) -> Vec<f64> {
    let mut grad = GradBuffer::new(state.rows(), state.dim());
    let batch: Vec<&PreparedTriplet> = triplets.iter().collect();
    accumulate_batch(state, &batch, sigma, &mut grad);
    grad.values
}

fn check_params(params: &TrainParams, epochs: usize, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("training needs at least one triplet"));
    }
    if epochs == 0 {
        return Err(Error::invalid("epochs must be >= 1"));
    }
    if !(params.learning_rate >= 0.0 && params.learning_rate.is_finite()) {
        return Err(Error::invalid(format!("learning rate must be >= 0, got {}", params.learning_rate)));
    }
    if params.batch_size == 0 {
        return Err(Error::invalid("batch size must be >= 1"));
    }
    Ok(())
}

/// Trains a copy of `state` with SGD on shuffled mini-batches.
pub fn train(
    state: &RankerState,
    params: &TrainParams,
    triplets: &[TrainingTriplet],
    queries: &QuerySet,
    corpus: &Corpus,
    epochs: usize,
    seed: u64,
) -> Result<TrainOutcome> {
    check_params(params, epochs, triplets.len())?;
    let prepared = PreparedTriplet::prepare_all(triplets, queries, corpus, None)?;
    let mut sgd = Sgd {
        learning_rate: params.learning_rate,
    };
    train_with(state, params, &prepared, epochs, seed, &mut sgd, None)
}

/// The general training loop: any optimizer, optional early stopping.
///
/// With early stopping, `validate` is called every `every` epochs (higher
/// is better) and the best validated state is returned.
pub fn train_with(
    state: &RankerState,
    params: &TrainParams,
    triplets: &[PreparedTriplet],
    epochs: usize,
    seed: u64,
    optimizer: &mut dyn Optimizer,
    mut early: Option<(EarlyStopping, &mut dyn FnMut(&RankerState) -> f64)>,
) -> Result<TrainOutcome> {
    check_params(params, epochs, triplets.len())?;
    let mut current = state.clone();
    let mut rng = rng_from_seed(seed);
    let mut order: Vec<usize> = (0..triplets.len()).collect();
    let mut grad = GradBuffer::new(current.rows(), current.dim());
    let mut epoch_losses = Vec::with_capacity(epochs);
    let mut best: Option<(f64, RankerState)> = None;
    let mut stale = 0usize;
    let mut epochs_run = 0;

    for epoch in 1..=epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(params.batch_size) {
            let batch: Vec<&PreparedTriplet> = chunk.iter().map(|&i| &triplets[i]).collect();
            epoch_loss += accumulate_batch(&current, &batch, params.sigma, &mut grad);
            optimizer.apply(&mut current.weights, current.dim, &grad);
            grad.clear();
            current.step += 1;
        }
        epoch_losses.push(epoch_loss / triplets.len() as f64);
        epochs_run = epoch;

        if let Some((cfg, validate)) = early.as_mut() {
            if epoch % cfg.every == 0 {
                let score = validate(&current);
                if best.as_ref().is_none_or(|(b, _)| score > *b) {
                    best = Some((score, current.clone()));
                    stale = 0;
                } else {
                    stale += 1;
                    if stale >= cfg.patience {
                        break;
                    }
                }
            }
        }
    }

    let (state, best_validation) = match best {
        Some((score, s)) => (s, Some(score)),
        None => (current, None),
    };
    Ok(TrainOutcome {
        state,
        epoch_losses,
        epochs_run,
        best_validation,
    })
}
