//! nDCG@k, paired t-tests and the report files.

mod report;
mod stats;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::datamodel::{QueryId, Qrels, Run};
use crate::error::{Error, Result};

pub use report::{emit_reports, IterationSummary, ReportFiles, RunSummary, VariabilityRecord};
pub use stats::{incomplete_beta, paired_ttest, t_two_sided_p, Significance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gain {
    /// `grade`
    #[default]
    Linear,
    /// `2^grade − 1`
    Exponential,
}

impl Gain {
    fn of(self, grade: u32) -> f64 {
        match self {
            Gain::Linear => f64::from(grade),
            Gain::Exponential => 2f64.powi(grade as i32) - 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricResult {
    pub k: usize,
    pub per_query: BTreeMap<QueryId, f64>,
    pub mean: f64,
}

impl MetricResult {
    pub fn count(&self) -> usize {
        self.per_query.len()
    }
}

fn discount(rank: usize) -> f64 {
    1.0 / ((rank + 1) as f64).log2()
}

/// nDCG@k over every query with at least one positive grade in `qrels`.
///
/// Unjudged documents gain nothing and a judged query missing from the run
/// scores 0. Only the ranking order matters, never the score values.
pub fn ndcg_at_k(run: &Run, qrels: &Qrels, k: usize, gain: Gain) -> Result<MetricResult> {
    if k == 0 {
        return Err(Error::invalid("nDCG cutoff must be >= 1"));
    }
    if !qrels.queries().any(|q| run.get(q).is_some()) {
        return Err(Error::invalid("run and qrels share no queries"));
    }
    let mut per_query = BTreeMap::new();
    for q in qrels.queries() {
        let judged = qrels.judged(q).expect("listed queries have judgments");
        let mut grades: Vec<u32> = judged.values().copied().filter(|&g| g > 0).collect();
        if grades.is_empty() {
            continue;
        }
        grades.sort_unstable_by(|a, b| b.cmp(a));
        let idcg: f64 = grades.iter().take(k).enumerate().map(|(i, &g)| gain.of(g) * discount(i + 1)).sum();
        let dcg: f64 = run.get(q).map_or(0.0, |list| {
            list.docs()
                .take(k)
                .enumerate()
                .map(|(i, d)| gain.of(judged.get(d).copied().unwrap_or(0)) * discount(i + 1))
                .sum()
        });
        per_query.insert(q.clone(), dcg / idcg);
    }
    if per_query.is_empty() {
        return Err(Error::invalid("no query in qrels has a positive grade"));
    }
    let mean = per_query.values().sum::<f64>() / per_query.len() as f64;
    Ok(MetricResult { k, per_query, mean })
}
