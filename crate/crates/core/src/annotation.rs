//! The simulated annotator.
//!
//! An annotator walks a ranking from the top until they meet a relevant
//! passage; every passage looked at is one assessment. Relevance comes
//! from the qrels.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::datamodel::{DocumentId, QueryId, Qrels, RankedList, TrainingTriplet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExhaustedPolicy {
    /// The query leaves the pool for good.
    Remove,
    /// The query stays selectable in later iterations.
    ReturnToPool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnnotationConfig {
    /// How far down the ranking the annotator looks for a positive.
    pub annotation_depth: usize,
    /// BM25 depth negatives are drawn from.
    pub negative_depth: usize,
    /// Keep judged-relevant passages out of the negative pool.
    pub exclude_judged_relevant: bool,
    pub exhausted: ExhaustedPolicy,
}

impl Default for AnnotationConfig {
    fn default() -> Self {
        Self {
            annotation_depth: 100,
            negative_depth: 1000,
            exclude_judged_relevant: true,
            exhausted: ExhaustedPolicy::Remove,
        }
    }
}

impl AnnotationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.annotation_depth == 0 || self.negative_depth == 0 {
            return Err(Error::Config("annotation: annotation_depth and negative_depth must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FirstRelevant {
    Found { rank: usize, doc: DocumentId },
    /// Nothing relevant within the examined prefix.
    Exhausted { examined: usize },
}

/// Scans ranks `1..=min(depth, |ranked|)` for the first relevant passage.
pub fn first_relevant(ranked: &RankedList, qrels: &Qrels, depth: usize) -> Result<FirstRelevant> {
    if depth == 0 {
        return Err(Error::invalid("annotation depth must be >= 1"));
    }
    for (i, doc) in ranked.docs().take(depth).enumerate() {
        if qrels.is_relevant(ranked.query(), doc) {
            return Ok(FirstRelevant::Found {
                rank: i + 1,
                doc: doc.clone(),
            });
        }
    }
    Ok(FirstRelevant::Exhausted {
        examined: depth.min(ranked.len()),
    })
}

/// One annotated query.
#[derive(Debug, Clone, PartialEq)]
pub struct Annotation {
    pub query: QueryId,
    /// `None` when the walk found nothing relevant.
    pub triplet: Option<TrainingTriplet>,
    pub assessments: u64,
    /// Rank of the positive in the walked ranking, when a walk happened
    /// and succeeded.
    pub first_relevant_rank: Option<usize>,
    /// Positions looked at during the walk (0 if no walk was needed).
    pub examined: usize,
}

impl Annotation {
    pub fn is_skipped(&self) -> bool {
        self.triplet.is_none()
    }
}

/// Uniform draw from the top `negative_depth` of `bm25`, never the
/// positive and, if configured, never a judged-relevant passage.
pub fn sample_negative(
    bm25: &RankedList,
    qrels: &Qrels,
    positive: &DocumentId,
    config: &AnnotationConfig,
    rng: &mut impl Rng,
) -> Result<DocumentId> {
    let query = bm25.query();
    let eligible: Vec<&DocumentId> = bm25
        .docs()
        .take(config.negative_depth)
        .filter(|d| *d != positive && !(config.exclude_judged_relevant && qrels.is_relevant(query, d)))
        .collect();
    if eligible.is_empty() {
        return Err(Error::invalid(format!("no eligible negative for query {query}")));
    }
    Ok(eligible[rng.gen_range(0..eligible.len())].clone())
}

fn check_lists(query: &QueryId, ranked: &RankedList, bm25: &RankedList) -> Result<()> {
    if ranked.query() != query || bm25.query() != query {
        return Err(Error::invalid(format!(
            "rankings for {} and {} passed while annotating {query}",
            ranked.query(),
            bm25.query()
        )));
    }
    Ok(())
}

/// Query-level annotation: the positive is the first relevant passage of
/// `ranked`, costing its rank in assessments.
pub fn annotate_query(
    query: &QueryId,
    ranked: &RankedList,
    bm25: &RankedList,
    qrels: &Qrels,
    config: &AnnotationConfig,
    rng: &mut impl Rng,
) -> Result<Annotation> {
    check_lists(query, ranked, bm25)?;
    match first_relevant(ranked, qrels, config.annotation_depth)? {
        FirstRelevant::Found { rank, doc } => {
            let negative = sample_negative(bm25, qrels, &doc, config, rng)?;
            Ok(Annotation {
                query: query.clone(),
                triplet: Some(TrainingTriplet::new(query.clone(), doc, negative)?),
                assessments: rank as u64,
                first_relevant_rank: Some(rank),
                examined: rank,
            })
        }
        FirstRelevant::Exhausted { examined } => Ok(Annotation {
            query: query.clone(),
            triplet: None,
            assessments: examined as u64,
            first_relevant_rank: None,
            examined,
        }),
    }
}

/// Pair-level annotation of `(query, selected)`.
///
/// A relevant pair costs one assessment and becomes the positive. An
/// irrelevant pair becomes the negative and the annotator then walks
/// `ranked` for a positive, paying one plus the walk.
pub fn annotate_pair(
    query: &QueryId,
    selected: &DocumentId,
    ranked: &RankedList,
    bm25: &RankedList,
    qrels: &Qrels,
    config: &AnnotationConfig,
    rng: &mut impl Rng,
) -> Result<Annotation> {
    check_lists(query, ranked, bm25)?;
    if qrels.is_relevant(query, selected) {
        let negative = sample_negative(bm25, qrels, selected, config, rng)?;
        return Ok(Annotation {
            query: query.clone(),
            triplet: Some(TrainingTriplet::new(query.clone(), selected.clone(), negative)?),
            assessments: 1,
            first_relevant_rank: None,
            examined: 0,
        });
    }
    match first_relevant(ranked, qrels, config.annotation_depth)? {
        FirstRelevant::Found { rank, doc } => Ok(Annotation {
            query: query.clone(),
            triplet: Some(TrainingTriplet::new(query.clone(), doc, selected.clone())?),
            assessments: 1 + rank as u64,
            first_relevant_rank: Some(rank),
            examined: rank,
        }),
        FirstRelevant::Exhausted { examined } => Ok(Annotation {
            query: query.clone(),
            triplet: None,
            assessments: 1 + examined as u64,
            first_relevant_rank: None,
            examined,
        }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub iteration: usize,
    pub query_id: QueryId,
    /// `triplet` or `skipped`.
    pub outcome: String,
    pub assessments: u64,
    pub positive_id: Option<DocumentId>,
    pub negative_id: Option<DocumentId>,
    pub first_relevant_rank: Option<usize>,
    pub examined: usize,
}

/// Per-query assessment records and the running total `A(i)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AssessmentLedger {
    rows: Vec<LedgerRow>,
    /// Assessments spent in iteration `i` at index `i − 1`.
    per_iteration: Vec<u64>,
}

impl AssessmentLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn iterations(&self) -> usize {
        self.per_iteration.len()
    }

    pub fn rows(&self) -> &[LedgerRow] {
        &self.rows
    }

    /// Assessments spent in iteration `i` (1-based).
    pub fn spent(&self, i: usize) -> u64 {
        if i == 0 {
            0
        } else {
            self.per_iteration[i - 1]
        }
    }

    /// `A(i)`; `A(0) = 0`.
    pub fn cumulative(&self, i: usize) -> u64 {
        self.per_iteration[..i].iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.cumulative(self.iterations())
    }

    /// Records iteration `iteration`, which must directly follow the last
    /// one. Rows are stored in query-id order.
    pub fn update(&mut self, iteration: usize, annotations: &[Annotation]) -> Result<()> {
        if iteration != self.iterations() + 1 {
            return Err(Error::invalid(format!(
                "ledger expects iteration {}, got {iteration}",
                self.iterations() + 1
            )));
        }
        let mut sorted: Vec<&Annotation> = annotations.iter().collect();
        sorted.sort_by(|a, b| a.query.cmp(&b.query));
        let mut spent = 0;
        for a in sorted {
            spent += a.assessments;
            self.rows.push(LedgerRow {
                iteration,
                query_id: a.query.clone(),
                outcome: if a.is_skipped() { "skipped" } else { "triplet" }.to_string(),
                assessments: a.assessments,
                positive_id: a.triplet.as_ref().map(|t| t.positive.clone()),
                negative_id: a.triplet.as_ref().map(|t| t.negative.clone()),
                first_relevant_rank: a.first_relevant_rank,
                examined: a.examined,
            });
        }
        self.per_iteration.push(spent);
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        if self.rows.is_empty() {
            w.write_record([
                "iteration",
                "query_id",
                "outcome",
                "assessments",
                "positive_id",
                "negative_id",
                "first_relevant_rank",
                "examined",
            ])?;
        }
        for r in &self.rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::datamodel::write_text(path.as_ref(), &self.to_csv_string()?)
    }

    /// Rebuilds a ledger from its CSV. Iterations without rows in the file
    /// count as empty.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut r = csv::Reader::from_path(path).map_err(|e| Error::parse(path, 0, e.to_string()))?;
        let mut rows: Vec<LedgerRow> = Vec::new();
        for (i, rec) in r.deserialize().enumerate() {
            let row: LedgerRow = rec.map_err(|e| Error::parse(path, i + 2, e.to_string()))?;
            if row.iteration == 0 || rows.last().is_some_and(|p| p.iteration > row.iteration) {
                return Err(Error::parse(path, i + 2, "iterations must start at 1 and not decrease"));
            }
            rows.push(row);
        }
        let n = rows.last().map_or(0, |r| r.iteration);
        let mut per_iteration = vec![0; n];
        for r in &rows {
            per_iteration[r.iteration - 1] += r.assessments;
        }
        Ok(Self { rows, per_iteration })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use std::collections::BTreeMap;

    fn q() -> QueryId {
        QueryId::new("q").unwrap()
    }

    fn d(i: usize) -> DocumentId {
        DocumentId::new(format!("d{i:03}")).unwrap()
    }

    /// Docs d000..d{n-1} in that order.
    fn ranking(n: usize) -> RankedList {
        RankedList::from_scored(q(), (0..n).map(|i| (d(i), (n - i) as f64))).unwrap()
    }

    fn qrels(relevant: &[usize]) -> Qrels {
        let mut qr = Qrels::new(1).unwrap();
        for &i in relevant {
            qr.insert(q(), d(i), 1).unwrap();
        }
        qr
    }

    #[test]
    fn first_relevant_cases() {
        let r = ranking(100);
        assert_eq!(
            first_relevant(&r, &qrels(&[0]), 100).unwrap(),
            FirstRelevant::Found { rank: 1, doc: d(0) }
        );
        assert_eq!(
            first_relevant(&r, &qrels(&[6, 40]), 100).unwrap(),
            FirstRelevant::Found { rank: 7, doc: d(6) }
        );
        assert_eq!(first_relevant(&r, &qrels(&[]), 100).unwrap(), FirstRelevant::Exhausted { examined: 100 });
        assert_eq!(first_relevant(&ranking(30), &qrels(&[]), 100).unwrap(), FirstRelevant::Exhausted { examined: 30 });
    }

    #[test]
    fn query_annotation_costs_rank() {
        let cfg = AnnotationConfig::default();
        let r = ranking(200);
        let mut rng = rng_from_seed(0);
        let a = annotate_query(&q(), &r.top(100), &r, &qrels(&[2, 9]), &cfg, &mut rng).unwrap();
        assert_eq!(a.assessments, 3);
        let t = a.triplet.unwrap();
        assert_eq!(t.positive, d(2));
        assert!(t.negative != d(2) && t.negative != d(9));

        let none = annotate_query(&q(), &r.top(100), &r, &qrels(&[150]), &cfg, &mut rng).unwrap();
        assert!(none.is_skipped());
        assert_eq!(none.assessments, 100);
    }

    #[test]
    fn pair_annotation_costs() {
        let cfg = AnnotationConfig::default();
        let r = ranking(200);
        let mut rng = rng_from_seed(0);
        let rel = annotate_pair(&q(), &d(5), &r.top(100), &r, &qrels(&[5]), &cfg, &mut rng).unwrap();
        assert_eq!(rel.assessments, 1);
        assert_eq!(rel.triplet.as_ref().unwrap().positive, d(5));

        let irr = annotate_pair(&q(), &d(7), &r.top(100), &r, &qrels(&[1]), &cfg, &mut rng).unwrap();
        assert_eq!(irr.assessments, 3);
        let t = irr.triplet.unwrap();
        assert_eq!((t.positive, t.negative), (d(1), d(7)));

        let none = annotate_pair(&q(), &d(7), &r.top(100), &r, &qrels(&[]), &cfg, &mut rng).unwrap();
        assert!(none.is_skipped());
        assert_eq!(none.assessments, 101);
    }

    #[test]
    fn no_eligible_negative_is_an_error() {
        let r = ranking(2);
        let err = annotate_query(&q(), &r, &r, &qrels(&[0, 1]), &AnnotationConfig::default(), &mut rng_from_seed(0));
        assert!(err.is_err());
    }

    #[test]
    fn negatives_are_uniform() {
        // 20 candidates, 2 relevant: 18 eligible, expected 1000/18 each
        let r = ranking(20);
        let qr = qrels(&[0, 3]);
        let cfg = AnnotationConfig::default();
        let mut rng = rng_from_seed(99);
        let mut counts: BTreeMap<DocumentId, f64> = BTreeMap::new();
        let draws = 1000;
        for _ in 0..draws {
            let n = sample_negative(&r, &qr, &d(0), &cfg, &mut rng).unwrap();
            assert!(!qr.is_relevant(&q(), &n));
            *counts.entry(n).or_insert(0.0) += 1.0;
        }
        assert_eq!(counts.len(), 18);
        let expected = draws as f64 / 18.0;
        let chi2: f64 = counts.values().map(|o| (o - expected).powi(2) / expected).sum();
        // upper 1% point of chi-square with 17 degrees of freedom
        assert!(chi2 < 33.409, "chi2 = {chi2}");
    }

    #[test]
    fn ledger_accumulates_and_round_trips() {
        let mut ledger = AssessmentLedger::new();
        let ann = |name: &str, n: u64| Annotation {
            query: QueryId::new(name).unwrap(),
            triplet: None,
            assessments: n,
            first_relevant_rank: None,
            examined: n as usize,
        };
        ledger.update(1, &[ann("b", 3), ann("a", 1), ann("c", 7)]).unwrap();
        assert_eq!(ledger.cumulative(1), 11);
        ledger.update(2, &[]).unwrap();
        assert_eq!(ledger.cumulative(2), 11);
        assert!(ledger.update(4, &[]).is_err());
        ledger.update(3, &[ann("d", 2)]).unwrap();
        let resum: u64 = ledger.rows().iter().map(|r| r.assessments).sum();
        assert_eq!(resum, ledger.total());

        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("ledger.csv");
        ledger.write_csv(&p).unwrap();
        let back = AssessmentLedger::read_csv(&p).unwrap();
        assert_eq!(back, ledger);
    }
}
