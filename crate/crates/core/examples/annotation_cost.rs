//! The simulated annotator and what its work costs. Query-level
//! annotation pays the rank of the first relevant passage; pair-level
//! annotation pays one, plus a walk when the pair is not relevant.

use alrank::annotation::{annotate_pair, annotate_query, AnnotationConfig, AssessmentLedger};
use alrank::budget::{annotation_cost, compute_cost, total_cost, CostConfig, TimeLedger};
use alrank::datamodel::{DocumentId, QueryId, Qrels, RankedList};
use alrank::rng::rng_from_seed;

fn main() -> alrank::Result<()> {
    let q = QueryId::new("q1")?;
    let mut qrels = Qrels::new(1)?;
    qrels.insert(q.clone(), "d3".parse()?, 2)?;
    let ranking = RankedList::from_scored(
        q.clone(),
        (1..=8).map(|i| (DocumentId::new(format!("d{i}")).unwrap(), 10.0 - i as f64)),
    )?;
    let config = AnnotationConfig::default();
    let mut rng = rng_from_seed(0);

    let by_query = annotate_query(&q, &ranking, &ranking, &qrels, &config, &mut rng)?;
    println!("query-level: {} assessments, triplet {:?}", by_query.assessments, by_query.triplet);
    let hit = annotate_pair(&q, &"d3".parse()?, &ranking, &ranking, &qrels, &config, &mut rng)?;
    let miss = annotate_pair(&q, &"d7".parse()?, &ranking, &ranking, &qrels, &config, &mut rng)?;
    println!("pair on a relevant doc: {}, on an irrelevant one: {}", hit.assessments, miss.assessments);

    let mut ledger = AssessmentLedger::new();
    ledger.update(1, &[by_query])?;
    ledger.update(2, &[hit, miss])?;
    print!("\n{}", ledger.to_csv_string()?);

    let cost = CostConfig::default();
    println!("\n75 assessments cost {:.2}", annotation_cost(75, &cost));
    println!("2 GPU h + 1 CPU h/iter at i=3 cost {:.3}", compute_cost(2.0, 1.0, 3, &cost)?);

    let mut time = TimeLedger::new();
    time.push(0.5, 0.0)?;
    time.push(0.7, 1.0)?;
    let cumulative: Vec<u64> = (1..=2).map(|i| ledger.cumulative(i)).collect();
    print!("\n{}", total_cost(&cumulative, &time, &cost)?.to_csv_string()?);
    Ok(())
}
