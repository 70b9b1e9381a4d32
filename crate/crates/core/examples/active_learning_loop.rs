//! The incremental loop on the synthetic bundle: random against
//! uncertainty, five iterations of 20 items, with an interrupted run
//! resumed to the same result.

use alrank::datamodel::SyntheticSpec;
use alrank::experiment::{resume, run_experiment, run_experiment_with, DataBundle, ExperimentConfig, RunOptions};
use alrank::selection::Strategy;

fn main() -> alrank::Result<()> {
    let config = ExperimentConfig::desk();
    let data = DataBundle::synthetic(&SyntheticSpec::default(), 42, config.bm25)?;
    let dir = tempfile::tempdir().expect("temp dir");

    for strategy in [Strategy::Random, Strategy::Uncertainty] {
        let states = run_experiment(&config.with_strategy(strategy), &data, 0, &dir.path().join(strategy.tag()))?;
        println!("{strategy}");
        for s in &states {
            println!(
                "  i={} |D|={:>3} pool={} A={:>4} C={:>7.2} nDCG@10={:.4}",
                s.iteration,
                s.annotated.len(),
                s.pool.len(),
                s.ledger.total(),
                s.summary.cost.total_cost,
                s.summary.ndcg10
            );
        }
    }

    let qbc = config.with_strategy(Strategy::Qbc);
    let straight = run_experiment(&qbc, &data, 0, &dir.path().join("qbc"))?;
    let cut = dir.path().join("qbc-cut");
    let partial = run_experiment_with(&qbc, &data, 0, &cut, RunOptions { stop_after: Some(2) })?;
    let resumed = resume(&qbc, &data, &cut)?;
    println!("\nqbc interrupted after {} iterations, resumed to {}", partial.len(), resumed.len());
    assert_eq!(
        straight.iter().map(|s| &s.summary).collect::<Vec<_>>(),
        resumed.iter().map(|s| &s.summary).collect::<Vec<_>>()
    );
    println!("resumed run matches the uninterrupted one");
    Ok(())
}
