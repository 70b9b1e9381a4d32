//! Re-Train: every iteration starts from a checkpoint trained on a source
//! collection instead of from random weights.

use alrank::datamodel::SyntheticSpec;
use alrank::experiment::{run_experiment, DataBundle, ExperimentConfig, Scenario};
use alrank::ranker::save_checkpoint;
use alrank::selection::Strategy;

fn main() -> alrank::Result<()> {
    let dir = tempfile::tempdir().expect("temp dir");
    let base = ExperimentConfig::desk();

    // source task: a different synthetic collection
    let source = DataBundle::synthetic(&SyntheticSpec::default(), 7, base.bm25)?;
    let source_run = run_experiment(&base, &source, 0, &dir.path().join("source"))?;
    let source_ckpt = dir.path().join("source").join(&source_run.last().expect("ran").evaluation_checkpoint);
    let checkpoint = dir.path().join("source.ckpt");
    save_checkpoint(&alrank::ranker::load_checkpoint(&source_ckpt)?, &checkpoint)?;

    let target = DataBundle::synthetic(&SyntheticSpec::default(), 42, base.bm25)?;
    for scenario in [Scenario::Scratch, Scenario::Retrain] {
        let config = ExperimentConfig {
            scenario,
            checkpoint: Some(checkpoint.clone()),
            ..base.with_strategy(Strategy::Random)
        };
        let states = run_experiment(&config, &target, 0, &dir.path().join(scenario.to_string()))?;
        let curve: Vec<String> = states.iter().map(|s| format!("{:.4}", s.summary.ndcg10)).collect();
        println!("{scenario:<8} {}", curve.join(" "));
    }
    Ok(())
}
