//! How much test effectiveness depends on which random queries were
//! annotated: four training sizes, four seeds each.

use alrank::datamodel::SyntheticSpec;
use alrank::experiment::{run_variability, untrained_baseline, DataBundle, ExperimentConfig};

fn main() -> alrank::Result<()> {
    let config = ExperimentConfig::desk();
    let data = DataBundle::synthetic(&SyntheticSpec::default(), 42, config.bm25)?;
    println!("untrained: {:.4}", untrained_baseline(&config, &data, 4)?);
    let records = run_variability(&config, &data, &config.variability_sizes, 4)?;
    for size in &config.variability_sizes {
        let v: Vec<String> = records
            .iter()
            .filter(|r| r.size == *size)
            .map(|r| format!("{:.4}", r.ndcg10))
            .collect();
        println!("size {size:>3}: {}", v.join(" "));
    }
    Ok(())
}
