//! Annotate 100 training queries against BM25, train the cross ranker on
//! the triplets and compare test nDCG@10 before and after.

use alrank::annotation::{annotate_query, AnnotationConfig};
use alrank::datamodel::{generate_synthetic, Run, SyntheticSpec};
use alrank::evaluation::{ndcg_at_k, Gain};
use alrank::lexical::{build_index, Bm25Params};
use alrank::ranker::{
    load_checkpoint, save_checkpoint, train, Architecture, PreparedCorpus, PreparedText, RankerConfig, RankerState,
};
use alrank::rng::rng_from_seed;

fn main() -> alrank::Result<()> {
    let data = generate_synthetic(&SyntheticSpec::default(), 42)?;
    let index = build_index(&data.corpus, Bm25Params::default())?;
    let annotation = AnnotationConfig::default();
    let mut rng = rng_from_seed(1);

    let mut triplets = Vec::new();
    let mut assessments = 0;
    for (q, text) in data.train.iter().take(100) {
        let bm25 = index.retrieve_topk(q, text, 1000);
        let a = annotate_query(q, &bm25.top(100), &bm25, &data.qrels, &annotation, &mut rng)?;
        assessments += a.assessments;
        triplets.extend(a.triplet);
    }
    println!("{} triplets for {assessments} assessments", triplets.len());

    let config = RankerConfig::desk(Architecture::Cross);
    let prepared = PreparedCorpus::new(&data.corpus);
    let test_qrels = data.qrels.restrict(data.test.ids());
    let evaluate = |state: &RankerState| -> alrank::Result<f64> {
        let mut run = Run::new("cross")?;
        for (q, text) in data.test.iter() {
            let candidates = index.retrieve_topk(q, text, 100);
            run.insert(state.rerank_prepared(&PreparedText::new(text), &candidates, &data.corpus, &prepared)?);
        }
        Ok(ndcg_at_k(&run, &test_qrels, 10, Gain::Linear)?.mean)
    };

    let start = RankerState::new(&config, 7);
    let out = train(&start, &config.train_params(), &triplets, &data.train, &data.corpus, config.epochs_evaluation, 3)?;
    println!(
        "loss {:.4} -> {:.4} over {} epochs",
        out.epoch_losses[0],
        out.epoch_losses[out.epochs_run - 1],
        out.epochs_run
    );
    println!("nDCG@10 untrained {:.4}, trained {:.4}", evaluate(&start)?, evaluate(&out.state)?);

    let dir = tempfile::tempdir().expect("temp dir");
    let path = dir.path().join("cross.ckpt");
    save_checkpoint(&out.state, &path)?;
    assert_eq!(load_checkpoint(&path)?, out.state);
    Ok(())
}
