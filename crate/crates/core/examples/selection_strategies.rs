//! What each strategy picks from the same pool, given a ranker trained on
//! a handful of annotated queries.

use alrank::annotation::{annotate_query, AnnotationConfig};
use alrank::datamodel::{generate_synthetic, QueryId, Run, SyntheticSpec};
use alrank::lexical::{build_index, Bm25Params};
use alrank::ranker::{train, Architecture, PreparedCorpus, RankerConfig, RankerState};
use alrank::rng::rng_from_seed;
use alrank::selection::{select_diversity, select_qbc, select_random, select_uncertainty, PoolContext};

fn main() -> alrank::Result<()> {
    let data = generate_synthetic(&SyntheticSpec::default(), 42)?;
    let index = build_index(&data.corpus, Bm25Params::default())?;
    let mut bm25 = Run::new("bm25")?;
    for (q, text) in data.train.iter() {
        bm25.insert(index.retrieve_topk(q, text, 1000));
    }
    let ids: Vec<QueryId> = data.train.ids().cloned().collect();
    let (seen, pool) = ids.split_at(40);

    let mut rng = rng_from_seed(5);
    let mut triplets = Vec::new();
    for q in seen {
        let list = bm25.get(q).expect("retrieved");
        let a = annotate_query(q, &list.top(100), list, &data.qrels, &AnnotationConfig::default(), &mut rng)?;
        triplets.extend(a.triplet);
    }

    let config = RankerConfig::desk(Architecture::Cross);
    let fit = |subset: &[_], seed| {
        train(&RankerState::new(&config, 7), &config.train_params(), subset, &data.train, &data.corpus, 5, seed)
            .map(|o| o.state)
    };
    let ranker = fit(&triplets, 1)?;

    let prepared = PreparedCorpus::new(&data.corpus);
    let ctx = PoolContext {
        queries: &data.train,
        corpus: &data.corpus,
        prepared: &prepared,
        bm25: &bm25,
        depth: 100,
    };
    let s = 5;

    println!("random:      {:?}", select_random(pool, s, &mut rng)?);

    let reranked = ctx.rerank_pool(&ranker, pool)?;
    println!("uncertainty (query, doc, |s - mean|):");
    for (q, d, u) in select_uncertainty(&reranked, pool, s, false)? {
        println!("  {q} {d} {u:.5}");
    }

    let cut = triplets.len() * 4 / 5;
    let committee = vec![fit(&triplets[..cut], 2)?, fit(&triplets[triplets.len() - cut..], 3)?];
    println!("qbc (query, vote entropy):");
    for (q, h) in select_qbc(&committee, pool, &ctx, 100, s)? {
        println!("  {q} {h:.4}");
    }

    println!("diversity (query, cluster):");
    for (q, c) in select_diversity(&ranker, pool, &data.train, s, 100, &mut rng)? {
        println!("  {q} {c} topic {}", data.query_topics[&q]);
    }
    Ok(())
}
