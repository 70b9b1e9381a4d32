//! The three reference rankers on one query: cross features, bi-encoder
//! dot products and max-sim late interaction. The bi-encoder can also
//! score the whole collection, which gives the same order as reranking it.

use alrank::datamodel::{Corpus, QueryId, RankedList};
use alrank::ranker::{Architecture, PreparedCorpus, PreparedText, RankerConfig, RankerState, TrainableRanker};

fn main() -> alrank::Result<()> {
    let mut corpus = Corpus::new();
    for (id, text) in [
        ("d1", "solar panels convert sunlight"),
        ("d2", "wind turbines on the coast"),
        ("d3", "sunlight and solar energy storage"),
    ] {
        corpus.insert(id.parse()?, text)?;
    }
    let query = "solar sunlight";

    for arch in Architecture::ALL {
        let config = RankerConfig { dim: 16, buckets: 64, ..RankerConfig::desk(arch) };
        let ranker = RankerState::new(&config, 11);
        let scores: Vec<String> = corpus
            .iter()
            .map(|(d, text)| format!("{d}={:+.4}", ranker.score(query, text)))
            .collect();
        println!("{arch:<7} {} weights  {}", ranker.weights().len(), scores.join("  "));
    }

    let config = RankerConfig { dim: 16, buckets: 64, ..RankerConfig::desk(Architecture::Bi) };
    let bi = RankerState::new(&config, 11);
    let q = QueryId::new("q")?;
    let prepared = PreparedCorpus::new(&corpus);
    let full = bi.retrieve_full(&q, &PreparedText::new(query), &corpus, &prepared, 3)?;
    let everything = RankedList::from_scored(q, corpus.ids().cloned().map(|d| (d, 0.0)))?;
    let reranked = bi.rerank(query, &everything, &corpus)?;
    assert_eq!(full.docs().collect::<Vec<_>>(), reranked.docs().collect::<Vec<_>>());
    println!("\nfull retrieval: {:?}", full.docs().map(|d| d.as_str()).collect::<Vec<_>>());
    println!("query embedding has {} dims", bi.encode_query(query).len());
    Ok(())
}
