//! Generate the desk-scale planted-topic corpus and check how much of the
//! relevance signal plain BM25 already recovers.

use alrank::datamodel::{generate_synthetic, SyntheticSpec};
use alrank::lexical::{build_index, Bm25Params};

fn main() -> alrank::Result<()> {
    let spec = SyntheticSpec::default();
    let data = generate_synthetic(&spec, 42)?;
    println!(
        "{} docs, {} train queries, {} test queries, {} judgments",
        data.corpus.len(),
        data.train.len(),
        data.test.len(),
        data.qrels.len()
    );

    let (q, text) = data.test.iter().next().expect("test queries");
    println!("\nquery {q}: {text:?}");
    for d in data.qrels.relevant_docs(q) {
        let body = data.corpus.get(d).unwrap_or_default();
        println!("  relevant {d}: {}...", &body[..body.len().min(70)]);
    }

    let index = build_index(&data.corpus, Bm25Params::default())?;
    let hits = data
        .test
        .iter()
        .filter(|(q, t)| index.retrieve_topk(q, t, 10).docs().any(|d| data.qrels.is_relevant(q, d)))
        .count();
    println!("\nBM25 finds a relevant doc in the top 10 for {hits}/{} test queries", data.test.len());
    Ok(())
}
