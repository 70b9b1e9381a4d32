//! Build a BM25 index, save it, load it back and write a TREC run.

use alrank::datamodel::{Corpus, QueryId, QuerySet, Run};
use alrank::lexical::{build_index, Bm25Params, InvertedIndex};

fn main() -> alrank::Result<()> {
    let mut corpus = Corpus::new();
    for (id, text) in [
        ("d1", "the cat sat on the mat"),
        ("d2", "dogs chase cats around the yard"),
        ("d3", "a quiet mat for yoga"),
        ("d4", "stock markets fell sharply"),
    ] {
        corpus.insert(id.parse()?, text)?;
    }
    let mut queries = QuerySet::new();
    queries.insert("q1".parse()?, "cat mat")?;
    queries.insert("q2".parse()?, "stock crash")?;

    let index = build_index(&corpus, Bm25Params { k1: 0.9, b: 0.4 })?;
    println!("{} docs, {} terms, avgdl {:.2}", index.num_docs(), index.num_terms(), index.avgdl());
    println!("idf(mat) = {:.4}", index.idf("mat"));

    let dir = tempfile::tempdir().expect("temp dir");
    let path = dir.path().join("index.bin");
    index.save(&path)?;
    let loaded = InvertedIndex::load(&path)?;
    assert_eq!(loaded, index);

    let mut run = Run::new("bm25")?;
    for (q, text) in queries.iter() {
        run.insert(loaded.retrieve_topk(q, text, 3));
    }
    print!("\n{}", run.to_trec_string());

    // documents sharing no term with the query are never returned
    let q2 = run.get(&QueryId::new("q2")?).expect("q2 retrieved");
    assert_eq!(q2.len(), 1);
    Ok(())
}
