//! nDCG@10 of two runs and a paired t-test over queries with a
//! Bonferroni-corrected threshold.

use alrank::datamodel::{DocumentId, QueryId, Qrels, RankedList, Run};
use alrank::evaluation::{ndcg_at_k, paired_ttest, Gain};
use rand::Rng;

fn main() -> alrank::Result<()> {
    let mut rng = alrank::rng::rng_from_seed(3);
    let mut qrels = Qrels::new(1)?;
    let (mut good, mut noisy) = (Run::new("good")?, Run::new("noisy")?);
    for qi in 0..30 {
        let q = QueryId::new(format!("q{qi}"))?;
        let docs: Vec<DocumentId> = (0..20).map(|d| DocumentId::new(format!("d{d}")).unwrap()).collect();
        qrels.insert(q.clone(), docs[0].clone(), 2)?;
        qrels.insert(q.clone(), docs[1].clone(), 1)?;
        // "good" puts relevant docs near the top, "noisy" scores at random
        let a: Vec<_> = docs.iter().enumerate().map(|(i, d)| (d.clone(), -(i as f64) + rng.gen_range(0.0..4.0))).collect();
        let b: Vec<_> = docs.iter().map(|d| (d.clone(), rng.gen::<f64>())).collect();
        good.insert(RankedList::from_scored(q.clone(), a)?);
        noisy.insert(RankedList::from_scored(q, b)?);
    }

    let a = ndcg_at_k(&good, &qrels, 10, Gain::Linear)?;
    let b = ndcg_at_k(&noisy, &qrels, 10, Gain::Linear)?;
    let e = ndcg_at_k(&good, &qrels, 10, Gain::Exponential)?;
    println!("nDCG@10 good {:.4} (exp gain {:.4}), noisy {:.4}", a.mean, e.mean, b.mean);

    let xs: Vec<f64> = a.per_query.values().copied().collect();
    let ys: Vec<f64> = b.per_query.values().copied().collect();
    let sig = paired_ttest(&xs, &ys, 0.05, 3)?;
    println!(
        "t = {:.3}, df = {}, p = {:.2e}, threshold {:.4}: {}",
        sig.t,
        sig.df,
        sig.p,
        sig.corrected_alpha,
        if sig.significant { "significant" } else { "not significant" }
    );
    Ok(())
}
