use std::collections::{BTreeSet, HashMap};

use crate::datamodel::{DocumentId, RankedList};
use crate::error::{Error, Result};

/// Vote entropy of a committee's rankings of one query.
///
/// Pairs are the ordered pairs `(p_i, p_j)`, `i ≠ j`, from the first
/// member's top `k_pairs`. `N(p_i ≺ p_j)` counts members ranking `p_i`
/// above `p_j`, and
///
/// ```text
/// VE = −(1/|M|) Σ N · ln(N / |M|)      (0 · ln 0 = 0)
/// ```
pub fn vote_entropy(members: &[RankedList], k_pairs: usize) -> Result<f64> {
    if members.len() < 2 {
        return Err(Error::invalid("vote entropy needs at least 2 committee members"));
    }
    if k_pairs < 2 {
        return Err(Error::invalid("vote entropy needs a pair depth of at least 2"));
    }
    let reference: BTreeSet<&DocumentId> = members[0].docs().collect();
    for m in &members[1..] {
        if m.len() != reference.len() || m.docs().any(|d| !reference.contains(d)) {
            return Err(Error::invalid(format!(
                "committee rankings for {} cover different candidates",
                members[0].query()
            )));
        }
    }
    let ranks: Vec<HashMap<&DocumentId, usize>> = members
        .iter()
        .map(|m| m.docs().enumerate().map(|(i, d)| (d, i)).collect())
        .collect();
    let prefix: Vec<&DocumentId> = members[0].docs().take(k_pairs).collect();
    let m = members.len() as f64;
    let mut sum = 0.0;
    for (i, a) in prefix.iter().enumerate() {
        for (j, b) in prefix.iter().enumerate() {
            if i == j {
                continue;
            }
            let n = ranks.iter().filter(|r| r[a] < r[b]).count();
            if n > 0 {
                let n = n as f64;
                sum += n * (n / m).ln();
            }
        }
    }
    // −0.0 when every term vanishes
    Ok(-sum / m + 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::QueryId;
    use crate::rng::rng_from_seed;
    use rand::seq::SliceRandom;

    fn list(order: &[&str]) -> RankedList {
        let n = order.len();
        RankedList::from_scored(
            QueryId::new("q").unwrap(),
            order.iter().enumerate().map(|(i, d)| (DocumentId::new(*d).unwrap(), (n - i) as f64)),
        )
        .unwrap()
    }

    #[test]
    fn agreement_is_zero() {
        let a = list(&["a", "b"]);
        assert_eq!(vote_entropy(&[a.clone(), a], 2).unwrap(), 0.0);
    }

    #[test]
    fn single_disagreement_is_ln_two() {
        let ve = vote_entropy(&[list(&["a", "b"]), list(&["b", "a"])], 2).unwrap();
        assert!((ve - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn mismatched_candidates_rejected() {
        assert!(vote_entropy(&[list(&["a", "b"]), list(&["a", "c"])], 2).is_err());
        assert!(vote_entropy(&[list(&["a", "b"])], 2).is_err());
    }

    /// Enumerates unordered pairs and adds both orientations explicitly.
    fn oracle(orders: &[Vec<&str>], k: usize) -> f64 {
        let m = orders.len() as f64;
        let first: Vec<&str> = orders[0].iter().take(k).copied().collect();
        let pos = |o: &Vec<&str>, d: &str| o.iter().position(|x| *x == d).unwrap();
        let mut total = 0.0;
        for x in 0..first.len() {
            for y in x + 1..first.len() {
                let above = orders.iter().filter(|o| pos(o, first[x]) < pos(o, first[y])).count() as f64;
                let below = m - above;
                for n in [above, below] {
                    if n > 0.0 {
                        total -= n / m * (n / m).ln();
                    }
                }
            }
        }
        total
    }

    #[test]
    fn matches_pair_counting_oracle() {
        let mut rng = rng_from_seed(21);
        let docs = ["a", "b", "c", "d"];
        for _ in 0..200 {
            let orders: Vec<Vec<&str>> = (0..3)
                .map(|_| {
                    let mut o = docs.to_vec();
                    o.shuffle(&mut rng);
                    o
                })
                .collect();
            let lists: Vec<RankedList> = orders.iter().map(|o| list(o)).collect();
            for k in 2..=4 {
                let ve = vote_entropy(&lists, k).unwrap();
                assert!((ve - oracle(&orders, k)).abs() < 1e-12);
                assert!(ve >= 0.0);
            }
        }
    }

    #[test]
    fn complement_pairs_sum_to_committee_size() {
        let lists = [list(&["a", "b", "c"]), list(&["c", "a", "b"]), list(&["b", "c", "a"])];
        let ranks: Vec<HashMap<&DocumentId, usize>> =
            lists.iter().map(|m| m.docs().enumerate().map(|(i, d)| (d, i)).collect()).collect();
        for a in lists[0].docs() {
            for b in lists[0].docs().filter(|b| *b != a) {
                let ab = ranks.iter().filter(|r| r[a] < r[b]).count();
                let ba = ranks.iter().filter(|r| r[b] < r[a]).count();
                assert_eq!(ab + ba, 3);
            }
        }
    }
}
