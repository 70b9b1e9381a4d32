use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{numbered_lines, read_text, write_text, DocumentId, QueryId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredDoc {
    pub doc: DocumentId,
    pub score: f64,
}

/// Canonical ranking order: score descending, then document id ascending.
pub(crate) fn canonical_order(a: &ScoredDoc, b: &ScoredDoc) -> Ordering {
    b.score.total_cmp(&a.score).then_with(|| a.doc.cmp(&b.doc))
}

/// A per-query ranking. Ranks are implicit and 1-based.
///
/// Construction sorts by score descending with ties broken by ascending
/// document id, so two lists holding the same scores are always equal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    query: QueryId,
    entries: Vec<ScoredDoc>,
}

impl RankedList {
    pub fn from_scored<I>(query: QueryId, scored: I) -> Result<Self>
    where
        I: IntoIterator<Item = (DocumentId, f64)>,
    {
        let mut seen = HashSet::new();
        let mut entries = Vec::new();
        for (doc, score) in scored {
            if score.is_nan() {
                return Err(Error::invalid(format!("NaN score for {doc} in query {query}")));
            }
            if !seen.insert(doc.clone()) {
                return Err(Error::invalid(format!("duplicate document {doc} in query {query}")));
            }
            // fold -0.0 into 0.0 so it ties with +0.0
            entries.push(ScoredDoc { doc, score: score + 0.0 });
        }
        entries.sort_by(canonical_order);
        Ok(Self { query, entries })
    }

    pub fn empty(query: QueryId) -> Self {
        Self {
            query,
            entries: Vec::new(),
        }
    }

    pub fn query(&self) -> &QueryId {
        &self.query
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[ScoredDoc] {
        &self.entries
    }

    pub fn docs(&self) -> impl Iterator<Item = &DocumentId> {
        self.entries.iter().map(|e| &e.doc)
    }

    /// 1-based rank of `doc`, if present.
    pub fn rank_of(&self, doc: &DocumentId) -> Option<usize> {
        self.entries.iter().position(|e| &e.doc == doc).map(|p| p + 1)
    }

    /// The first `k` entries.
    pub fn top(&self, k: usize) -> RankedList {
        RankedList {
            query: self.query.clone(),
            entries: self.entries.iter().take(k).cloned().collect(),
        }
    }
}

/// A set of rankings sharing one run tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Run {
    tag: String,
    lists: BTreeMap<QueryId, RankedList>,
}

impl Run {
    pub fn new(tag: impl Into<String>) -> Result<Self> {
        let tag = tag.into();
        if tag.is_empty() || tag.chars().any(char::is_whitespace) {
            return Err(Error::invalid(format!("run tag {tag:?} must be a non-empty token")));
        }
        Ok(Self {
            tag,
            lists: BTreeMap::new(),
        })
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    /// Adds or replaces the ranking for the list's query.
    pub fn insert(&mut self, list: RankedList) {
        self.lists.insert(list.query.clone(), list);
    }

    pub fn get(&self, query: &QueryId) -> Option<&RankedList> {
        self.lists.get(query)
    }

    pub fn len(&self) -> usize {
        self.lists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lists.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&QueryId, &RankedList)> {
        self.lists.iter()
    }

    pub fn to_trec_string(&self) -> String {
        let mut out = String::new();
        for (q, list) in &self.lists {
            for (i, e) in list.entries.iter().enumerate() {
                out.push_str(&format!("{q} Q0 {} {} {} {}\n", e.doc, i + 1, e.score, self.tag));
            }
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        write_text(path.as_ref(), &self.to_trec_string())
    }

    /// Parses a six-column TREC run. Ranks must form `1..=n` per query;
    /// the stored order is re-derived from scores with the canonical
    /// tie-break.
    pub fn parse_str(text: &str, path: &Path) -> Result<Self> {
        let mut tag: Option<String> = None;
        let mut rows: BTreeMap<QueryId, Vec<(usize, usize, DocumentId, f64)>> = BTreeMap::new();
        for (line_no, line) in numbered_lines(text) {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 6 {
                return Err(Error::parse(path, line_no, format!("expected 6 fields, found {}", f.len())));
            }
            let err = |e: Error| Error::parse(path, line_no, e.to_string());
            let query: QueryId = f[0].parse().map_err(err)?;
            let doc: DocumentId = f[2].parse().map_err(err)?;
            let rank: usize = f[3]
                .parse()
                .map_err(|_| Error::parse(path, line_no, format!("bad rank {:?}", f[3])))?;
            let score: f64 = f[4]
                .parse()
                .map_err(|_| Error::parse(path, line_no, format!("bad score {:?}", f[4])))?;
            match &tag {
                None => tag = Some(f[5].to_string()),
                Some(t) if t != f[5] => {
                    return Err(Error::parse(path, line_no, format!("run tag {:?} differs from {t:?}", f[5])))
                }
                Some(_) => {}
            }
            rows.entry(query).or_default().push((rank, line_no, doc, score));
        }
        let mut run = Run::new(tag.unwrap_or_else(|| "run".to_string()))?;
        for (query, mut entries) in rows {
            entries.sort_by_key(|(rank, line, _, _)| (*rank, *line));
            for (expected, (rank, line_no, _, _)) in (1..).zip(entries.iter()) {
                if *rank != expected {
                    return Err(Error::parse(
                        path,
                        *line_no,
                        format!("query {query}: expected rank {expected}, found {rank}"),
                    ));
                }
            }
            let last_line = entries.last().map(|e| e.1).unwrap_or(0);
            let list = RankedList::from_scored(query, entries.into_iter().map(|(_, _, d, s)| (d, s)))
                .map_err(|e| Error::parse(path, last_line, e.to_string()))?;
            run.insert(list);
        }
        Ok(run)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse_str(&read_text(path)?, path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(s: &str) -> DocumentId {
        s.parse().unwrap()
    }

    fn q(s: &str) -> QueryId {
        s.parse().unwrap()
    }

    #[test]
    fn ties_break_by_ascending_doc_id() {
        let l = RankedList::from_scored(q("q"), vec![(d("b"), 1.0), (d("a"), 1.0), (d("c"), 2.0)]).unwrap();
        let order: Vec<_> = l.docs().map(|x| x.as_str()).collect();
        assert_eq!(order, vec!["c", "a", "b"]);
        assert_eq!(l.rank_of(&d("b")), Some(3));
    }

    #[test]
    fn negative_zero_ties_with_zero() {
        let l = RankedList::from_scored(q("q"), vec![(d("b"), 0.0), (d("a"), -0.0)]).unwrap();
        let order: Vec<_> = l.docs().map(|x| x.as_str()).collect();
        assert_eq!(order, vec!["a", "b"]);
    }

    #[test]
    fn duplicates_and_nan_rejected() {
        assert!(RankedList::from_scored(q("q"), vec![(d("a"), 1.0), (d("a"), 0.5)]).is_err());
        assert!(RankedList::from_scored(q("q"), vec![(d("a"), f64::NAN)]).is_err());
    }

    #[test]
    fn serializes_two_lines_with_ranks() {
        let mut run = Run::new("bm25").unwrap();
        run.insert(RankedList::from_scored(q("q1"), vec![(d("d2"), 1.5), (d("d1"), 0.5)]).unwrap());
        assert_eq!(run.to_trec_string(), "q1 Q0 d2 1 1.5 bm25\nq1 Q0 d1 2 0.5 bm25\n");
    }

    #[test]
    fn rank_gap_is_an_error() {
        let text = "q1 Q0 a 1 2.0 t\nq1 Q0 b 3 1.0 t\n";
        assert!(Run::parse_str(text, Path::new("run")).is_err());
        let dup = "q1 Q0 a 1 2.0 t\nq1 Q0 b 1 1.0 t\n";
        assert!(Run::parse_str(dup, Path::new("run")).is_err());
    }

    fn arb_run() -> impl Strategy<Value = Run> {
        let list = prop::collection::btree_map("[a-z]{1,4}", -1e6f64..1e6, 0..8);
        prop::collection::btree_map("q[0-9]{1,3}", list, 0..5).prop_map(|m| {
            let mut run = Run::new("tag").unwrap();
            for (qid, docs) in m {
                let list = RankedList::from_scored(q(&qid), docs.into_iter().map(|(k, s)| (d(&k), s))).unwrap();
                run.insert(list);
            }
            run
        })
    }

    proptest! {
        #[test]
        fn parse_inverts_serialize(run in arb_run()) {
            let text = run.to_trec_string();
            let back = Run::parse_str(&text, Path::new("run")).unwrap();
            // empty rankings have no lines to round-trip
            let mut expected = Run::new("tag").unwrap();
            for (_, l) in run.iter().filter(|(_, l)| !l.is_empty()) {
                expected.insert(l.clone());
            }
            if expected.is_empty() {
                // no lines, so no tag to recover
                prop_assert!(back.is_empty());
            } else {
                prop_assert_eq!(back, expected);
            }
        }
    }
}
