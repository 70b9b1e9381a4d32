use std::fmt::Display;
use std::hash::Hash;
use std::path::Path;
use std::str::FromStr;

use indexmap::IndexMap;

use super::{numbered_lines, read_text, write_text, DocumentId, QueryId};
use crate::error::{Error, Result};

/// An ordered id → text map loaded from `<id>\t<text>` lines.
///
/// Insertion order is preserved; for a corpus the position of a document
/// is its ordinal in the inverted index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Collection<K: Hash + Eq> {
    entries: IndexMap<K, String>,
}

pub type Corpus = Collection<DocumentId>;
pub type QuerySet = Collection<QueryId>;

impl<K: Hash + Eq> Default for Collection<K> {
    fn default() -> Self {
        Self {
            entries: IndexMap::new(),
        }
    }
}

impl<K> Collection<K>
where
    K: Hash + Eq + Clone + Display + FromStr<Err = Error>,
{
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends an entry. Duplicate ids and texts containing a newline are
    /// rejected.
    pub fn insert(&mut self, id: K, text: impl Into<String>) -> Result<()> {
        let text = text.into();
        if text.contains('\n') {
            return Err(Error::invalid(format!("text of {id} contains a newline")));
        }
        if self.entries.contains_key(&id) {
            return Err(Error::invalid(format!("duplicate id {id}")));
        }
        self.entries.insert(id, text);
        Ok(())
    }

    pub fn from_pairs<I, S>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (K, S)>,
        S: Into<String>,
    {
        let mut out = Self::new();
        for (id, text) in pairs {
            out.insert(id, text)?;
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &K) -> Option<&str> {
        self.entries.get(id).map(String::as_str)
    }

    pub fn contains(&self, id: &K) -> bool {
        self.entries.contains_key(id)
    }

    pub fn ordinal(&self, id: &K) -> Option<usize> {
        self.entries.get_index_of(id)
    }

    pub fn id_at(&self, ordinal: usize) -> Option<&K> {
        self.entries.get_index(ordinal).map(|(k, _)| k)
    }

    pub fn text_at(&self, ordinal: usize) -> Option<&str> {
        self.entries.get_index(ordinal).map(|(_, v)| v.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, &str)> {
        self.entries.iter().map(|(k, v)| (k, v.as_str()))
    }

    pub fn ids(&self) -> impl Iterator<Item = &K> {
        self.entries.keys()
    }

    /// Rejects empty texts unless `allow_empty` is set.
    pub fn validate(&self, allow_empty: bool) -> Result<()> {
        if allow_empty {
            return Ok(());
        }
        match self.entries.iter().find(|(_, t)| t.is_empty()) {
            Some((id, _)) => Err(Error::invalid(format!("empty text for {id}"))),
            None => Ok(()),
        }
    }

    pub fn parse_str(text: &str, path: &Path) -> Result<Self> {
        let mut out = Self::new();
        for (line_no, line) in numbered_lines(text) {
            let (id, body) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(path, line_no, "missing tab between id and text"))?;
            let id: K = id
                .parse()
                .map_err(|e: Error| Error::parse(path, line_no, e.to_string()))?;
            if out.entries.contains_key(&id) {
                return Err(Error::parse(path, line_no, format!("duplicate id {id}")));
            }
            out.entries.insert(id, body.to_string());
        }
        Ok(out)
    }

    pub fn read_tsv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse_str(&read_text(path)?, path)
    }

    pub fn to_tsv_string(&self) -> String {
        let mut out = String::new();
        for (id, text) in &self.entries {
            out.push_str(&format!("{id}\t{text}\n"));
        }
        out
    }

    pub fn write_tsv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_text(path.as_ref(), &self.to_tsv_string())
    }
}
