//! On-disk index layout (version 1, all integers little-endian):
//!
//! ```text
//! magic      8 bytes  "ALRKIDX\0"
//! version    u32
//! k1, b      f64, f64
//! N          u64
//! avgdl      f64
//! stopwords  u32 count, then strings
//! documents  N × (string id, u32 length)
//! terms      u64 count, then per term: string, u32 df, df × (u32 ordinal, u32 tf)
//! ```
//!
//! Strings are a u32 byte length followed by UTF-8 bytes.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use super::{Bm25Params, InvertedIndex, Posting};
use crate::binio::{ByteReader, ByteWriter};
use crate::datamodel::DocumentId;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"ALRKIDX\0";
const VERSION: u32 = 1;

impl InvertedIndex {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        w.bytes(MAGIC);
        w.u32(VERSION);
        w.f64(self.params.k1);
        w.f64(self.params.b);
        w.u64(self.doc_ids.len() as u64);
        w.f64(self.avgdl);
        w.u32(self.stopwords.len() as u32);
        for s in &self.stopwords {
            w.str(s);
        }
        for (id, len) in self.doc_ids.iter().zip(&self.doc_lengths) {
            w.str(id.as_str());
            w.u32(*len);
        }
        w.u64(self.postings.len() as u64);
        for (term, list) in &self.postings {
            w.str(term);
            w.u32(list.len() as u32);
            for p in list {
                w.u32(p.doc);
                w.u32(p.tf);
            }
        }
        w.into_inner()
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self> {
        decode(data).map_err(Error::IndexFormat)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let data = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&data)
    }
}

fn decode(data: &[u8]) -> std::result::Result<InvertedIndex, String> {
    let mut r = ByteReader::new(data);
    if r.take(8)? != MAGIC {
        return Err("bad magic".into());
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(format!("unsupported version {version}"));
    }
    let params = Bm25Params {
        k1: r.f64()?,
        b: r.f64()?,
    };
    let n = r.u64()? as usize;
    let avgdl = r.f64()?;
    let mut stopwords = BTreeSet::new();
    for _ in 0..r.u32()? {
        stopwords.insert(r.str()?);
    }
    let mut doc_ids = Vec::with_capacity(n.min(1 << 20));
    let mut doc_lengths = Vec::with_capacity(n.min(1 << 20));
    for _ in 0..n {
        doc_ids.push(DocumentId::new(r.str()?).map_err(|e| e.to_string())?);
        doc_lengths.push(r.u32()?);
    }
    let mut postings = BTreeMap::new();
    let terms = r.u64()?;
    for _ in 0..terms {
        let term = r.str()?;
        let df = r.u32()? as usize;
        let mut list = Vec::with_capacity(df.min(n));
        for _ in 0..df {
            let doc = r.u32()?;
            if doc as usize >= n {
                return Err(format!("posting for {term:?} points past the last document"));
            }
            list.push(Posting { doc, tf: r.u32()? });
        }
        postings.insert(term, list);
    }
    if !r.is_at_end() {
        return Err("trailing bytes".into());
    }
    Ok(InvertedIndex {
        params,
        doc_ids,
        doc_lengths,
        avgdl,
        postings,
        stopwords,
    })
}
