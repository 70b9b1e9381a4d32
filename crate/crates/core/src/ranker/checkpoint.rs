//! Checkpoint files.
//!
//! Layout: magic `ALRKCKP\0`, `u32` version, `u8` architecture code,
//! `u64` dim, rows, hash seed and step, then `rows·dim` little-endian `f64`.

use std::path::Path;

use super::model::RankerState;
use super::{Architecture, RankerConfig};
use crate::binio::{ByteReader, ByteWriter};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"ALRKCKP\0";
const VERSION: u32 = 1;

pub(crate) fn to_bytes(state: &RankerState) -> Vec<u8> {
    let mut w = ByteWriter::new();
    w.bytes(MAGIC);
    w.u32(VERSION);
    w.u8(state.architecture().code());
    w.u64(state.dim() as u64);
    w.u64(state.rows() as u64);
    w.u64(state.hash_seed());
    w.u64(state.step());
    for &x in state.weights() {
        w.f64(x);
    }
    w.into_inner()
}

pub(crate) fn from_bytes(data: &[u8]) -> Result<RankerState> {
    let bad = |m: String| Error::Checkpoint(m);
    let mut r = ByteReader::new(data);
    if r.take(8).map_err(bad)? != MAGIC {
        return Err(bad("not a checkpoint file (bad magic)".into()));
    }
    let version = r.u32().map_err(bad)?;
    if version != VERSION {
        return Err(bad(format!("unsupported checkpoint version {version}")));
    }
    let code = r.u8().map_err(bad)?;
    let architecture = Architecture::from_code(code).ok_or_else(|| bad(format!("unknown architecture code {code}")))?;
    let dim = r.u64().map_err(bad)? as usize;
    let rows = r.u64().map_err(bad)? as usize;
    let hash_seed = r.u64().map_err(bad)?;
    let step = r.u64().map_err(bad)?;
    let n = rows
        .checked_mul(dim)
        .filter(|&n| n.checked_mul(8).is_some_and(|b| b <= data.len()))
        .ok_or_else(|| bad(format!("implausible shape [{rows}, {dim}]")))?;
    let mut weights = Vec::with_capacity(n);
    for _ in 0..n {
        weights.push(r.f64().map_err(bad)?);
    }
    if !r.is_at_end() {
        return Err(bad("trailing bytes after weights".into()));
    }
    RankerState::from_parts(architecture, dim, rows, hash_seed, weights, step)
}

pub fn save_checkpoint(state: &RankerState, path: &Path) -> Result<()> {
    std::fs::write(path, to_bytes(state)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<RankerState> {
    let data = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&data).map_err(|e| match e {
        Error::Checkpoint(m) => Error::Checkpoint(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Loads a checkpoint and checks it matches what `config` would build.
pub fn load_checkpoint_for(path: &Path, config: &RankerConfig) -> Result<RankerState> {
    let state = load_checkpoint(path)?;
    state.check_compatible(config)?;
    Ok(state)
}
