//! Labelled seed derivation.
//!
//! Every random stream in an experiment is keyed by the master seed, a
//! component label and a path of integers or strings (iteration, member,
//! query id). Two streams with different keys are independent, so changing
//! how many numbers one component draws never shifts another component.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// The generator used throughout the crate.
pub type HarnessRng = ChaCha8Rng;

/// One element of a seed derivation path.
#[derive(Debug, Clone, Copy)]
pub enum SeedPart<'a> {
    Int(u64),
    Str(&'a str),
}

impl From<u64> for SeedPart<'_> {
    fn from(v: u64) -> Self {
        SeedPart::Int(v)
    }
}

impl From<usize> for SeedPart<'_> {
    fn from(v: usize) -> Self {
        SeedPart::Int(v as u64)
    }
}

impl<'a> From<&'a str> for SeedPart<'a> {
    fn from(v: &'a str) -> Self {
        SeedPart::Str(v)
    }
}

/// Derives a 64-bit sub-seed from `(master, label, parts...)`.
pub fn derive_seed(master: u64, label: &str, parts: &[SeedPart<'_>]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(b"alrank-seed-v1");
    hasher.update(master.to_le_bytes());
    hasher.update((label.len() as u64).to_le_bytes());
    hasher.update(label.as_bytes());
    for part in parts {
        match part {
            SeedPart::Int(v) => {
                hasher.update([0u8]);
                hasher.update(v.to_le_bytes());
            }
            SeedPart::Str(s) => {
                hasher.update([1u8]);
                hasher.update((s.len() as u64).to_le_bytes());
                hasher.update(s.as_bytes());
            }
        }
    }
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn rng_from_seed(seed: u64) -> HarnessRng {
    HarnessRng::seed_from_u64(seed)
}

/// Shorthand for `rng_from_seed(derive_seed(..))`.
pub fn derived_rng(master: u64, label: &str, parts: &[SeedPart<'_>]) -> HarnessRng {
    rng_from_seed(derive_seed(master, label, parts))
}
