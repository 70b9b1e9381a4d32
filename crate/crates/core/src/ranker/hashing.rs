//! Stable token hashing. Values never depend on the platform or on the
//! process, so checkpoints stay portable.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-1a over the UTF-8 bytes of a token.
pub fn token_hash(token: &str) -> u64 {
    token
        .as_bytes()
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// splitmix64 finalizer.
pub fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn combine(a: u64, b: u64) -> u64 {
    mix(a ^ mix(b).rotate_left(23))
}

/// Bucket in `0..n` for a key under a hash seed.
pub fn bucket(key: u64, seed: u64, n: usize) -> usize {
    (combine(key, seed) % n as u64) as usize
}

/// ±1 sign for signed feature hashing, independent of the bucket bits.
pub fn sign(key: u64, seed: u64) -> f64 {
    if combine(key, seed ^ 0x5bd1_e995) >> 63 == 0 {
        1.0
    } else {
        -1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_reference_values() {
        assert_eq!(token_hash(""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(token_hash("a"), 0xaf63_dc4c_8601_ec8c);
    }

    #[test]
    fn buckets_stay_in_range() {
        for t in ["a", "b", "hello", "t1x3"] {
            let h = token_hash(t);
            assert!(bucket(h, 9, 7) < 7);
            assert!(sign(h, 9).abs() == 1.0);
        }
    }
}
