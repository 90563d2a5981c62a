//! Commutative 64-bit hashing of values.
//!
//! Atoms hash to themselves, collections add up the mixed hashes of their
//! members with wrapping arithmetic, so an element can be added or removed in
//! O(1) by adding the mixed hash or its additive inverse.

use std::io::Cursor;

/// MurmurHash3 x64/128 of the eight little-endian bytes of `x`, folded to 64
/// bits by XOR of the two halves.
pub fn mix(x: u64) -> u64 {
    fold(&x.to_le_bytes())
}

/// Hash of a tuple given the hashes of its members, in order.
pub fn tuple_hash(members: &[u64]) -> u64 {
    let mut bytes = Vec::with_capacity(members.len() * 8);
    for m in members {
        bytes.extend_from_slice(&m.to_le_bytes());
    }
    fold(&bytes)
}

/// Hash of the pair `(a, b)` viewed as a two-member tuple.
pub fn pair_hash(a: u64, b: u64) -> u64 {
    let mut bytes = [0u8; 16];
    bytes[..8].copy_from_slice(&a.to_le_bytes());
    bytes[8..].copy_from_slice(&b.to_le_bytes());
    fold(&bytes)
}

/// Contribution of sequence member `elem` at 1-based position `pos`.
pub fn seq_term(pos: usize, elem: u64) -> u64 {
    mix(pair_hash(pos as u64, elem))
}

pub fn int_hash(i: i64) -> u64 {
    i as u64
}

pub fn bool_hash(b: bool) -> u64 {
    b as u64
}

fn fold(bytes: &[u8]) -> u64 {
    let h = murmur3::murmur3_x64_128(&mut Cursor::new(bytes), 0).expect("in-memory read");
    (h as u64) ^ ((h >> 64) as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atoms_hash_to_themselves() {
        assert_eq!(int_hash(5), 5);
        assert_eq!(int_hash(-1), u64::MAX);
        assert_eq!(bool_hash(false), 0);
        assert_eq!(bool_hash(true), 1);
    }

    #[test]
    fn mix_is_deterministic_and_spreads() {
        assert_eq!(mix(1), mix(1));
        assert_ne!(mix(1), mix(2));
        assert_ne!(mix(0), 0);
    }

    #[test]
    fn pair_matches_tuple_of_two() {
        assert_eq!(pair_hash(3, 9), tuple_hash(&[3, 9]));
        assert_ne!(pair_hash(3, 9), pair_hash(9, 3));
    }
}
