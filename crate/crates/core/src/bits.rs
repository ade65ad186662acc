//! Bit strings and packing into `F`-bit channel blocks.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::ops::Range;

/// A string of bits, one `bool` per position.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn zeros(len: usize) -> Self {
        BitString(vec![false; len])
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        BitString((0..len).map(|_| rng.random::<bool>()).collect())
    }

    pub fn from_bools(bits: Vec<bool>) -> Self {
        BitString(bits)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn slice(&self, range: Range<usize>) -> BitString {
        BitString(self.0[range].to_vec())
    }

    pub fn push_all(&mut self, other: &BitString) {
        self.0.extend_from_slice(&other.0);
    }

    pub fn write_at(&mut self, offset: usize, other: &BitString) {
        self.0[offset..offset + other.len()].copy_from_slice(&other.0);
    }

    /// Bitwise XOR; both operands must have the same length.
    pub fn xor(&self, other: &BitString) -> BitString {
        assert_eq!(self.len(), other.len(), "xor of unequal lengths");
        BitString(self.0.iter().zip(&other.0).map(|(a, b)| a ^ b).collect())
    }

    pub fn xor_assign(&mut self, other: &BitString) {
        assert_eq!(self.len(), other.len(), "xor of unequal lengths");
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a ^= b;
        }
    }

    /// Number of `width`-bit blocks needed to hold the string.
    pub fn block_count(&self, width: u32) -> usize {
        self.len().div_ceil(width as usize)
    }

    /// Pack into `width`-bit blocks (LSB first), zero-padding the last one.
    pub fn to_blocks(&self, width: u32) -> Vec<u64> {
        assert!((1..=64).contains(&width));
        self.0
            .chunks(width as usize)
            .map(|chunk| {
                chunk
                    .iter()
                    .enumerate()
                    .fold(0u64, |acc, (i, &b)| acc | (u64::from(b) << i))
            })
            .collect()
    }

    /// Inverse of [`to_blocks`](Self::to_blocks), truncated to `len` bits.
    pub fn from_blocks(blocks: &[u64], width: u32, len: usize) -> BitString {
        let mut bits = Vec::with_capacity(blocks.len() * width as usize);
        for &b in blocks {
            bits.extend((0..width).map(|i| (b >> i) & 1 == 1));
        }
        bits.truncate(len);
        BitString(bits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn block_round_trip(bits in proptest::collection::vec(any::<bool>(), 0..300), width in 1u32..=64) {
            let s = BitString::from_bools(bits);
            let blocks = s.to_blocks(width);
            prop_assert_eq!(blocks.len(), s.block_count(width));
            prop_assert_eq!(BitString::from_blocks(&blocks, width, s.len()), s);
        }
    }

    #[test]
    fn xor_is_involution() {
        let a = BitString::from_bools(vec![true, false, true, true]);
        let b = BitString::from_bools(vec![false, false, true, false]);
        assert_eq!(a.xor(&b).xor(&b), a);
    }
}
