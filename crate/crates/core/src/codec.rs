//! Rateless random linear code over GF(2) on `F`-bit blocks.
//!
//! A packet is the XOR of a random subset of the phase's source blocks. Its
//! coefficient vector is not sent: it is regenerated from `(seed, phase,
//! index)`. The decoder first removes every block it already knows, then
//! eliminates over the remaining unknowns only.

use rand::Rng;
use serde::Serialize;
use std::collections::BTreeMap;

use crate::seed;

/// Packet slack used when sizing tests and the simulation's rate backoff.
pub const DEFAULT_SLACK: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Descriptor {
    pub seed: u64,
    pub phase: u64,
    pub index: u64,
}

impl Descriptor {
    /// Coefficient bits over `blocks` source blocks, packed 64 per word.
    pub fn coefficients(&self, blocks: usize) -> Vec<u64> {
        let words = blocks.div_ceil(64);
        let mut rng = seed::rng_at(self.seed, self.phase, u128::from(self.index) * 2 * words as u128);
        let mut v: Vec<u64> = (0..words).map(|_| rng.random()).collect();
        if blocks % 64 != 0 {
            if let Some(last) = v.last_mut() {
                *last &= (1u64 << (blocks % 64)) - 1;
            }
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CodedPacket {
    pub descriptor: Descriptor,
    pub payload: u64,
}

fn bit(v: &[u64], j: usize) -> bool {
    (v[j / 64] >> (j % 64)) & 1 == 1
}

fn combine(coef: &[u64], blocks: &[u64]) -> u64 {
    blocks
        .iter()
        .enumerate()
        .filter(|(j, _)| bit(coef, *j))
        .fold(0, |acc, (_, b)| acc ^ b)
}

pub fn encode(blocks: &[u64], count: usize, phase: u64, seed: u64) -> Vec<CodedPacket> {
    (0..count as u64)
        .map(|index| {
            let descriptor = Descriptor { seed, phase, index };
            CodedPacket {
                payload: combine(&descriptor.coefficients(blocks.len()), blocks),
                descriptor,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DecodeFailure {
    pub unknowns: usize,
    pub rank: usize,
    pub rank_deficit: usize,
}

/// Incremental GF(2) elimination restricted to unknown blocks.
#[derive(Debug, Clone)]
pub struct Decoder {
    blocks: usize,
    known: BTreeMap<usize, u64>,
    /// Unknown block index -> dense column.
    column: Vec<Option<usize>>,
    unknown_ids: Vec<usize>,
    /// Row with leading (lowest) column `c` at `pivots[c]`.
    pivots: Vec<Option<(Vec<u64>, u64)>>,
    rank: usize,
}

impl Decoder {
    pub fn new(blocks: usize, known: BTreeMap<usize, u64>) -> Self {
        let mut column = vec![None; blocks];
        let mut unknown_ids = Vec::new();
        for (j, slot) in column.iter_mut().enumerate() {
            if !known.contains_key(&j) {
                *slot = Some(unknown_ids.len());
                unknown_ids.push(j);
            }
        }
        let u = unknown_ids.len();
        Decoder {
            blocks,
            known,
            column,
            unknown_ids,
            pivots: vec![None; u],
            rank: 0,
        }
    }

    pub fn unknowns(&self) -> usize {
        self.unknown_ids.len()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_complete(&self) -> bool {
        self.rank == self.unknowns()
    }

    /// Absorb one packet; returns true if it raised the rank.
    pub fn push(&mut self, packet: &CodedPacket) -> bool {
        if self.is_complete() {
            return false;
        }
        let full = packet.descriptor.coefficients(self.blocks);
        self.push_row(&full, packet.payload)
    }

    /// Absorb an explicit combination: `coefficients` packs one bit per
    /// source block.
    pub fn push_row(&mut self, coefficients: &[u64], payload: u64) -> bool {
        let u = self.unknowns();
        let mut row = vec![0u64; u.div_ceil(64)];
        let mut payload = payload;
        for j in 0..self.blocks {
            if !bit(coefficients, j) {
                continue;
            }
            match self.column[j] {
                Some(c) => row[c / 64] |= 1 << (c % 64),
                None => payload ^= self.known[&j],
            }
        }
        loop {
            let Some(lead) = lowest_set(&row) else {
                return false;
            };
            match &self.pivots[lead] {
                Some((prow, pay)) => {
                    for (a, b) in row.iter_mut().zip(prow) {
                        *a ^= b;
                    }
                    payload ^= pay;
                }
                None => {
                    self.pivots[lead] = Some((row, payload));
                    self.rank += 1;
                    return true;
                }
            }
        }
    }

    /// All `B` blocks, or the rank deficit.
    pub fn finish(mut self) -> Result<Vec<u64>, DecodeFailure> {
        let u = self.unknowns();
        if self.rank < u {
            return Err(DecodeFailure {
                unknowns: u,
                rank: self.rank,
                rank_deficit: u - self.rank,
            });
        }
        let mut value = vec![0u64; u];
        for c in (0..u).rev() {
            let (row, mut pay) = self.pivots[c].take().expect("full rank");
            for h in c + 1..u {
                if bit(&row, h) {
                    pay ^= value[h];
                }
            }
            value[c] = pay;
        }
        Ok((0..self.blocks)
            .map(|j| match self.column[j] {
                Some(c) => value[c],
                None => self.known[&j],
            })
            .collect())
    }
}

fn lowest_set(row: &[u64]) -> Option<usize> {
    row.iter()
        .enumerate()
        .find(|(_, w)| **w != 0)
        .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
}

pub fn decode(
    received: &[CodedPacket],
    known: &BTreeMap<usize, u64>,
    blocks: usize,
) -> Result<Vec<u64>, DecodeFailure> {
    let mut dec = Decoder::new(blocks, known.clone());
    for p in received {
        if dec.is_complete() {
            break;
        }
        dec.push(p);
    }
    dec.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_block() {
        let pk = encode(&[0xabc], 20, 0, 1);
        for p in &pk {
            let c = p.descriptor.coefficients(1)[0];
            assert_eq!(p.payload, if c == 1 { 0xabc } else { 0 });
        }
    }

    #[test]
    fn deterministic() {
        let blocks = [1, 2, 3, 4];
        assert_eq!(encode(&blocks, 64, 3, 9), encode(&blocks, 64, 3, 9));
        assert_ne!(encode(&blocks, 64, 3, 9), encode(&blocks, 64, 4, 9));
    }

    #[test]
    fn all_known_needs_nothing() {
        let known: BTreeMap<usize, u64> = [(0, 5), (1, 6)].into();
        assert_eq!(decode(&[], &known, 2).unwrap(), vec![5, 6]);
    }

    #[test]
    fn hand_elimination() {
        // blocks 1,2 known; rows (0011), (0001) over blocks 1..4
        let blocks = [0x1u64, 0x2, 0x4, 0x8];
        let known: BTreeMap<usize, u64> = [(0, 0x1), (1, 0x2)].into();
        let mut dec = Decoder::new(4, known);
        assert!(dec.push_row(&[0b1100], 0x4 ^ 0x8));
        assert!(dec.push_row(&[0b1000], 0x8));
        assert_eq!(dec.finish().unwrap(), blocks.to_vec());
    }

    #[test]
    fn too_few_packets_fail() {
        let blocks: Vec<u64> = (0..10).collect();
        let pk = encode(&blocks, 9, 0, 2);
        let err = decode(&pk, &BTreeMap::new(), 10).unwrap_err();
        assert!(err.rank_deficit >= 1);
        assert_eq!(err.unknowns, 10);
    }

    #[test]
    fn round_trip_with_side_information() {
        let blocks: Vec<u64> = (0..40).map(|i| i * 7919 % 65536).collect();
        let pk = encode(&blocks, 40 + DEFAULT_SLACK, 1, 5);
        let known: BTreeMap<usize, u64> = (0..40).step_by(3).map(|j| (j, blocks[j])).collect();
        assert_eq!(decode(&pk, &known, 40).unwrap(), blocks);
    }
}
