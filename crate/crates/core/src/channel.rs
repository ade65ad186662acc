//! Degraded erasure broadcast channel.
//!
//! One uniform `U_i` per channel use; receiver `k` sees an erasure iff
//! `U_i < delta_k`. Since the deltas are nonincreasing, an erasure at a
//! stronger receiver implies one at every weaker receiver.

use rand::Rng;
use serde::Serialize;
use std::fmt::Write;

use crate::error::{Error, Result};
use crate::seed;

/// `U_i` for uses `range`: use `i` reads two words at position `2 i` of the
/// generator `(seed, stream)`, so any sub-range can be drawn on its own.
pub fn uniforms(seed: u64, stream: u64, range: std::ops::Range<usize>) -> Vec<f64> {
    let mut rng = seed::rng_at(seed, stream, 2 * range.start as u128);
    range.map(|_| rng.random::<f64>()).collect()
}

pub fn uniform_at(seed: u64, stream: u64, use_index: usize) -> f64 {
    uniforms(seed, stream, use_index..use_index + 1)[0]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelRealization {
    /// `outputs[k-1][i]`: the packet seen by receiver `k` at use `i`, `None`
    /// for an erasure.
    pub outputs: Vec<Vec<Option<u64>>>,
}

impl ChannelRealization {
    pub fn receivers(&self) -> usize {
        self.outputs.len()
    }

    pub fn uses(&self) -> usize {
        self.outputs.first().map_or(0, Vec::len)
    }

    pub fn erased(&self, k: usize, i: usize) -> bool {
        self.outputs[k - 1][i].is_none()
    }

    pub fn erasure_count(&self, k: usize) -> usize {
        self.outputs[k - 1].iter().filter(|o| o.is_none()).count()
    }

    /// True iff every erasure of receiver `j` is also one of every `k < j`.
    pub fn is_nested(&self) -> bool {
        (0..self.uses()).all(|i| {
            (2..=self.receivers()).all(|j| !self.erased(j, i) || self.erased(j - 1, i))
        })
    }

    /// CSV with header `use,erased_1,..,erased_K` and 0/1 flags.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("use");
        for k in 1..=self.receivers() {
            write!(out, ",erased_{k}").unwrap();
        }
        out.push('\n');
        for i in 0..self.uses() {
            write!(out, "{i}").unwrap();
            for k in 1..=self.receivers() {
                write!(out, ",{}", u8::from(self.erased(k, i))).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Send `packets` through the channel. `stream` separates independent
/// transmissions under the same seed.
pub fn transmit(packets: &[u64], deltas: &[f64], seed: u64, stream: u64) -> Result<ChannelRealization> {
    if packets.is_empty() {
        return Err(Error::Domain("nothing to transmit".into()));
    }
    if deltas.iter().any(|d| !(0.0..=1.0).contains(d)) || deltas.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::Domain("deltas must be nonincreasing in [0,1]".into()));
    }
    let u = uniforms(seed, stream, 0..packets.len());
    let outputs = deltas
        .iter()
        .map(|&d| {
            packets
                .iter()
                .zip(&u)
                .map(|(&x, &ui)| if ui < d { None } else { Some(x) })
                .collect()
        })
        .collect();
    Ok(ChannelRealization { outputs })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extremes() {
        let packets: Vec<u64> = (0..100).collect();
        let r = transmit(&packets, &[1.0, 0.0], 3, 0).unwrap();
        assert_eq!(r.erasure_count(1), 100);
        let seen: Vec<u64> = r.outputs[1].iter().map(|o| o.unwrap()).collect();
        assert_eq!(seen, packets);
    }

    #[test]
    fn deterministic_and_sliceable() {
        let packets = vec![1u64; 500];
        let a = transmit(&packets, &[0.7, 0.3], 11, 4).unwrap();
        let b = transmit(&packets, &[0.7, 0.3], 11, 4).unwrap();
        assert_eq!(a, b);
        let whole = uniforms(11, 4, 0..500);
        assert_eq!(uniforms(11, 4, 200..260), whole[200..260].to_vec());
        assert_eq!(uniform_at(11, 4, 37), whole[37]);
        assert_ne!(transmit(&packets, &[0.7, 0.3], 11, 5).unwrap(), a);
    }

    #[test]
    fn nested_and_trace() {
        let r = transmit(&[5, 6, 7, 8], &[0.9, 0.5, 0.1], 1, 0).unwrap();
        assert!(r.is_nested());
        let csv = r.trace_csv();
        assert!(csv.starts_with("use,erased_1,erased_2,erased_3\n"));
        assert_eq!(csv.lines().count(), 5);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(transmit(&[], &[0.5], 0, 0).is_err());
        assert!(transmit(&[1], &[0.2, 0.5], 0, 0).is_err());
    }
}
