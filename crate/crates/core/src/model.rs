//! Shared domain types: system configuration, demands and rate-memory tuples.
//!
//! Receivers are labelled `1..=K` with receiver 1 the weakest (largest erasure
//! probability); messages are labelled `1..=D`. All rates and cache budgets
//! are in bits per channel use. A quantity `x` at blocklength `n` occupies
//! `floor(n * x)` bits.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};

/// Static description of the library, the channel and the caches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// Number of receivers.
    #[serde(rename = "K")]
    pub receivers: usize,
    /// Library size.
    #[serde(rename = "D")]
    pub library_size: usize,
    /// Packet width in bits per channel use.
    #[serde(rename = "F")]
    pub packet_bits: u32,
    /// Erasure probability of each receiver, nonincreasing.
    pub deltas: Vec<f64>,
    /// Rate of each message.
    pub rates: Vec<f64>,
    /// Cache budget of each receiver.
    pub memories: Vec<f64>,
    /// Blocklength in channel uses.
    pub n: usize,
    #[serde(default)]
    pub demand_set: DemandSet,
}

impl SystemConfig {
    /// Check every invariant and hand the config back unchanged.
    pub fn validate(self) -> Result<Self> {
        if self.receivers == 0 {
            return Err(Error::config("K", "must be positive"));
        }
        if self.library_size == 0 {
            return Err(Error::config("D", "must be positive"));
        }
        if self.packet_bits == 0 || self.packet_bits > 64 {
            return Err(Error::config("F", "must lie in 1..=64"));
        }
        if self.n == 0 {
            return Err(Error::config("n", "must be positive"));
        }
        if self.deltas.len() != self.receivers {
            return Err(Error::config(
                "deltas",
                format!("expected {} entries, got {}", self.receivers, self.deltas.len()),
            ));
        }
        if let Some(d) = self.deltas.iter().find(|d| !(0.0..=1.0).contains(*d)) {
            return Err(Error::config("deltas", format!("{d} not in [0,1]")));
        }
        if self.deltas.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::config("deltas", "deltas not nonincreasing"));
        }
        if self.rates.len() != self.library_size {
            return Err(Error::config(
                "rates",
                format!("expected {} entries, got {}", self.library_size, self.rates.len()),
            ));
        }
        if let Some(r) = self.rates.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
            return Err(Error::config("rates", format!("{r} is not a nonnegative number")));
        }
        if self.memories.len() != self.receivers {
            return Err(Error::config(
                "memories",
                format!("expected {} entries, got {}", self.receivers, self.memories.len()),
            ));
        }
        if let Some(m) = self.memories.iter().find(|m| !(m.is_finite() && **m >= 0.0)) {
            return Err(Error::config("memories", format!("{m} is not a nonnegative number")));
        }
        self.demand_set.check(self.receivers, self.library_size)?;
        Ok(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SystemConfig = serde_json::from_str(text)?;
        cfg.validate()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// Per-receiver single-user capacity `F (1 - delta_k)`, indexed from 0.
    pub fn capacities(&self) -> Vec<f64> {
        self.deltas
            .iter()
            .map(|d| f64::from(self.packet_bits) * (1.0 - d))
            .collect()
    }

    /// `floor(n * x)` as a bit count.
    pub fn bits(&self, rate: f64) -> usize {
        bits_at(self.n, rate)
    }
}

/// `floor(n * rate)`, guarded against tiny negative rounding noise.
pub fn bits_at(n: usize, rate: f64) -> usize {
    let v = (n as f64 * rate + 1e-9).floor();
    if v <= 0.0 {
        0
    } else {
        v as usize
    }
}

/// One demand: `d[k-1]` is the message requested by receiver `k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DemandTuple(pub Vec<usize>);

impl DemandTuple {
    pub fn new(d: Vec<usize>, library_size: usize) -> Result<Self> {
        if let Some(x) = d.iter().find(|&&x| x == 0 || x > library_size) {
            return Err(Error::config(
                "demand_set",
                format!("message index {x} outside 1..={library_size}"),
            ));
        }
        Ok(DemandTuple(d))
    }

    /// Message demanded by receiver `k` (1-based).
    pub fn of(&self, k: usize) -> usize {
        self.0[k - 1]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// The feasible demand set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DemandSet {
    /// All `D^K` tuples.
    #[default]
    FullProduct,
    /// The `D` tuples with every receiver asking for the same message.
    Common,
    ExplicitList { tuples: Vec<Vec<usize>> },
}

impl DemandSet {
    fn check(&self, receivers: usize, library_size: usize) -> Result<()> {
        if let DemandSet::ExplicitList { tuples } = self {
            if tuples.is_empty() {
                return Err(Error::config("demand_set", "explicit list is empty"));
            }
            for t in tuples {
                if t.len() != receivers {
                    return Err(Error::config(
                        "demand_set",
                        format!("tuple {t:?} does not have {receivers} entries"),
                    ));
                }
                DemandTuple::new(t.clone(), library_size)?;
            }
        }
        Ok(())
    }

    /// Number of tuples, saturating at `u128::MAX`.
    pub fn len(&self, receivers: usize, library_size: usize) -> u128 {
        match self {
            DemandSet::FullProduct => (library_size as u128)
                .checked_pow(receivers as u32)
                .unwrap_or(u128::MAX),
            DemandSet::Common => library_size as u128,
            DemandSet::ExplicitList { tuples } => tuples.len() as u128,
        }
    }

    /// The `index`-th tuple in enumeration order. Full-product tuples are
    /// enumerated in mixed radix with receiver 1 as the most significant digit.
    pub fn nth(&self, index: u128, receivers: usize, library_size: usize) -> DemandTuple {
        match self {
            DemandSet::FullProduct => {
                let base = library_size as u128;
                let mut digits = vec![0usize; receivers];
                let mut rest = index;
                for slot in digits.iter_mut().rev() {
                    *slot = (rest % base) as usize + 1;
                    rest /= base;
                }
                DemandTuple(digits)
            }
            DemandSet::Common => DemandTuple(vec![index as usize + 1; receivers]),
            DemandSet::ExplicitList { tuples } => DemandTuple(tuples[index as usize].clone()),
        }
    }

    /// Lazily enumerate all tuples.
    pub fn iter(
        &self,
        receivers: usize,
        library_size: usize,
    ) -> impl Iterator<Item = DemandTuple> + '_ {
        let len = self.len(receivers, library_size);
        (0..len).map(move |i| self.nth(i, receivers, library_size))
    }
}

/// A candidate point `(R_1..R_D, M_1..M_K)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateMemoryTuple {
    pub rates: Vec<f64>,
    pub memories: Vec<f64>,
}

impl RateMemoryTuple {
    pub fn new(rates: Vec<f64>, memories: Vec<f64>) -> Result<Self> {
        if rates.iter().chain(&memories).any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::Domain("rate-memory entries must be nonnegative".into()));
        }
        Ok(RateMemoryTuple { rates, memories })
    }
}

/// Binomial coefficient; zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}
