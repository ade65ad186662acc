//! Caching-phase content: message splitting, subset-indexed placement and
//! prefix caching for the common-demand scheme.
//!
//! For the equal-cache pattern (receivers `1..=K0` hold `M` each) every
//! message is cut into `tau + 1` sub-messages, `tau = C(K0, t)`. Sub-message
//! `i <= tau` has rate `M / (D C(K0-1, t-1))` and is stored at every receiver
//! of the `i`-th size-`t` subset of `{1..K0}` in lexicographic order; the last
//! sub-message carries the remaining `R - M K0 / (D t)` and is never cached.

use serde::Serialize;

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::model::{binomial, bits_at, SystemConfig};
use crate::regions::CacheAllocation;

/// All size-`t` subsets of `{1..=k0}` in lexicographic order.
pub fn enumerate_cache_subsets(k0: usize, t: usize) -> Result<Vec<Vec<usize>>> {
    if t == 0 || t + 1 > k0 {
        return Err(Error::Domain(format!(
            "subset size t={t} outside 1..={} for K0={k0}",
            k0.saturating_sub(1)
        )));
    }
    Ok(subsets(k0, t))
}

/// Lexicographic `t`-subsets of `{1..=k}` without domain checks.
pub(crate) fn subsets(k: usize, t: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if t > k {
        return out;
    }
    let mut cur: Vec<usize> = (1..=t).collect();
    loop {
        out.push(cur.clone());
        // rightmost position that can still advance
        let Some(pos) = (0..t).rev().find(|&i| cur[i] < k - (t - 1 - i)) else {
            break;
        };
        cur[pos] += 1;
        for j in pos + 1..t {
            cur[j] = cur[j - 1] + 1;
        }
        if t == 0 {
            break;
        }
    }
    out
}

/// Placement pattern: receivers `1..=k0` cache, subsets have size `t`.
///
/// Besides the `1 <= t < K0` range of the subset scheme, `K0 = t = 1` is
/// accepted: receiver 1 alone caches one sub-message per file, which is the
/// single-cached-receiver scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Pattern {
    pub k0: usize,
    pub t: usize,
}

impl Pattern {
    pub fn new(k0: usize, t: usize) -> Result<Self> {
        let ok = (t >= 1 && t < k0) || (k0 == 1 && t == 1);
        if !ok {
            return Err(Error::Domain(format!("invalid pattern K0={k0}, t={t}")));
        }
        Ok(Pattern { k0, t })
    }

    /// `tau = C(K0, t)`.
    pub fn tau(&self) -> usize {
        binomial(self.k0, self.t)
    }

    /// Number of cached sub-messages per file held by one caching receiver.
    pub fn per_receiver(&self) -> usize {
        binomial(self.k0 - 1, self.t - 1)
    }

    /// Cached sub-message rate for per-receiver budget `memory`.
    pub fn piece_rate(&self, memory: f64, library_size: usize) -> f64 {
        memory / (library_size as f64 * self.per_receiver() as f64)
    }

    /// Total cached rate of one file, `M K0 / (D t)`.
    pub fn cached_rate(&self, memory: f64, library_size: usize) -> f64 {
        memory * self.k0 as f64 / (library_size as f64 * self.t as f64)
    }
}

/// How every message is split. All messages share the same split because the
/// scheme assumes equal rates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubMessageLayout {
    pub pattern: Pattern,
    pub library_size: usize,
    pub n: usize,
    pub rate: f64,
    pub memory: f64,
    /// `subsets[i-1]` is the receiver set holding sub-message `i <= tau`.
    pub subsets: Vec<Vec<usize>>,
    /// Rate of sub-message `i` at index `i-1`, `tau + 1` entries.
    pub rates: Vec<f64>,
    /// Bit length `floor(n * rate)` of sub-message `i` at index `i-1`.
    pub lengths: Vec<usize>,
    /// `floor(n R) - sum(lengths)`, bits lost to rounding.
    pub rounding_slack: usize,
}

impl SubMessageLayout {
    /// Layout for message rate `rate` and per-receiver budget `memory`.
    pub fn new(
        pattern: Pattern,
        library_size: usize,
        n: usize,
        rate: f64,
        memory: f64,
    ) -> Result<Self> {
        if memory < 0.0 || rate < 0.0 {
            return Err(Error::Domain("rate and memory must be nonnegative".into()));
        }
        let cached = pattern.cached_rate(memory, library_size);
        let uncached = rate - cached;
        if uncached < -1e-12 {
            return Err(Error::OutOfRegime(format!(
                "cached rate M K0/(D t) = {cached} exceeds message rate {rate}"
            )));
        }
        let piece = pattern.piece_rate(memory, library_size);
        let tau = pattern.tau();
        let mut rates = vec![piece; tau];
        rates.push(uncached.max(0.0));
        let lengths: Vec<usize> = rates.iter().map(|&r| bits_at(n, r)).collect();
        let total: usize = lengths.iter().sum();
        Ok(SubMessageLayout {
            pattern,
            library_size,
            n,
            rate,
            memory,
            subsets: subsets(pattern.k0, pattern.t),
            rates,
            lengths,
            rounding_slack: bits_at(n, rate).saturating_sub(total),
        })
    }

    pub fn tau(&self) -> usize {
        self.subsets.len()
    }

    /// Index of the uncached sub-message, `tau + 1`.
    pub fn uncached_index(&self) -> usize {
        self.tau() + 1
    }

    /// Length of every message under this layout.
    pub fn message_len(&self) -> usize {
        self.lengths.iter().sum()
    }

    pub fn len_of(&self, sub_message: usize) -> usize {
        self.lengths[sub_message - 1]
    }

    /// Start offset of sub-message `i` inside its message.
    pub fn offset_of(&self, sub_message: usize) -> usize {
        self.lengths[..sub_message - 1].iter().sum()
    }

    /// Whether receiver `k` stores sub-message `i` of every file.
    pub fn is_cached_at(&self, sub_message: usize, k: usize) -> bool {
        sub_message <= self.tau() && self.subsets[sub_message - 1].contains(&k)
    }

    /// Sub-message index whose subset equals `set` (sorted).
    pub fn index_of_subset(&self, set: &[usize]) -> Option<usize> {
        self.subsets.iter().position(|s| s == set).map(|i| i + 1)
    }

    /// Cached bits held by receiver `k`.
    pub fn cached_bits_at(&self, k: usize) -> usize {
        (1..=self.tau())
            .filter(|&i| self.is_cached_at(i, k))
            .map(|i| self.len_of(i))
            .sum::<usize>()
            * self.library_size
    }
}

/// Build the layout for a validated config with equal message rates.
pub fn sub_message_layout(
    cfg: &SystemConfig,
    k0: usize,
    t: usize,
    memory: f64,
) -> Result<SubMessageLayout> {
    let rate = equal_rate(cfg)?;
    if k0 > cfg.receivers {
        return Err(Error::Domain(format!("K0={k0} exceeds K={}", cfg.receivers)));
    }
    SubMessageLayout::new(Pattern::new(k0, t)?, cfg.library_size, cfg.n, rate, memory)
}

pub(crate) fn equal_rate(cfg: &SystemConfig) -> Result<f64> {
    let r = cfg.rates[0];
    if cfg.rates.iter().any(|x| (x - r).abs() > 1e-12) {
        return Err(Error::Domain("scheme requires equal message rates".into()));
    }
    Ok(r)
}

/// The message library: one bit string per file, index `d - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Library {
    pub messages: Vec<BitString>,
}

impl Library {
    pub fn random<R: rand::Rng + ?Sized>(lengths: &[usize], rng: &mut R) -> Self {
        Library {
            messages: lengths.iter().map(|&l| BitString::random(l, rng)).collect(),
        }
    }

    pub fn message(&self, d: usize) -> &BitString {
        &self.messages[d - 1]
    }

    /// Sub-message `i` of file `d` under `layout`.
    pub fn sub_message(&self, layout: &SubMessageLayout, d: usize, i: usize) -> BitString {
        let off = layout.offset_of(i);
        self.message(d).slice(off..off + layout.len_of(i))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CacheEntry {
    SubMessage {
        message: usize,
        sub_message: usize,
        #[serde(skip)]
        bits: BitString,
        len: usize,
    },
    Prefix {
        message: usize,
        #[serde(skip)]
        bits: BitString,
        len: usize,
    },
}

impl CacheEntry {
    pub fn len(&self) -> usize {
        match self {
            CacheEntry::SubMessage { len, .. } | CacheEntry::Prefix { len, .. } => *len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Cache content of one receiver.
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct ReceiverCache {
    pub receiver: usize,
    pub capacity_bits: usize,
    pub entries: Vec<CacheEntry>,
}

impl ReceiverCache {
    pub fn used_bits(&self) -> usize {
        self.entries.iter().map(CacheEntry::len).sum()
    }

    pub fn sub_message(&self, d: usize, i: usize) -> Option<&BitString> {
        self.entries.iter().find_map(|e| match e {
            CacheEntry::SubMessage {
                message,
                sub_message,
                bits,
                ..
            } if *message == d && *sub_message == i => Some(bits),
            _ => None,
        })
    }

    pub fn prefix(&self, d: usize) -> Option<&BitString> {
        self.entries.iter().find_map(|e| match e {
            CacheEntry::Prefix { message, bits, .. } if *message == d => Some(bits),
            _ => None,
        })
    }
}

/// Cache content of every receiver, index `k - 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CacheContents {
    pub receivers: Vec<ReceiverCache>,
}

impl CacheContents {
    pub fn of(&self, k: usize) -> &ReceiverCache {
        &self.receivers[k - 1]
    }
}

fn check_capacity(cache: &ReceiverCache) -> Result<()> {
    if cache.used_bits() > cache.capacity_bits {
        return Err(Error::CacheCapacity {
            receiver: cache.receiver,
            needed: cache.used_bits(),
            available: cache.capacity_bits,
        });
    }
    Ok(())
}

/// Subset placement. `memories` gives the budget of each of the `K`
/// receivers; receivers above `K0` end up empty.
pub fn build_caches(
    library: &Library,
    layout: &SubMessageLayout,
    memories: &[f64],
) -> Result<CacheContents> {
    if library.messages.len() != layout.library_size {
        return Err(Error::Domain("library size does not match layout".into()));
    }
    if let Some((d, m)) = library
        .messages
        .iter()
        .enumerate()
        .find(|(_, m)| m.len() != layout.message_len())
    {
        return Err(Error::Domain(format!(
            "message {} has {} bits, layout expects {}",
            d + 1,
            m.len(),
            layout.message_len()
        )));
    }
    let receivers = memories
        .iter()
        .enumerate()
        .map(|(idx, &mem)| {
            let k = idx + 1;
            let mut cache = ReceiverCache {
                receiver: k,
                capacity_bits: bits_at(layout.n, mem),
                entries: Vec::new(),
            };
            for d in 1..=layout.library_size {
                for i in 1..=layout.tau() {
                    if layout.is_cached_at(i, k) {
                        let bits = library.sub_message(layout, d, i);
                        cache.entries.push(CacheEntry::SubMessage {
                            message: d,
                            sub_message: i,
                            len: bits.len(),
                            bits,
                        });
                    }
                }
            }
            check_capacity(&cache)?;
            Ok(cache)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CacheContents { receivers })
}

/// Prefix caching: receiver `k` keeps the first `floor(n M_{k,d})` bits of
/// every file `d`.
pub fn build_prefix_caches(
    library: &Library,
    allocation: &CacheAllocation,
    memories: &[f64],
    n: usize,
) -> Result<CacheContents> {
    if allocation.rows.len() != memories.len() {
        return Err(Error::Domain("allocation has wrong number of receivers".into()));
    }
    let receivers = allocation
        .rows
        .iter()
        .zip(memories)
        .enumerate()
        .map(|(idx, (row, &mem))| {
            let mut cache = ReceiverCache {
                receiver: idx + 1,
                capacity_bits: bits_at(n, mem),
                entries: Vec::new(),
            };
            for (didx, &share) in row.iter().enumerate() {
                let msg = &library.messages[didx];
                let len = bits_at(n, share).min(msg.len());
                if len > 0 {
                    cache.entries.push(CacheEntry::Prefix {
                        message: didx + 1,
                        bits: msg.slice(0..len),
                        len,
                    });
                }
            }
            check_capacity(&cache)?;
            Ok(cache)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CacheContents { receivers })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Brute force: filter all bitmasks by popcount, then sort.
    fn brute_subsets(k: usize, t: usize) -> Vec<Vec<usize>> {
        let mut all: Vec<Vec<usize>> = (0u32..(1 << k))
            .filter(|m| m.count_ones() as usize == t)
            .map(|m| (0..k).filter(|b| m >> b & 1 == 1).map(|b| b + 1).collect())
            .collect();
        all.sort();
        all
    }

    #[test]
    fn subsets_small() {
        assert_eq!(
            enumerate_cache_subsets(3, 2).unwrap(),
            vec![vec![1, 2], vec![1, 3], vec![2, 3]]
        );
        assert_eq!(
            enumerate_cache_subsets(3, 1).unwrap(),
            vec![vec![1], vec![2], vec![3]]
        );
        let five_two = enumerate_cache_subsets(5, 2).unwrap();
        assert_eq!(five_two.len(), 10);
        assert_eq!(five_two, brute_subsets(5, 2));
    }

    #[test]
    fn subsets_match_brute_force() {
        for k in 2..=8 {
            for t in 1..k {
                assert_eq!(enumerate_cache_subsets(k, t).unwrap(), brute_subsets(k, t));
            }
        }
    }

    #[test]
    fn subsets_domain() {
        assert!(enumerate_cache_subsets(3, 3).is_err());
        assert!(enumerate_cache_subsets(3, 0).is_err());
        assert!(enumerate_cache_subsets(1, 1).is_err());
    }

    #[test]
    fn layout_rates() {
        let layout = SubMessageLayout::new(Pattern::new(3, 2).unwrap(), 6, 1000, 2.0, 3.0).unwrap();
        assert_eq!(layout.rates, vec![0.25, 0.25, 0.25, 1.25]);
        assert_eq!(layout.lengths, vec![250, 250, 250, 1250]);
        let zero = SubMessageLayout::new(Pattern::new(3, 2).unwrap(), 6, 1000, 2.0, 0.0).unwrap();
        assert_eq!(zero.rates, vec![0.0, 0.0, 0.0, 2.0]);
        assert!(matches!(
            SubMessageLayout::new(Pattern::new(3, 2).unwrap(), 6, 1000, 0.5, 3.0),
            Err(Error::OutOfRegime(_))
        ));
    }

    #[test]
    fn layout_memory_accounting() {
        // every caching receiver stores D C(K0-1,t-1) pieces, i.e. n M bits
        for (k0, t) in [(2, 1), (3, 1), (3, 2), (4, 2), (5, 3)] {
            let pattern = Pattern::new(k0, t).unwrap();
            let d = 4;
            let m = 1.2;
            let n = binomial(k0 - 1, t - 1) * d * 1000;
            let layout = SubMessageLayout::new(pattern, d, n, 5.0, m).unwrap();
            for k in 1..=k0 {
                assert_eq!(layout.cached_bits_at(k), bits_at(n, m), "K0={k0} t={t} k={k}");
            }
        }
    }

    fn sample_library(layout: &SubMessageLayout, seed: u64) -> Library {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Library::random(&vec![layout.message_len(); layout.library_size], &mut rng)
    }

    #[test]
    fn two_receiver_placement() {
        let layout = SubMessageLayout::new(Pattern::new(2, 1).unwrap(), 3, 100, 1.0, 0.6).unwrap();
        let lib = sample_library(&layout, 1);
        let caches = build_caches(&lib, &layout, &[0.6, 0.6]).unwrap();
        for d in 1..=3 {
            assert_eq!(caches.of(1).sub_message(d, 1), Some(&lib.sub_message(&layout, d, 1)));
            assert!(caches.of(1).sub_message(d, 2).is_none());
            assert_eq!(caches.of(2).sub_message(d, 2), Some(&lib.sub_message(&layout, d, 2)));
        }
    }

    #[test]
    fn three_receiver_membership() {
        let layout = SubMessageLayout::new(Pattern::new(3, 2).unwrap(), 2, 200, 2.0, 1.0).unwrap();
        let lib = sample_library(&layout, 2);
        let caches = build_caches(&lib, &layout, &[1.0, 1.0, 1.0]).unwrap();
        let held: Vec<usize> = caches
            .of(1)
            .entries
            .iter()
            .filter_map(|e| match e {
                CacheEntry::SubMessage { message: 1, sub_message, .. } => Some(*sub_message),
                _ => None,
            })
            .collect();
        assert_eq!(held, vec![1, 2]); // {1,2} and {1,3}
        for i in 1..=layout.tau() {
            let holders = (1..=3).filter(|&k| caches.of(k).sub_message(1, i).is_some()).count();
            assert_eq!(holders, 2);
        }
    }

    #[test]
    fn capacity_error() {
        let layout = SubMessageLayout::new(Pattern::new(2, 1).unwrap(), 3, 100, 1.0, 0.6).unwrap();
        let lib = sample_library(&layout, 3);
        assert!(matches!(
            build_caches(&lib, &layout, &[0.3, 0.6]),
            Err(Error::CacheCapacity { receiver: 1, .. })
        ));
    }

    #[test]
    fn prefix_caches() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let lib = Library::random(&[100], &mut rng);
        let empty = CacheAllocation { rows: vec![vec![0.0], vec![0.0]] };
        let c = build_prefix_caches(&lib, &empty, &[0.0, 0.0], 100).unwrap();
        assert!(c.receivers.iter().all(|r| r.entries.is_empty()));

        let full = CacheAllocation { rows: vec![vec![1.0], vec![0.25]] };
        let c = build_prefix_caches(&lib, &full, &[1.0, 0.3], 100).unwrap();
        assert_eq!(c.of(1).prefix(1), Some(lib.message(1)));
        assert_eq!(c.of(2).prefix(1).unwrap(), &lib.message(1).slice(0..25));

        assert!(build_prefix_caches(&lib, &full, &[1.0, 0.2], 100).is_err());
    }
}
