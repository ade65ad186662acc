//! The K-phase delivery schedule of the subset scheme and its verification.
//!
//! Phase `p <= K0` carries the XOR groups whose smallest member is `p`, the
//! uncached part of `W_{d_p}`, and piggyback slices of the stronger,
//! cache-less receivers' files that receiver `p` already holds. Phase
//! `p > K0` carries whatever of `W_{d_p}` is still missing. Phase `p` is
//! meant to be decoded by receivers `p..=K`.

use serde::Serialize;
use std::collections::{BTreeSet, VecDeque};
use std::ops::Range;

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::model::{bits_at, DemandTuple, SystemConfig};
use crate::placement::{subsets, Library, SubMessageLayout};
use crate::regions::SchemeParameters;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ItemKind {
    /// XOR of `t + 1` sub-messages, one per member of a receiver group.
    XorGroup,
    /// The never-cached last sub-message of a weak receiver's file.
    UncachedPart,
    /// Bits of a cache-less receiver's file, known to the phase's receiver.
    PiggybackSlice,
    /// Bits of a cache-less receiver's file not sent earlier.
    Remainder,
}

/// A bit range of one sub-message of one file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Constituent {
    pub message: usize,
    pub sub_message: usize,
    pub range: Range<usize>,
    /// Receiver that wants these bits.
    pub for_receiver: usize,
}

impl Constituent {
    pub fn len(&self) -> usize {
        self.range.len()
    }

    pub fn is_empty(&self) -> bool {
        self.range.is_empty()
    }

    pub fn bits(&self, library: &Library, layout: &SubMessageLayout) -> BitString {
        let off = layout.offset_of(self.sub_message);
        library
            .message(self.message)
            .slice(off + self.range.start..off + self.range.end)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PayloadItem {
    pub kind: ItemKind,
    pub constituents: Vec<Constituent>,
    /// Payload length in bits (all constituents have this length).
    pub bits: usize,
    /// Receivers whose caches hold every constituent.
    pub known_to: BTreeSet<usize>,
}

impl PayloadItem {
    fn single(kind: ItemKind, c: Constituent, layout: &SubMessageLayout, receivers: usize) -> Self {
        let known_to = (1..=receivers)
            .filter(|&j| layout.is_cached_at(c.sub_message, j))
            .collect();
        PayloadItem {
            kind,
            bits: c.len(),
            constituents: vec![c],
            known_to,
        }
    }

    /// The transmitted bits: the XOR of all constituents.
    pub fn render(&self, library: &Library, layout: &SubMessageLayout) -> BitString {
        let mut out = BitString::zeros(self.bits);
        for c in &self.constituents {
            out.xor_assign(&c.bits(library, layout));
        }
        out
    }
}

/// Form the XOR item for receiver group `group` (sorted, size `t + 1`, within
/// `1..=K0`): member `k` contributes its demanded sub-message stored at
/// exactly `group \ {k}`.
pub fn xor_group(
    layout: &SubMessageLayout,
    demand: &DemandTuple,
    group: &[usize],
) -> Result<PayloadItem> {
    let t = layout.pattern.t;
    if group.len() != t + 1 || group.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Index(format!(
            "group {group:?} must be {} strictly increasing receivers",
            t + 1
        )));
    }
    let mut constituents = Vec::with_capacity(group.len());
    for &k in group {
        let rest: Vec<usize> = group.iter().copied().filter(|&j| j != k).collect();
        let i = layout
            .index_of_subset(&rest)
            .ok_or_else(|| Error::Index(format!("{rest:?} is not a cached subset")))?;
        if k > demand.len() {
            return Err(Error::Index(format!("receiver {k} has no demand")));
        }
        constituents.push(Constituent {
            message: demand.of(k),
            sub_message: i,
            range: 0..layout.len_of(i),
            for_receiver: k,
        });
    }
    let receivers = demand.len();
    let known_to = (1..=receivers)
        .filter(|&j| constituents.iter().all(|c| layout.is_cached_at(c.sub_message, j)))
        .collect();
    Ok(PayloadItem {
        kind: ItemKind::XorGroup,
        bits: layout.len_of(constituents[0].sub_message),
        constituents,
        known_to,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Phase {
    pub index: usize,
    pub beta: f64,
    /// Channel uses, `floor(beta n)`.
    pub budget: usize,
    pub items: Vec<PayloadItem>,
    /// Bits by which integer rounding of the piggyback rates can push this
    /// phase above its rate-level load.
    pub rounding_slack_bits: usize,
}

impl Phase {
    pub fn payload_bits(&self) -> usize {
        self.items.iter().map(|i| i.bits).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseSchedule {
    pub k0: usize,
    pub t: usize,
    pub n: usize,
    pub demand: DemandTuple,
    pub phases: Vec<Phase>,
    /// Requested piggyback bits that could not be placed (sent in the
    /// receiver's own phase instead).
    pub piggyback_shortfall: usize,
}

/// Assemble the schedule for `demand`.
pub fn build_schedule(
    cfg: &SystemConfig,
    params: &SchemeParameters,
    layout: &SubMessageLayout,
    demand: &DemandTuple,
) -> Result<PhaseSchedule> {
    let big_k = cfg.receivers;
    if layout.pattern != params.pattern() {
        return Err(Error::Domain("layout and parameters use different patterns".into()));
    }
    if params.beta.len() != big_k || demand.len() != big_k {
        return Err(Error::Domain("beta and demand must have K entries".into()));
    }
    DemandTuple::new(demand.0.clone(), cfg.library_size)?;
    let k0 = params.k0;
    let n = layout.n;
    let tau = layout.tau();
    let groups = subsets(k0, params.t + 1);

    // taken[kt][i-1]: prefix of W_{d_kt}^(i) already piggybacked
    let mut taken = vec![vec![0usize; tau]; big_k + 1];
    let mut slices: Vec<Vec<PayloadItem>> = vec![Vec::new(); k0 + 1];
    let mut shortfall = 0;
    for kt in k0 + 1..=big_k {
        let wanted: Vec<usize> = (1..=k0)
            .map(|k| bits_at(n, params.piggyback_rate(k, kt)))
            .collect();
        let lengths: Vec<usize> = (1..=tau).map(|i| layout.len_of(i)).collect();
        let flow = piggyback_flow(&wanted, &lengths, &layout.subsets);
        // per sub-message, phases take consecutive ranges in phase order
        for k in 1..=k0 {
            let mut got = 0;
            for i in 1..=tau {
                let amount = flow[k - 1][i - 1];
                if amount == 0 {
                    continue;
                }
                let start = taken[kt][i - 1];
                taken[kt][i - 1] += amount;
                got += amount;
                let c = Constituent {
                    message: demand.of(kt),
                    sub_message: i,
                    range: start..start + amount,
                    for_receiver: kt,
                };
                slices[k].push(PayloadItem::single(ItemKind::PiggybackSlice, c, layout, big_k));
            }
            shortfall += wanted[k - 1] - got;
        }
    }

    let mut phases = Vec::with_capacity(big_k);
    for p in 1..=big_k {
        let mut items = Vec::new();
        let mut rounding = 0;
        if p <= k0 {
            for g in groups.iter().filter(|g| g[0] == p) {
                let item = xor_group(layout, demand, g)?;
                if item.bits > 0 {
                    items.push(item);
                }
            }
            let u = layout.uncached_index();
            if layout.len_of(u) > 0 {
                let c = Constituent {
                    message: demand.of(p),
                    sub_message: u,
                    range: 0..layout.len_of(u),
                    for_receiver: p,
                };
                items.push(PayloadItem::single(ItemKind::UncachedPart, c, layout, big_k));
            }
            items.append(&mut slices[p]);
        } else {
            for i in 1..=tau + 1 {
                let start = if i <= tau { taken[p][i - 1] } else { 0 };
                let end = layout.len_of(i);
                if start < end {
                    let c = Constituent {
                        message: demand.of(p),
                        sub_message: i,
                        range: start..end,
                        for_receiver: p,
                    };
                    items.push(PayloadItem::single(ItemKind::Remainder, c, layout, big_k));
                }
            }
            let requested: usize = (1..=k0)
                .map(|k| bits_at(n, params.piggyback_rate(k, p)))
                .sum();
            let sent: usize = taken[p].iter().sum();
            rounding = k0 + requested.saturating_sub(sent);
        }
        phases.push(Phase {
            index: p,
            beta: params.beta[p - 1],
            budget: bits_at(n, params.beta[p - 1]),
            items,
            rounding_slack_bits: rounding,
        });
    }
    Ok(PhaseSchedule {
        k0,
        t: params.t,
        n,
        demand: demand.clone(),
        phases,
        piggyback_shortfall: shortfall,
    })
}

/// Integral transportation of `wanted[k]` piggyback bits from phase `k` to
/// the sub-messages cached at `k`, each holding `lengths[i]` bits. Edmonds-Karp
/// with neighbours scanned in lexicographic order, so the result is
/// deterministic. Returns `flow[k][i]`.
fn piggyback_flow(wanted: &[usize], lengths: &[usize], sets: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let (np, ns) = (wanted.len(), lengths.len());
    let nodes = 2 + np + ns;
    let (src, sink) = (0, nodes - 1);
    let phase = |k: usize| 1 + k;
    let sub = |i: usize| 1 + np + i;
    let mut cap = vec![vec![0usize; nodes]; nodes];
    for (k, &w) in wanted.iter().enumerate() {
        cap[src][phase(k)] = w;
        for (i, set) in sets.iter().enumerate() {
            if set.contains(&(k + 1)) {
                cap[phase(k)][sub(i)] = usize::MAX / 4;
            }
        }
    }
    for (i, &l) in lengths.iter().enumerate() {
        cap[sub(i)][sink] = l;
    }
    let original = cap.clone();
    loop {
        let mut prev = vec![usize::MAX; nodes];
        prev[src] = src;
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            for v in 0..nodes {
                if prev[v] == usize::MAX && cap[u][v] > 0 {
                    prev[v] = u;
                    queue.push_back(v);
                }
            }
        }
        if prev[sink] == usize::MAX {
            break;
        }
        let mut bottleneck = usize::MAX;
        let mut v = sink;
        while v != src {
            bottleneck = bottleneck.min(cap[prev[v]][v]);
            v = prev[v];
        }
        let mut v = sink;
        while v != src {
            let u = prev[v];
            cap[u][v] -= bottleneck;
            cap[v][u] += bottleneck;
            v = u;
        }
    }
    (0..np)
        .map(|k| {
            (0..ns)
                .map(|i| original[phase(k)][sub(i)].saturating_sub(cap[phase(k)][sub(i)]))
                .collect()
        })
        .collect()
}

/// Relative slack (per channel use and packet bit) absorbing LP round-off.
pub const VERIFY_TOL: f64 = 1e-6;

/// Which knowledge to credit when counting unknown bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Accounting {
    /// Everything the receiver's cache really holds.
    Exact,
    /// Piggyback slices are credited only to the phase's own receiver, as in
    /// the rate analysis of the scheme.
    Nominal,
}

fn item_known(item: &PayloadItem, phase: usize, k: usize, accounting: Accounting) -> bool {
    match (accounting, item.kind) {
        (Accounting::Nominal, ItemKind::PiggybackSlice) => k == phase,
        _ => item.known_to.contains(&k),
    }
}

/// Unknown payload bits of receiver `k` in phase `p`.
pub fn unknown_bits(schedule: &PhaseSchedule, p: usize, k: usize, accounting: Accounting) -> usize {
    schedule.phases[p - 1]
        .items
        .iter()
        .filter(|item| !item_known(item, p, k, accounting))
        .map(|item| item.bits)
        .sum()
}

/// For each phase `p <= k`, the payload bits of phase `p` that receiver `k`
/// does not hold in its cache. Entry `p - 1`.
pub fn receiver_unknown_bits(schedule: &PhaseSchedule, k: usize) -> Vec<usize> {
    (1..=k.min(schedule.phases.len()))
        .map(|p| unknown_bits(schedule, p, k, Accounting::Exact))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseCheck {
    pub phase: usize,
    pub receiver: usize,
    pub unknown_bits: usize,
    /// `margin * beta_p * n * F (1 - delta_j)`.
    pub capacity_bits: f64,
    pub rounding_slack_bits: usize,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub ok: bool,
    pub margin: f64,
    pub checks: Vec<PhaseCheck>,
}

impl VerifyReport {
    pub fn failures(&self) -> impl Iterator<Item = &PhaseCheck> {
        self.checks.iter().filter(|c| !c.ok)
    }
}

/// Deterministic capacity check: for every phase `p` and receiver `j >= p`,
/// the unknown bits (nominal accounting) must fit
/// `margin * beta_p * n * F (1 - delta_j)` plus the phase's recorded integer
/// rounding slack.
pub fn verify_schedule(schedule: &PhaseSchedule, cfg: &SystemConfig, margin: f64) -> Result<VerifyReport> {
    if !(margin > 0.0 && margin <= 1.0) {
        return Err(Error::Domain(format!("margin {margin} outside (0, 1]")));
    }
    let caps = cfg.capacities();
    let n = schedule.n as f64;
    let mut checks = Vec::new();
    for phase in &schedule.phases {
        let p = phase.index;
        for j in p..=cfg.receivers {
            let unknown = unknown_bits(schedule, p, j, Accounting::Nominal);
            let capacity = margin * phase.beta * n * caps[j - 1];
            let tol = VERIFY_TOL * n * f64::from(cfg.packet_bits);
            let ok = unknown as f64 <= capacity + phase.rounding_slack_bits as f64 + tol;
            checks.push(PhaseCheck {
                phase: p,
                receiver: j,
                unknown_bits: unknown,
                capacity_bits: capacity,
                rounding_slack_bits: phase.rounding_slack_bits,
                ok,
            });
        }
    }
    Ok(VerifyReport {
        ok: checks.iter().all(|c| c.ok),
        margin,
        checks,
    })
}

impl PhaseSchedule {
    /// Check that receiver `k` can rebuild its whole file from its cache
    /// and items of phases `1..=k`, with no bit delivered twice.
    pub fn coverage_holds(&self, layout: &SubMessageLayout, k: usize) -> bool {
        let mut seen: Vec<Vec<u8>> = layout.lengths.iter().map(|&l| vec![0u8; l]).collect();
        for i in 1..=layout.tau() + 1 {
            if layout.is_cached_at(i, k) {
                seen[i - 1].iter_mut().for_each(|s| *s += 1);
            }
        }
        for phase in self.phases.iter().filter(|p| p.index <= k) {
            for item in &phase.items {
                for (pos, c) in item.constituents.iter().enumerate() {
                    if c.for_receiver != k {
                        continue;
                    }
                    // the other constituents must be in k's cache
                    let solvable = item
                        .constituents
                        .iter()
                        .enumerate()
                        .all(|(q, o)| q == pos || layout.is_cached_at(o.sub_message, k));
                    if !solvable {
                        return false;
                    }
                    for b in c.range.clone() {
                        seen[c.sub_message - 1][b] += 1;
                    }
                }
            }
        }
        seen.iter().flatten().all(|&s| s == 1)
    }
}
