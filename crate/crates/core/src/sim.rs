//! Monte Carlo runs of the whole chain: library, placement, schedule,
//! codec, channel, decoding and bit-exact comparison.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Write;
use std::str::FromStr;
use std::time::Instant;

use crate::bits::BitString;
use crate::channel;
use crate::codec::{self, Decoder, DEFAULT_SLACK};
use crate::error::{Error, Result};
use crate::model::{bits_at, DemandSet, DemandTuple, SystemConfig};
use crate::placement::{
    build_caches, build_prefix_caches, Library, Pattern, ReceiverCache, SubMessageLayout,
};
use crate::regions::common::CacheAllocation;
use crate::regions::phase_lp::solve_pattern;
use crate::regions::{
    common_demand_contains, two_rx_joint_rate, two_rx_separate_asym_rate, two_rx_symmetric_rate,
    SchemeParameters,
};
use crate::schedule::{build_schedule, verify_schedule, PayloadItem, PhaseSchedule};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Symmetric2rx,
    SeparateAsym2rx,
    Joint2rx,
    General,
    CommonDemand,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::Symmetric2rx,
        Scheme::SeparateAsym2rx,
        Scheme::Joint2rx,
        Scheme::General,
        Scheme::CommonDemand,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Symmetric2rx => "symmetric-2rx",
            Scheme::SeparateAsym2rx => "separate-asym-2rx",
            Scheme::Joint2rx => "joint-2rx",
            Scheme::General => "general",
            Scheme::CommonDemand => "common-demand",
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::config("scheme", format!("unknown scheme {s:?}")))
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// What a trial actually runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PlanKind {
    Subset {
        params: SchemeParameters,
        layout: SubMessageLayout,
    },
    Common {
        /// Operating rate of each file.
        rates: Vec<f64>,
        allocation: CacheAllocation,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Plan {
    pub scheme: Scheme,
    pub backoff: f64,
    /// Analytical rate of the scheme (per file; for common demand the
    /// configured rates are the nominal point).
    pub nominal_rate: f64,
    pub operating_rate: f64,
    pub kind: PlanKind,
}

/// The scheme parameter `M` of a two-receiver scheme: the symmetric scheme
/// caches `M` at both receivers, the asymmetric ones `2M` at receiver 1.
fn two_rx_memory(cfg: &SystemConfig, scheme: Scheme) -> Result<f64> {
    if cfg.receivers != 2 {
        return Err(Error::config("K", format!("{scheme} needs K = 2")));
    }
    if scheme == Scheme::Symmetric2rx {
        if (cfg.memories[0] - cfg.memories[1]).abs() > 1e-12 {
            return Err(Error::config("memories", "symmetric-2rx caches M at both receivers"));
        }
        Ok(cfg.memories[0])
    } else {
        if cfg.memories[1] != 0.0 {
            return Err(Error::config("memories", format!("{scheme} caches (2M, 0)")));
        }
        Ok(cfg.memories[0] / 2.0)
    }
}

/// Cache budgets a two-receiver scheme uses for parameter `M`.
pub fn two_rx_memories(scheme: Scheme, m: f64) -> Vec<f64> {
    match scheme {
        Scheme::Symmetric2rx => vec![m, m],
        _ => vec![2.0 * m, 0.0],
    }
}

/// Equal-cache prefix: receivers `1..=K0` hold `M`, the rest nothing.
fn cached_prefix(cfg: &SystemConfig) -> Result<(usize, f64)> {
    let k0 = cfg.memories.iter().take_while(|m| **m > 0.0).count();
    if k0 == 0 {
        return Ok((1, 0.0));
    }
    let m = cfg.memories[0];
    if cfg.memories[..k0].iter().any(|x| (x - m).abs() > 1e-12)
        || cfg.memories[k0..].iter().any(|x| *x != 0.0)
    {
        return Err(Error::config(
            "memories",
            "general scheme needs M on receivers 1..K0 and 0 elsewhere",
        ));
    }
    Ok((k0, m))
}

/// Best equal-cache subset scheme for the configured memories.
pub fn general_solution(cfg: &SystemConfig) -> Result<crate::regions::PhaseLpSolution> {
    let (k0, m) = cached_prefix(cfg)?;
    let ts: Vec<usize> = if k0 == 1 { vec![1] } else { (1..k0).collect() };
    let mut best: Option<crate::regions::PhaseLpSolution> = None;
    for t in ts {
        let sol = solve_pattern(cfg, Pattern::new(k0, t)?, m, true)?;
        if best.as_ref().is_none_or(|b| sol.rate > b.rate + 1e-9) {
            best = Some(sol);
        }
    }
    Ok(best.expect("at least one t"))
}

/// Fix the scheme's operating point. `backoff` multiplies the nominal rate;
/// up to 1 the whole LP point (rate, cached pieces, piggyback) is scaled,
/// above 1 only the uncached part grows.
pub fn prepare(cfg: &SystemConfig, scheme: Scheme, backoff: f64) -> Result<Plan> {
    if !(backoff.is_finite() && backoff > 0.0) {
        return Err(Error::config("backoff", "must be positive"));
    }
    let shrink = backoff.min(1.0);
    let (f, d) = (cfg.packet_bits, cfg.library_size);
    let subset = |nominal: f64, pattern: Pattern, memory: f64, piggyback: bool| -> Result<Plan> {
        let sol = solve_pattern(cfg, pattern, memory, piggyback)?;
        if (sol.rate - nominal).abs() > 1e-6 * nominal.max(1.0) {
            return Err(Error::Domain(format!(
                "phase LP gives {} but the scheme's rate is {nominal}",
                sol.rate
            )));
        }
        let mut params = sol.params.clone();
        params.piggyback.iter_mut().flatten().for_each(|c| *c *= shrink);
        let rate = nominal * backoff;
        let layout = SubMessageLayout::new(pattern, d, cfg.n, rate, sol.memory_used * shrink)?;
        Ok(Plan {
            scheme,
            backoff,
            nominal_rate: nominal,
            operating_rate: rate,
            kind: PlanKind::Subset { params, layout },
        })
    };
    match scheme {
        Scheme::Symmetric2rx => {
            let m = two_rx_memory(cfg, scheme)?;
            let r = two_rx_symmetric_rate(cfg.deltas[0], cfg.deltas[1], f, d, m)?;
            subset(r, Pattern::new(2, 1)?, m, false)
        }
        Scheme::SeparateAsym2rx => {
            let m = two_rx_memory(cfg, scheme)?;
            let r = two_rx_separate_asym_rate(cfg.deltas[0], cfg.deltas[1], f, d, m)?;
            subset(r, Pattern::new(1, 1)?, 2.0 * m, false)
        }
        Scheme::Joint2rx => {
            let m = two_rx_memory(cfg, scheme)?;
            let (r, _) = two_rx_joint_rate(cfg.deltas[0], cfg.deltas[1], f, d, m)?;
            subset(r, Pattern::new(1, 1)?, 2.0 * m, true)
        }
        Scheme::General => {
            let sol = general_solution(cfg)?;
            let (_, m) = cached_prefix(cfg)?;
            subset(sol.rate, sol.params.pattern(), m, true)
        }
        Scheme::CommonDemand => {
            let verdict = common_demand_contains(cfg, &cfg.rates, &cfg.memories)?;
            let witness = verdict.witness.ok_or_else(|| {
                Error::config("rates", "configured rates lie outside the common-demand region")
            })?;
            let allocation = CacheAllocation {
                rows: witness
                    .rows
                    .iter()
                    .map(|r| r.iter().map(|x| x * shrink).collect())
                    .collect(),
            };
            let rates: Vec<f64> = cfg.rates.iter().map(|r| r * backoff).collect();
            let top = cfg.rates.iter().copied().fold(0.0, f64::max);
            Ok(Plan {
                scheme,
                backoff,
                nominal_rate: top,
                operating_rate: top * backoff,
                kind: PlanKind::Common { rates, allocation },
            })
        }
    }
}

impl Plan {
    /// Demands the scheme serves under `cfg`.
    pub fn demand_set(&self, cfg: &SystemConfig) -> DemandSet {
        match self.kind {
            PlanKind::Common { .. } => DemandSet::Common,
            PlanKind::Subset { .. } => cfg.demand_set.clone(),
        }
    }

    pub fn schedule(&self, cfg: &SystemConfig, demand: &DemandTuple) -> Result<Option<PhaseSchedule>> {
        match &self.kind {
            PlanKind::Subset { params, layout } => {
                Ok(Some(build_schedule(cfg, params, layout, demand)?))
            }
            PlanKind::Common { .. } => Ok(None),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialOutcome {
    /// `success[k-1]`: receiver `k` rebuilt its file bit-exactly.
    pub success: Vec<bool>,
    /// Largest rank deficit met by each receiver over its phases.
    pub rank_deficit: Vec<usize>,
}

impl TrialOutcome {
    pub fn all_ok(&self) -> bool {
        self.success.iter().all(|s| *s)
    }
}

fn to_blocks(bits: &BitString, f: u32) -> Vec<u64> {
    let mask = if f == 64 { u64::MAX } else { (1u64 << f) - 1 };
    bits.to_blocks(f).into_iter().map(|b| b & mask).collect()
}

/// An item as far as receiver `cache` can compute it, if it can.
fn item_from_cache(item: &PayloadItem, cache: &ReceiverCache) -> Option<BitString> {
    let mut out = BitString::zeros(item.bits);
    for c in &item.constituents {
        let sub = cache.sub_message(c.message, c.sub_message)?;
        out.xor_assign(&sub.slice(c.range.clone()));
    }
    Some(out)
}

/// Run one trial: every receiver decodes the phases meant for it using only
/// its cache and its channel output.
pub fn run_trial(cfg: &SystemConfig, plan: &Plan, demand: &DemandTuple, trial_seed: u64) -> Result<TrialOutcome> {
    DemandTuple::new(demand.0.clone(), cfg.library_size)?;
    if demand.len() != cfg.receivers {
        return Err(Error::Domain("demand must have K entries".into()));
    }
    match &plan.kind {
        PlanKind::Subset { params, layout } => subset_trial(cfg, params, layout, demand, trial_seed),
        PlanKind::Common { rates, allocation } => common_trial(cfg, rates, allocation, demand, trial_seed),
    }
}

fn subset_trial(
    cfg: &SystemConfig,
    params: &SchemeParameters,
    layout: &SubMessageLayout,
    demand: &DemandTuple,
    trial_seed: u64,
) -> Result<TrialOutcome> {
    let f = cfg.packet_bits;
    let big_k = cfg.receivers;
    let mut rng = seed::rng_at(seed::derive(&[trial_seed, 0]), 0, 0);
    let library = Library::random(&vec![layout.message_len(); cfg.library_size], &mut rng);
    let caches = build_caches(&library, layout, &cfg.memories)?;
    let schedule = build_schedule(cfg, params, layout, demand)?;
    let channel_seed = seed::derive(&[trial_seed, 1]);
    let code_seed = seed::derive(&[trial_seed, 2]);

    // decoded[k-1][p-1]: items of phase p as decoded by receiver k
    let mut decoded: Vec<Vec<Option<Vec<BitString>>>> = vec![Vec::new(); big_k];
    let mut deficit = vec![0usize; big_k];
    for phase in &schedule.phases {
        let p = phase.index;
        let mut offsets = Vec::with_capacity(phase.items.len());
        let mut blocks = Vec::new();
        for item in &phase.items {
            offsets.push(blocks.len());
            blocks.extend(to_blocks(&item.render(&library, layout), f));
        }
        let packets = codec::encode(&blocks, phase.budget, p as u64, code_seed);
        let payloads: Vec<u64> = packets.iter().map(|pk| pk.payload).collect();
        let realization = if payloads.is_empty() {
            None
        } else {
            Some(channel::transmit(&payloads, &cfg.deltas, channel_seed, p as u64)?)
        };
        for k in p..=big_k {
            let cache = caches.of(k);
            let mut known = BTreeMap::new();
            for (item, &off) in phase.items.iter().zip(&offsets) {
                if item.known_to.contains(&k) {
                    let bits = item_from_cache(item, cache).expect("known item is cached");
                    for (j, b) in to_blocks(&bits, f).into_iter().enumerate() {
                        known.insert(off + j, b);
                    }
                }
            }
            let mut dec = Decoder::new(blocks.len(), known);
            if let Some(r) = &realization {
                for (pk, out) in packets.iter().zip(&r.outputs[k - 1]) {
                    if dec.is_complete() {
                        break;
                    }
                    if out.is_some() {
                        dec.push(pk);
                    }
                }
            }
            let items = match dec.finish() {
                Ok(all) => Some(
                    phase
                        .items
                        .iter()
                        .zip(&offsets)
                        .map(|(item, &off)| {
                            let nb = item.bits.div_ceil(f as usize);
                            BitString::from_blocks(&all[off..off + nb], f, item.bits)
                        })
                        .collect(),
                ),
                Err(e) => {
                    deficit[k - 1] = deficit[k - 1].max(e.rank_deficit);
                    None
                }
            };
            decoded[k - 1].push(items);
        }
    }

    let success = (1..=big_k)
        .map(|k| {
            let cache = caches.of(k);
            let d = demand.of(k);
            let mut rebuilt = BitString::zeros(layout.message_len());
            let mut filled = vec![false; layout.message_len()];
            for i in 1..=layout.tau() + 1 {
                if let Some(bits) = cache.sub_message(d, i) {
                    let off = layout.offset_of(i);
                    rebuilt.write_at(off, bits);
                    filled[off..off + bits.len()].iter_mut().for_each(|x| *x = true);
                }
            }
            for (phase, items) in schedule.phases.iter().zip(&decoded[k - 1]) {
                let Some(items) = items else {
                    return false;
                };
                for (item, value) in phase.items.iter().zip(items) {
                    for (pos, c) in item.constituents.iter().enumerate() {
                        if c.for_receiver != k {
                            continue;
                        }
                        let mut bits = value.clone();
                        for (q, o) in item.constituents.iter().enumerate() {
                            if q == pos {
                                continue;
                            }
                            match cache.sub_message(o.message, o.sub_message) {
                                Some(sub) => bits.xor_assign(&sub.slice(o.range.clone())),
                                None => return false,
                            }
                        }
                        let off = layout.offset_of(c.sub_message) + c.range.start;
                        rebuilt.write_at(off, &bits);
                        filled[off..off + bits.len()].iter_mut().for_each(|x| *x = true);
                    }
                }
            }
            filled.iter().all(|x| *x) && &rebuilt == library.message(d)
        })
        .collect();
    Ok(TrialOutcome {
        success,
        rank_deficit: deficit,
    })
}

fn common_trial(
    cfg: &SystemConfig,
    rates: &[f64],
    allocation: &CacheAllocation,
    demand: &DemandTuple,
    trial_seed: u64,
) -> Result<TrialOutcome> {
    let d = demand.of(1);
    if demand.0.iter().any(|&x| x != d) {
        return Err(Error::Domain("common-demand scheme needs one file for all".into()));
    }
    let f = cfg.packet_bits;
    let fu = f as usize;
    let lengths: Vec<usize> = rates.iter().map(|&r| bits_at(cfg.n, r)).collect();
    let mut rng = seed::rng_at(seed::derive(&[trial_seed, 0]), 0, 0);
    let library = Library::random(&lengths, &mut rng);
    let caches = build_prefix_caches(&library, allocation, &cfg.memories, cfg.n)?;
    let message = library.message(d);
    let blocks = to_blocks(message, f);
    let packets = codec::encode(&blocks, cfg.n, 1, seed::derive(&[trial_seed, 2]));
    let payloads: Vec<u64> = packets.iter().map(|pk| pk.payload).collect();
    let realization = channel::transmit(&payloads, &cfg.deltas, seed::derive(&[trial_seed, 1]), 1)?;
    let mut success = Vec::with_capacity(cfg.receivers);
    let mut deficit = Vec::with_capacity(cfg.receivers);
    for k in 1..=cfg.receivers {
        let prefix = caches.of(k).prefix(d);
        let known: BTreeMap<usize, u64> = match prefix {
            Some(bits) => to_blocks(bits, f)
                .into_iter()
                .enumerate()
                .take(bits.len() / fu)
                .collect(),
            None => BTreeMap::new(),
        };
        let mut dec = Decoder::new(blocks.len(), known);
        for (pk, out) in packets.iter().zip(&realization.outputs[k - 1]) {
            if dec.is_complete() {
                break;
            }
            if out.is_some() {
                dec.push(pk);
            }
        }
        match dec.finish() {
            Ok(all) => {
                success.push(&BitString::from_blocks(&all, f, message.len()) == message);
                deficit.push(0);
            }
            Err(e) => {
                success.push(false);
                deficit.push(e.rank_deficit);
            }
        }
    }
    Ok(TrialOutcome {
        success,
        rank_deficit: deficit,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimOptions {
    pub trials: usize,
    pub seed: u64,
    /// Enumerate demands up to this many, otherwise sample.
    pub demand_cap: u128,
    /// Codec packet slack expected to be covered by the backoff.
    pub slack: usize,
    /// Record wall-clock time in the report.
    pub timing: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            trials: 200,
            seed: 0,
            demand_cap: 64,
            slack: DEFAULT_SLACK,
            timing: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemandStats {
    pub demand: DemandTuple,
    pub trials: usize,
    /// Failures of receiver `k` at index `k-1`.
    pub failures: Vec<usize>,
    /// Trials with at least one failed receiver.
    pub any_failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseSpare {
    pub phase: usize,
    /// Phase blocks receiver `j` must solve for, worst `j >= phase`.
    pub unknown_blocks: usize,
    /// Expected unerased packets minus unknown blocks at that receiver.
    pub expected_spare_packets: f64,
    pub slack_absorbed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub config: SystemConfig,
    pub scheme: Scheme,
    pub backoff: f64,
    pub nominal_rate: f64,
    pub operating_rate: f64,
    pub trials: usize,
    pub base_seed: u64,
    /// How trial seeds are formed.
    pub seed_rule: &'static str,
    pub demands_enumerated: bool,
    pub per_demand: Vec<DemandStats>,
    /// Failures per receiver over all trials.
    pub receiver_failures: Vec<usize>,
    pub pe_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Deterministic capacity check of the first demand's schedule at
    /// margin `min(backoff, 1)`; absent for common demand.
    pub verified_at_margin: Option<bool>,
    pub codec_slack: usize,
    /// Coding headroom per phase for the first demand.
    pub phase_spare: Vec<PhaseSpare>,
    pub wall_clock_ms: Option<f64>,
}

/// Wilson score interval at 95%.
pub fn wilson_interval(failures: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054_f64;
    let n = trials as f64;
    let p = failures as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    let lo = if failures == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if failures == trials { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

fn phase_spare(cfg: &SystemConfig, schedule: &PhaseSchedule, slack: usize) -> Vec<PhaseSpare> {
    let f = cfg.packet_bits as usize;
    schedule
        .phases
        .iter()
        .map(|phase| {
            let p = phase.index;
            let (unknown, spare) = (p..=cfg.receivers)
                .map(|j| {
                    let u: usize = phase
                        .items
                        .iter()
                        .filter(|i| !i.known_to.contains(&j))
                        .map(|i| i.bits.div_ceil(f))
                        .sum();
                    (u, phase.budget as f64 * (1.0 - cfg.deltas[j - 1]) - u as f64)
                })
                .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
            PhaseSpare {
                phase: p,
                unknown_blocks: unknown,
                expected_spare_packets: spare,
                slack_absorbed: spare >= slack as f64,
            }
        })
        .collect()
}

/// Estimate the probability that some receiver fails, over the plan's
/// demand set. Trial `j` runs demand `j mod |D|` (or a sampled one) with
/// seed `(base, demand index, j)`.
pub fn estimate_pe(cfg: &SystemConfig, plan: &Plan, opts: &SimOptions) -> Result<SimulationReport> {
    if opts.trials == 0 {
        return Err(Error::config("trials", "must be at least 1"));
    }
    let start = Instant::now();
    let set = plan.demand_set(cfg);
    let total = set.len(cfg.receivers, cfg.library_size);
    let enumerate = total <= opts.demand_cap;
    let pick = |j: usize| -> u128 {
        if enumerate {
            j as u128 % total
        } else {
            let mut rng = seed::rng_at(seed::derive(&[opts.seed, u64::MAX, j as u64]), 0, 0);
            rng.random_range(0..total)
        }
    };
    let outcomes: Vec<(u128, TrialOutcome)> = (0..opts.trials)
        .into_par_iter()
        .map(|j| {
            let idx = pick(j);
            let demand = set.nth(idx, cfg.receivers, cfg.library_size);
            let s = seed::derive(&[opts.seed, idx as u64, j as u64]);
            run_trial(cfg, plan, &demand, s).map(|o| (idx, o))
        })
        .collect::<Result<_>>()?;

    let mut per: BTreeMap<u128, DemandStats> = BTreeMap::new();
    let mut receiver_failures = vec![0; cfg.receivers];
    let mut any = 0;
    for (idx, o) in &outcomes {
        let entry = per.entry(*idx).or_insert_with(|| DemandStats {
            demand: set.nth(*idx, cfg.receivers, cfg.library_size),
            trials: 0,
            failures: vec![0; cfg.receivers],
            any_failures: 0,
        });
        entry.trials += 1;
        for (k, ok) in o.success.iter().enumerate() {
            if !ok {
                entry.failures[k] += 1;
                receiver_failures[k] += 1;
            }
        }
        if !o.all_ok() {
            entry.any_failures += 1;
            any += 1;
        }
    }
    let (ci_lo, ci_hi) = wilson_interval(any, opts.trials);
    let first = set.nth(pick(0), cfg.receivers, cfg.library_size);
    let (verified, spare) = match plan.schedule(cfg, &first)? {
        Some(s) => (
            Some(verify_schedule(&s, cfg, plan.backoff.min(1.0))?.ok),
            phase_spare(cfg, &s, opts.slack),
        ),
        None => (None, Vec::new()),
    };
    Ok(SimulationReport {
        config: cfg.clone(),
        scheme: plan.scheme,
        backoff: plan.backoff,
        nominal_rate: plan.nominal_rate,
        operating_rate: plan.operating_rate,
        trials: opts.trials,
        base_seed: opts.seed,
        seed_rule: "derive(base_seed, demand_index, trial_index)",
        demands_enumerated: enumerate,
        per_demand: per.into_values().collect(),
        receiver_failures,
        pe_hat: any as f64 / opts.trials as f64,
        ci_lo,
        ci_hi,
        verified_at_margin: verified,
        codec_slack: opts.slack,
        phase_spare: spare,
        wall_clock_ms: opts.timing.then(|| start.elapsed().as_secs_f64() * 1e3),
    })
}

/// Analytical per-file rate of `scheme` at memory parameter `memory`: the
/// two-receiver schemes read it as their `M`, the general scheme gives it to
/// every caching receiver, common demand to every receiver. `None` when the
/// scheme's formula does not apply there.
pub fn analytical_rate(cfg: &SystemConfig, scheme: Scheme, memory: f64) -> Result<Option<f64>> {
    let (f, d) = (cfg.packet_bits, cfg.library_size);
    let two = || -> Result<()> {
        if cfg.receivers != 2 {
            return Err(Error::config("K", format!("{scheme} needs K = 2")));
        }
        Ok(())
    };
    let out = match scheme {
        Scheme::Symmetric2rx => {
            two()?;
            two_rx_symmetric_rate(cfg.deltas[0], cfg.deltas[1], f, d, memory)
        }
        Scheme::SeparateAsym2rx => {
            two()?;
            two_rx_separate_asym_rate(cfg.deltas[0], cfg.deltas[1], f, d, memory)
        }
        Scheme::Joint2rx => {
            two()?;
            two_rx_joint_rate(cfg.deltas[0], cfg.deltas[1], f, d, memory).map(|x| x.0)
        }
        Scheme::General => {
            let k0 = cfg.memories.iter().take_while(|m| **m > 0.0).count().max(1);
            let mut c = cfg.clone();
            for (k, m) in c.memories.iter_mut().enumerate() {
                *m = if k < k0 { memory } else { 0.0 };
            }
            if memory == 0.0 {
                c.memories[0] = 0.0;
            }
            general_solution(&c).map(|s| s.rate)
        }
        Scheme::CommonDemand => Ok(cfg
            .capacities()
            .iter()
            .map(|a| a + memory / d as f64)
            .fold(f64::INFINITY, f64::min)),
    };
    match out {
        Ok(r) => Ok(Some(r)),
        Err(Error::OutOfRegime(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub memory: f64,
    pub scheme: Scheme,
    pub rate: Option<f64>,
    pub pe_hat: Option<f64>,
    pub ci_lo: Option<f64>,
    pub ci_hi: Option<f64>,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
}

/// Evaluate each scheme on each memory value. With `sim`, every in-regime
/// point is also simulated at `backoff`.
pub fn sweep(
    cfg: &SystemConfig,
    schemes: &[Scheme],
    grid: &[f64],
    sim: Option<(&SimOptions, f64)>,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &memory in grid {
        for &scheme in schemes {
            let rate = analytical_rate(cfg, scheme, memory)?;
            let mut row = SweepRow {
                memory,
                scheme,
                rate,
                pe_hat: None,
                ci_lo: None,
                ci_hi: None,
                n: cfg.n,
                trials: 0,
                seed: 0,
            };
            if let (Some((opts, backoff)), Some(r)) = (sim, rate) {
                let mut c = cfg.clone();
                match scheme {
                    Scheme::CommonDemand => {
                        c.memories = vec![memory; c.receivers];
                        c.rates = vec![r; c.library_size];
                    }
                    Scheme::General => {
                        let k0 = cfg.memories.iter().take_while(|m| **m > 0.0).count().max(1);
                        for (k, m) in c.memories.iter_mut().enumerate() {
                            *m = if k < k0 { memory } else { 0.0 };
                        }
                    }
                    _ => c.memories = two_rx_memories(scheme, memory),
                }
                let plan = prepare(&c, scheme, backoff)?;
                let report = estimate_pe(&c, &plan, opts)?;
                row.pe_hat = Some(report.pe_hat);
                row.ci_lo = Some(report.ci_lo);
                row.ci_hi = Some(report.ci_hi);
                row.trials = opts.trials;
                row.seed = opts.seed;
            }
            rows.push(row);
        }
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let opt = |x: Option<f64>| x.map(|v| format!("{v}")).unwrap_or_default();
    let mut out = String::from("M,scheme,R_analytical,pe_hat,ci_lo,ci_hi,n,trials,seed\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.memory,
            r.scheme,
            opt(r.rate),
            opt(r.pe_hat),
            opt(r.ci_lo),
            opt(r.ci_hi),
            r.n,
            r.trials,
            r.seed
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_rx(deltas: [f64; 2], f: u32, d: usize, m: f64, n: usize) -> SystemConfig {
        SystemConfig {
            receivers: 2,
            library_size: d,
            packet_bits: f,
            deltas: deltas.to_vec(),
            rates: vec![0.0; d],
            memories: vec![m, m],
            n,
            demand_set: DemandSet::FullProduct,
        }
    }

    #[test]
    fn noiseless_always_decodes() {
        // enough spare packets per phase to cover the GF(2) rank slack
        let mut cfg = two_rx([0.0, 0.0], 8, 3, 1.2, 3000);
        for scheme in [Scheme::Symmetric2rx, Scheme::SeparateAsym2rx, Scheme::Joint2rx] {
            cfg.memories = two_rx_memories(scheme, 0.6);
            let plan = prepare(&cfg, scheme, 0.9).unwrap();
            for s in 0..4 {
                let o = run_trial(&cfg, &plan, &DemandTuple(vec![1, 3]), s).unwrap();
                assert!(o.all_ok(), "{scheme} {o:?}");
            }
        }
    }

    #[test]
    fn zero_rate_vacuous() {
        let mut cfg = two_rx([0.5, 0.2], 4, 2, 0.0, 200);
        cfg.rates = vec![0.0, 0.0];
        cfg.memories = vec![0.0, 0.0];
        let plan = prepare(&cfg, Scheme::CommonDemand, 1.0).unwrap();
        let o = run_trial(&cfg, &plan, &DemandTuple(vec![2, 2]), 1).unwrap();
        assert!(o.all_ok());
    }

    #[test]
    fn duplicate_demands_decode() {
        let cfg = two_rx([0.3, 0.1], 8, 3, 0.9, 400);
        let plan = prepare(&cfg, Scheme::Symmetric2rx, 0.8).unwrap();
        let o = run_trial(&cfg, &plan, &DemandTuple(vec![2, 2]), 5).unwrap();
        assert!(o.all_ok(), "{o:?}");
    }

    #[test]
    fn report_reproducible() {
        let mut cfg = two_rx([0.5, 0.1], 8, 2, 0.4, 300);
        cfg.memories = two_rx_memories(Scheme::Joint2rx, 0.2);
        let plan = prepare(&cfg, Scheme::Joint2rx, 0.85).unwrap();
        let opts = SimOptions {
            trials: 12,
            seed: 3,
            ..SimOptions::default()
        };
        let a = estimate_pe(&cfg, &plan, &opts).unwrap();
        let b = estimate_pe(&cfg, &plan, &opts).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.per_demand.len(), 4);
        assert!(a.pe_hat >= 0.0 && a.pe_hat <= 1.0);
        assert!(a.ci_lo <= a.pe_hat && a.pe_hat <= a.ci_hi);
    }

    #[test]
    fn wilson_known_values() {
        let (lo, hi) = wilson_interval(0, 100);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.036_995).abs() < 1e-5);
        let (lo, hi) = wilson_interval(50, 100);
        assert!((lo - 0.403_832).abs() < 1e-5 && (hi - 0.596_168).abs() < 1e-5);
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        assert!("bogus".parse::<Scheme>().is_err());
    }

    #[test]
    fn sweep_zero_memory_column_agrees() {
        let cfg = two_rx([0.8, 0.2], 1, 10, 0.0, 1000);
        let rows = sweep(&cfg, &[Scheme::Symmetric2rx, Scheme::SeparateAsym2rx, Scheme::Joint2rx], &[0.0], None).unwrap();
        let rates: Vec<f64> = rows.iter().map(|r| r.rate.unwrap()).collect();
        assert!(rates.iter().all(|r| (r - rates[0]).abs() < 1e-12));
        let csv = sweep_csv(&rows);
        assert!(csv.starts_with("M,scheme,R_analytical"));
        assert_eq!(csv.lines().count(), 4);
    }
}
