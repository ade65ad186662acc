//! Command-line verbs. [`execute`] returns the exit code and the stdout
//! payload so the binary only parses, prints and exits.
//!
//! Exit codes: 0 success, 1 a negative verdict (point outside the region,
//! schedule over budget), 2 usage or configuration error.

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::model::{bits_at, DemandSet, DemandTuple, SystemConfig};
use crate::regions::{
    common_demand_contains, common_demand_separate_contains, degraded_region_check,
    general_max_symmetric_rate, phase_lp_max_rate, two_rx_joint_rate, two_rx_separate_asym_rate,
    two_rx_symmetric_rate, unequal_cache_max_rate, DegradedRateTuple,
};
use crate::schedule::verify_schedule;
use crate::sim::{estimate_pe, prepare, sweep, sweep_csv, PlanKind, Scheme, SimOptions};

/// Environment variable holding the default worker thread count.
pub const THREADS_ENV: &str = "CACHE_CHANNEL_THREADS";

#[derive(Debug, Parser)]
#[command(name = "cache-channel", version, about = "Joint cache-channel coding over erasure broadcast channels")]
pub struct Cli {
    /// System configuration (JSON). Defaults to the two-receiver example.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Test a rate-memory point against a region.
    RegionCheck(RegionCheck),
    /// Tabulate analytical rates (and optionally simulations) over a memory grid.
    RegionSweep(RegionSweep),
    /// Optimize scheme parameters for the configured caches.
    Optimize(Optimize),
    /// Show what every receiver caches.
    PlacementShow(PlanArgs),
    /// Show and verify the delivery schedule for one demand.
    ScheduleShow(ScheduleShow),
    /// Estimate the error probability by Monte Carlo.
    Simulate(Simulate),
}

#[derive(Debug, Args)]
pub struct RegionCheck {
    /// degraded, symmetric-2rx, separate-asym-2rx, joint-2rx, general,
    /// unequal, common or common-separate.
    #[arg(long)]
    pub scheme: String,
    /// Comma-separated rates (one per file, one per level for `degraded`,
    /// a single `R` for the equal-rate schemes).
    #[arg(long, value_delimiter = ',')]
    pub rates: Vec<f64>,
    /// Comma-separated memories (one per receiver, a single `M` for the
    /// two-receiver and general schemes). Defaults to the config.
    #[arg(long, value_delimiter = ',')]
    pub memories: Option<Vec<f64>>,
    /// Cached receivers for `general` (default: receivers with nonzero memory).
    #[arg(long)]
    pub k0: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RegionSweep {
    /// `all` (the three two-receiver schemes) or a comma-separated list.
    #[arg(long, default_value = "all")]
    pub scheme: String,
    /// `start:step:stop`, inclusive.
    #[arg(long, default_value = "0:0.5:5")]
    pub grid: String,
    /// Also simulate each point at `--backoff`.
    #[arg(long)]
    pub simulate: bool,
    #[arg(long, default_value_t = 0.9)]
    pub backoff: f64,
    #[command(flatten)]
    pub sim: SimFlags,
}

#[derive(Debug, Args)]
pub struct Optimize {
    /// Cached receivers (default: receivers with nonzero memory).
    #[arg(long)]
    pub k0: Option<usize>,
    /// Per-receiver memory of the cached receivers (default: from config).
    #[arg(long)]
    pub memory: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[arg(long, default_value = "joint-2rx")]
    pub scheme: String,
    #[arg(long, default_value_t = 1.0)]
    pub backoff: f64,
}

#[derive(Debug, Args)]
pub struct ScheduleShow {
    #[command(flatten)]
    pub plan: PlanArgs,
    /// Comma-separated demand, one file per receiver (1-based).
    #[arg(long, value_delimiter = ',')]
    pub demand: Vec<usize>,
    /// Capacity margin for verification, in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    pub margin: f64,
}

#[derive(Debug, Args)]
pub struct SimFlags {
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Enumerate all demands when there are at most this many.
    #[arg(long, default_value_t = 64)]
    pub demand_cap: u128,
    /// Codec packet slack reported against each phase's headroom.
    #[arg(long, default_value_t = crate::codec::DEFAULT_SLACK)]
    pub slack: usize,
    /// Include wall-clock time in the report (breaks byte-identical output).
    #[arg(long)]
    pub timing: bool,
}

impl SimFlags {
    fn options(&self) -> SimOptions {
        SimOptions {
            trials: self.trials,
            seed: self.seed,
            demand_cap: self.demand_cap,
            slack: self.slack,
            timing: self.timing,
        }
    }
}

#[derive(Debug, Args)]
pub struct Simulate {
    #[arg(long, default_value = "joint-2rx")]
    pub scheme: String,
    #[arg(long, default_value_t = 0.9)]
    pub backoff: f64,
    #[command(flatten)]
    pub sim: SimFlags,
}

/// The built-in configuration: two receivers with erasure probabilities
/// 4/5 and 1/5, ten files, `F = 1`, receiver 1 caching 2 bits per use.
pub fn default_config() -> SystemConfig {
    SystemConfig {
        receivers: 2,
        library_size: 10,
        packet_bits: 1,
        deltas: vec![0.8, 0.2],
        rates: vec![0.5; 10],
        memories: vec![2.0, 0.0],
        n: 4000,
        demand_set: DemandSet::FullProduct,
    }
}

pub fn load_config(path: Option<&PathBuf>) -> Result<SystemConfig> {
    match path {
        Some(p) => SystemConfig::load(p),
        None => Ok(default_config()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub code: i32,
    pub stdout: String,
}

fn json_out<T: Serialize>(code: i32, value: &T) -> Output {
    Output {
        code,
        stdout: serde_json::to_string_pretty(value).expect("serializable") + "\n",
    }
}

/// Run a parsed command. Errors map to exit code 2 in the binary.
pub fn execute(cli: &Cli) -> Result<Output> {
    let cfg = load_config(cli.config.as_ref())?;
    match &cli.command {
        Command::RegionCheck(c) => region_check(&cfg, c),
        Command::RegionSweep(c) => region_sweep(&cfg, c),
        Command::Optimize(c) => optimize(&cfg, c),
        Command::PlacementShow(c) => placement_show(&cfg, c),
        Command::ScheduleShow(c) => schedule_show(&cfg, c),
        Command::Simulate(c) => simulate(&cfg, c),
    }
}

fn single(values: &[f64], what: &'static str) -> Result<f64> {
    match values {
        [x] => Ok(*x),
        _ => Err(Error::config(what, "expected a single value")),
    }
}

fn verdict(inside: bool, body: Value) -> Output {
    let mut body = body;
    body["inside"] = json!(inside);
    json_out(if inside { 0 } else { 1 }, &body)
}

fn region_check(cfg: &SystemConfig, c: &RegionCheck) -> Result<Output> {
    let memories = c.memories.clone().unwrap_or_else(|| cfg.memories.clone());
    let (d1, d2, f, d) = (
        cfg.deltas[0],
        cfg.deltas.get(1).copied().unwrap_or(0.0),
        cfg.packet_bits,
        cfg.library_size,
    );
    match c.scheme.as_str() {
        "degraded" => {
            let inside = degraded_region_check(cfg, &DegradedRateTuple(c.rates.clone()))?;
            Ok(verdict(inside, json!({"scheme": "degraded", "rates": c.rates})))
        }
        "symmetric-2rx" | "separate-asym-2rx" | "joint-2rx" => {
            if cfg.receivers != 2 {
                return Err(Error::config("K", "two-receiver schemes need K = 2"));
            }
            let r = single(&c.rates, "rates")?;
            let m = single(&memories, "memories")?;
            let (bound, beta1) = match c.scheme.as_str() {
                "symmetric-2rx" => (two_rx_symmetric_rate(d1, d2, f, d, m)?, None),
                "separate-asym-2rx" => (two_rx_separate_asym_rate(d1, d2, f, d, m)?, None),
                _ => {
                    let (r, b) = two_rx_joint_rate(d1, d2, f, d, m)?;
                    (r, Some(b))
                }
            };
            Ok(verdict(
                r <= bound + crate::lp::FEAS_TOL,
                json!({"scheme": c.scheme, "rate": r, "M": m, "max_rate": bound, "beta1": beta1}),
            ))
        }
        "general" => {
            let r = single(&c.rates, "rates")?;
            let m = single(&memories, "memories")?;
            let k0 = c
                .k0
                .unwrap_or_else(|| cfg.memories.iter().filter(|x| **x > 0.0).count().max(2));
            let printed = general_max_symmetric_rate(cfg, k0, m)?;
            let lp = (1..k0)
                .map(|t| phase_lp_max_rate(cfg, k0, m, t))
                .collect::<Result<Vec<_>>>()?;
            let lp_best = lp.iter().map(|s| s.rate).fold(0.0, f64::max);
            Ok(verdict(
                r <= lp_best + crate::lp::FEAS_TOL,
                json!({
                    "scheme": "general",
                    "rate": r,
                    "K0": k0,
                    "M": m,
                    "phase_lp_max_rate": lp_best,
                    "printed_conditions_max_rate": printed.rate,
                    "inside_printed_conditions": r <= printed.rate + crate::lp::FEAS_TOL,
                }),
            ))
        }
        "unequal" => {
            let r = single(&c.rates, "rates")?;
            let opt = unequal_cache_max_rate(cfg, &memories)?;
            Ok(verdict(
                r <= opt.rate + crate::lp::FEAS_TOL,
                json!({"scheme": "unequal", "rate": r, "memories": memories, "optimum": opt}),
            ))
        }
        "common" => {
            let v = common_demand_contains(cfg, &c.rates, &memories)?;
            Ok(verdict(
                v.inside,
                json!({"scheme": "common", "rates": c.rates, "memories": memories, "required": v.required, "witness": v.witness}),
            ))
        }
        "common-separate" => {
            let inside = common_demand_separate_contains(cfg, &c.rates, &memories)?;
            Ok(verdict(
                inside,
                json!({"scheme": "common-separate", "rates": c.rates, "memories": memories}),
            ))
        }
        other => Err(Error::config("scheme", format!("unknown region {other:?}"))),
    }
}

fn parse_schemes(text: &str) -> Result<Vec<Scheme>> {
    if text == "all" {
        return Ok(vec![Scheme::Symmetric2rx, Scheme::SeparateAsym2rx, Scheme::Joint2rx]);
    }
    text.split(',').map(|s| s.trim().parse()).collect()
}

pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let bad = || Error::config("grid", format!("expected start:step:stop, got {text:?}"));
    let parts: Vec<f64> = text
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let [start, step, stop] = parts[..] else {
        return Err(bad());
    };
    if !(step > 0.0) || stop < start || start < 0.0 {
        return Err(bad());
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|i| start + i as f64 * step).collect())
}

fn region_sweep(cfg: &SystemConfig, c: &RegionSweep) -> Result<Output> {
    let schemes = parse_schemes(&c.scheme)?;
    let grid = parse_grid(&c.grid)?;
    let opts = c.sim.options();
    let rows = sweep(cfg, &schemes, &grid, c.simulate.then_some((&opts, c.backoff)))?;
    Ok(Output {
        code: 0,
        stdout: sweep_csv(&rows),
    })
}

fn optimize(cfg: &SystemConfig, c: &Optimize) -> Result<Output> {
    let cached = cfg.memories.iter().filter(|x| **x > 0.0).count();
    let k0 = c.k0.unwrap_or(cached.max(1));
    let m = c.memory.unwrap_or(cfg.memories[0]);
    let mut out = json!({"K0": k0, "M": m});
    if k0 >= 2 {
        out["printed_conditions"] = json!(general_max_symmetric_rate(cfg, k0, m)?);
        let per_t = (1..k0)
            .map(|t| phase_lp_max_rate(cfg, k0, m, t))
            .collect::<Result<Vec<_>>>()?;
        out["phase_lp"] = json!(per_t);
    } else {
        out["phase_lp"] = json!([phase_lp_max_rate(cfg, 1, m, 1)?]);
    }
    if cfg.memories.windows(2).all(|w| w[0] >= w[1]) {
        out["unequal"] = json!(unequal_cache_max_rate(cfg, &cfg.memories)?);
    }
    Ok(json_out(0, &out))
}

#[derive(Debug, Serialize)]
struct CacheRow {
    message: usize,
    sub_message: Option<usize>,
    subset: Option<Vec<usize>>,
    bits: usize,
}

#[derive(Debug, Serialize)]
struct ReceiverTable {
    receiver: usize,
    capacity_bits: usize,
    used_bits: usize,
    entries: Vec<CacheRow>,
}

fn placement_show(cfg: &SystemConfig, c: &PlanArgs) -> Result<Output> {
    let scheme: Scheme = c.scheme.parse()?;
    let plan = prepare(cfg, scheme, c.backoff)?;
    let tables: Vec<ReceiverTable> = (1..=cfg.receivers)
        .map(|k| {
            let entries: Vec<CacheRow> = match &plan.kind {
                PlanKind::Subset { layout, .. } => (1..=cfg.library_size)
                    .flat_map(|d| {
                        (1..=layout.tau())
                            .filter(move |&i| layout.is_cached_at(i, k))
                            .map(move |i| CacheRow {
                                message: d,
                                sub_message: Some(i),
                                subset: Some(layout.subsets[i - 1].clone()),
                                bits: layout.len_of(i),
                            })
                    })
                    .collect(),
                PlanKind::Common { allocation, .. } => allocation.rows[k - 1]
                    .iter()
                    .enumerate()
                    .filter(|(_, m)| **m > 0.0)
                    .map(|(d, m)| CacheRow {
                        message: d + 1,
                        sub_message: None,
                        subset: None,
                        bits: bits_at(cfg.n, *m),
                    })
                    .collect(),
            };
            ReceiverTable {
                receiver: k,
                capacity_bits: cfg.bits(cfg.memories[k - 1]),
                used_bits: entries.iter().map(|e| e.bits).sum(),
                entries,
            }
        })
        .collect();
    Ok(json_out(0, &json!({"scheme": scheme, "plan": plan, "receivers": tables})))
}

fn schedule_show(cfg: &SystemConfig, c: &ScheduleShow) -> Result<Output> {
    let scheme: Scheme = c.plan.scheme.parse()?;
    let plan = prepare(cfg, scheme, c.plan.backoff)?;
    let demand = if c.demand.is_empty() {
        DemandTuple((1..=cfg.receivers).map(|k| (k - 1) % cfg.library_size + 1).collect())
    } else {
        DemandTuple::new(c.demand.clone(), cfg.library_size)?
    };
    let Some(schedule) = plan.schedule(cfg, &demand)? else {
        return Err(Error::config("scheme", "common-demand delivery is a single coded phase"));
    };
    let report = verify_schedule(&schedule, cfg, c.margin)?;
    Ok(json_out(
        if report.ok { 0 } else { 1 },
        &json!({"scheme": scheme, "operating_rate": plan.operating_rate, "schedule": schedule, "verification": report}),
    ))
}

fn simulate(cfg: &SystemConfig, c: &Simulate) -> Result<Output> {
    let scheme: Scheme = c.scheme.parse()?;
    let plan = prepare(cfg, scheme, c.backoff)?;
    let report = estimate_pe(cfg, &plan, &c.sim.options())?;
    Ok(json_out(0, &report))
}
