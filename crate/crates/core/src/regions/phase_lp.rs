//! Explicit-phase LP for the equal-cache subset scheme.
//!
//! Variables: message rate `R`, cached piece rate `c` (so the per-receiver
//! cache in use is `D C(K0-1,t-1) c <= M`), phase fractions `beta_1..beta_K`,
//! piggyback rates `C[k][kt]` and their split `x[k][kt][i]` over the cached
//! sub-messages `i` with `k in R_i`.
//!
//! For every phase `p` and every receiver `j >= p` the bits of the phase-`p`
//! payload that `j` does not hold must fit `beta_p F (1 - delta_j)`:
//!
//! * phase `p <= K0`: the `C(K0-p, t)` XOR groups with smallest member `p`
//!   (unknown everywhere, each receiver lacks its own constituent), the
//!   uncached part `R - tau c`, and the piggyback slices, which count as
//!   unknown for `j > p` and free for `j = p`;
//! * phase `p > K0`: whatever of `W_{d_p}` was not piggybacked,
//!   `R - sum_k C[k][p]`.
//!
//! Piggyback slices for `kt` drawn from sub-message `i` can never exceed its
//! length: `sum_{k in R_i} x[k][kt][i] <= c`.
//!
//! Every row is homogeneous in the rate-like variables except the time
//! budget, so [`add_block`] can also build perspective copies that share a
//! common time budget (see [`unequal`](super::unequal)).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lp::{Cmp, Model, Var, FEAS_TOL};
use crate::model::SystemConfig;
use crate::placement::{subsets, Pattern};

/// Parameters of one run of the subset scheme.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeParameters {
    pub k0: usize,
    pub t: usize,
    /// Phase fractions, one per receiver, summing to 1.
    pub beta: Vec<f64>,
    /// `C_{k,kt}` at `[k-1][kt-K0-1]`.
    pub piggyback: Vec<Vec<f64>>,
}

impl SchemeParameters {
    pub fn new(
        receivers: usize,
        k0: usize,
        t: usize,
        beta: Vec<f64>,
        piggyback: Vec<Vec<f64>>,
    ) -> Result<Self> {
        Pattern::new(k0, t)?;
        if k0 > receivers {
            return Err(Error::Domain(format!("K0={k0} exceeds K={receivers}")));
        }
        if beta.len() != receivers || beta.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
            return Err(Error::Domain("beta must hold K nonnegative fractions".into()));
        }
        let total: f64 = beta.iter().sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::Domain(format!("beta sums to {total}, not 1")));
        }
        super::conditions::check_piggyback_shape(&piggyback, k0, receivers)?;
        Ok(SchemeParameters {
            k0,
            t,
            beta,
            piggyback,
        })
    }

    pub fn pattern(&self) -> Pattern {
        Pattern {
            k0: self.k0,
            t: self.t,
        }
    }

    /// `C_{k,kt}` with 1-based receiver labels.
    pub fn piggyback_rate(&self, k: usize, kt: usize) -> f64 {
        self.piggyback[k - 1][kt - self.k0 - 1]
    }
}

/// Variables of one scheme copy inside a larger model.
#[derive(Debug, Clone)]
pub(crate) struct Block {
    pub pattern: Pattern,
    pub rate: Var,
    pub piece: Var,
    pub beta: Vec<Var>,
    pub piggyback: Vec<Vec<Var>>,
}

/// Add one copy of the scheme. The phase fractions sum to `share` (a
/// variable) or to 1 when `share` is `None`. Memory is left to the caller.
pub(crate) fn add_block(
    model: &mut Model,
    capacities: &[f64],
    pattern: Pattern,
    share: Option<Var>,
    allow_piggyback: bool,
    tag: &str,
) -> Block {
    let big_k = capacities.len();
    let k0 = pattern.k0;
    let tau = pattern.tau() as f64;
    let cached_sets = subsets(k0, pattern.t);
    let groups = subsets(k0, pattern.t + 1);

    let rate = model.nonneg(format!("{tag}R"));
    let piece = model.nonneg(format!("{tag}c"));
    let beta: Vec<Var> = (1..=big_k)
        .map(|p| model.var(format!("{tag}beta{p}"), 0.0, 1.0))
        .collect();
    let pig_hi = if allow_piggyback { f64::INFINITY } else { 0.0 };
    let piggyback: Vec<Vec<Var>> = (1..=k0)
        .map(|k| {
            (k0 + 1..=big_k)
                .map(|kt| model.var(format!("{tag}C[{k}][{kt}]"), 0.0, pig_hi))
                .collect()
        })
        .collect();

    // uncached part has nonnegative rate
    model.constrain(
        format!("{tag}uncached>=0"),
        vec![(rate, 1.0), (piece, -tau)],
        Cmp::Ge,
        0.0,
    );

    let mut time: Vec<(Var, f64)> = beta.iter().map(|&b| (b, 1.0)).collect();
    match share {
        Some(s) => {
            time.push((s, -1.0));
            model.constrain(format!("{tag}time"), time, Cmp::Eq, 0.0);
        }
        None => model.constrain(format!("{tag}time"), time, Cmp::Eq, 1.0),
    }

    for p in 1..=big_k {
        for j in p..=big_k {
            let mut terms: Vec<(Var, f64)> = Vec::new();
            if p <= k0 {
                let xor_count = groups.iter().filter(|s| s[0] == p).count() as f64;
                // XOR groups plus the uncached part R - tau c
                terms.push((piece, xor_count - tau));
                terms.push((rate, 1.0));
                if j > p {
                    terms.extend(piggyback[p - 1].iter().map(|&v| (v, 1.0)));
                }
            } else {
                terms.push((rate, 1.0));
                terms.extend(piggyback.iter().map(|row| (row[p - k0 - 1], -1.0)));
            }
            terms.push((beta[p - 1], -capacities[j - 1]));
            model.constrain(format!("{tag}phase{p}/rx{j}"), terms, Cmp::Le, 0.0);
        }
    }

    // piggyback availability: split C[k][kt] over the sub-messages cached at k
    if allow_piggyback {
        for kt in k0 + 1..=big_k {
            let mut alloc: Vec<Vec<(usize, Var)>> = vec![Vec::new(); cached_sets.len()];
            for k in 1..=k0 {
                let mut split = vec![(piggyback[k - 1][kt - k0 - 1], -1.0)];
                for (i, set) in cached_sets.iter().enumerate() {
                    if set.contains(&k) {
                        let x = model.nonneg(format!("{tag}x[{k}][{kt}][{}]", i + 1));
                        split.push((x, 1.0));
                        alloc[i].push((k, x));
                    }
                }
                model.constrain(format!("{tag}split[{k}][{kt}]"), split, Cmp::Eq, 0.0);
            }
            for (i, users) in alloc.into_iter().enumerate() {
                let mut terms: Vec<(Var, f64)> = users.into_iter().map(|(_, x)| (x, 1.0)).collect();
                terms.push((piece, -1.0));
                model.constrain(format!("{tag}avail[{kt}][{}]", i + 1), terms, Cmp::Le, 0.0);
            }
        }
    }

    Block {
        pattern,
        rate,
        piece,
        beta,
        piggyback,
    }
}

/// Optimum of the explicit-phase LP.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseLpSolution {
    pub rate: f64,
    pub params: SchemeParameters,
    /// Cached sub-message rate actually used.
    pub piece_rate: f64,
    /// Per-receiver cache in use, `D C(K0-1,t-1) piece_rate <= M`.
    pub memory_used: f64,
}

fn check(cfg: &SystemConfig, pattern: Pattern, memory: f64) -> Result<()> {
    if pattern.k0 > cfg.receivers {
        return Err(Error::Domain(format!(
            "K0={} exceeds K={}",
            pattern.k0, cfg.receivers
        )));
    }
    if !(memory.is_finite() && memory >= 0.0) {
        return Err(Error::Domain("M must be nonnegative".into()));
    }
    Ok(())
}

fn memory_row(model: &mut Model, block: &Block, library_size: usize, memory: f64) {
    let per = (library_size * block.pattern.per_receiver()) as f64;
    model.constrain("memory", vec![(block.piece, per)], Cmp::Le, memory);
}

/// Maximize `R` over `beta`, `C` and the cache actually used (at most `M`
/// per caching receiver).
pub fn phase_lp_max_rate(
    cfg: &SystemConfig,
    k0: usize,
    memory: f64,
    t: usize,
) -> Result<PhaseLpSolution> {
    let pattern = Pattern::new(k0, t)?;
    solve_pattern(cfg, pattern, memory, true)
}

/// Same LP for any accepted pattern, optionally with piggybacking disabled.
pub(crate) fn solve_pattern(
    cfg: &SystemConfig,
    pattern: Pattern,
    memory: f64,
    allow_piggyback: bool,
) -> Result<PhaseLpSolution> {
    check(cfg, pattern, memory)?;
    let mut model = Model::new();
    let block = add_block(&mut model, &cfg.capacities(), pattern, None, allow_piggyback, "");
    memory_row(&mut model, &block, cfg.library_size, memory);
    // ties: lexicographically smallest piggyback rates
    let order: Vec<Var> = block.piggyback.iter().flatten().copied().collect();
    let sol = model.maximize_lexicographic(&[(block.rate, 1.0)], &order)?;
    Ok(extract(&sol, &block, cfg, pattern))
}

fn extract(
    sol: &crate::lp::Solution,
    block: &Block,
    cfg: &SystemConfig,
    pattern: Pattern,
) -> PhaseLpSolution {
    let clean = |x: f64| if x.abs() < 1e-12 { 0.0 } else { x.max(0.0) };
    let mut beta: Vec<f64> = block.beta.iter().map(|&v| clean(sol.get(v))).collect();
    let total: f64 = beta.iter().sum();
    if total > 0.0 {
        beta.iter_mut().for_each(|b| *b /= total);
    }
    let piece = clean(sol.get(block.piece));
    PhaseLpSolution {
        rate: clean(sol.objective),
        params: SchemeParameters {
            k0: pattern.k0,
            t: pattern.t,
            beta,
            piggyback: block
                .piggyback
                .iter()
                .map(|row| row.iter().map(|&v| clean(sol.get(v))).collect())
                .collect(),
        },
        piece_rate: piece,
        memory_used: piece * (cfg.library_size * pattern.per_receiver()) as f64,
    }
}

/// Whether a concrete point satisfies the phase-LP constraint system: rate
/// `R`, cached piece rate `piece`, and the fractions and piggyback rates in
/// `params`. Only the piggyback split is searched for.
pub fn phase_point_feasible(
    cfg: &SystemConfig,
    rate: f64,
    piece: f64,
    params: &SchemeParameters,
) -> Result<bool> {
    let pattern = params.pattern();
    check(cfg, pattern, 0.0)?;
    let mut model = Model::new();
    let block = add_block(&mut model, &cfg.capacities(), pattern, None, true, "");
    let fix = |model: &mut Model, v: Var, x: f64| {
        model.constrain("fix", vec![(v, 1.0)], Cmp::Le, x + FEAS_TOL);
        model.constrain("fix", vec![(v, 1.0)], Cmp::Ge, x - FEAS_TOL);
    };
    fix(&mut model, block.rate, rate);
    fix(&mut model, block.piece, piece);
    for (v, &b) in block.beta.iter().zip(&params.beta) {
        fix(&mut model, *v, b);
    }
    for (row, vals) in block.piggyback.iter().zip(&params.piggyback) {
        for (v, &x) in row.iter().zip(vals) {
            fix(&mut model, *v, x);
        }
    }
    match model.maximize(&[]) {
        Ok(_) => Ok(true),
        Err(Error::Lp(msg)) if msg.contains("infeasible") => Ok(false),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DemandSet;
    use crate::regions::two_receiver::{two_rx_joint_rate, two_rx_separate_asym_rate, two_rx_symmetric_rate};

    fn cfg(deltas: Vec<f64>, d: usize) -> SystemConfig {
        SystemConfig {
            receivers: deltas.len(),
            library_size: d,
            packet_bits: 1,
            memories: vec![0.0; deltas.len()],
            deltas,
            rates: vec![0.0; d],
            n: 1000,
            demand_set: DemandSet::FullProduct,
        }
    }

    #[test]
    fn no_cache_is_time_sharing() {
        for deltas in [vec![0.8, 0.2], vec![0.8, 0.5, 0.2], vec![0.9, 0.6, 0.6, 0.1]] {
            let c = cfg(deltas.clone(), 10);
            let expect = 1.0 / deltas.iter().map(|d| 1.0 / (1.0 - d)).sum::<f64>();
            let sol = phase_lp_max_rate(&c, 2, 0.0, 1).unwrap();
            assert!((sol.rate - expect).abs() < 1e-9, "{deltas:?}: {}", sol.rate);
        }
    }

    #[test]
    fn two_receiver_symmetric_family() {
        let c = cfg(vec![0.8, 0.2], 10);
        for i in 0..=20 {
            let m = 0.1 * i as f64;
            let sol = phase_lp_max_rate(&c, 2, m, 1).unwrap();
            let closed = two_rx_symmetric_rate(0.8, 0.2, 1, 10, m).unwrap();
            assert!((sol.rate - closed).abs() < 1e-9, "M={m}: {} vs {closed}", sol.rate);
        }
        // beyond M = 2 the LP keeps the best rate reachable with less cache
        let sol = phase_lp_max_rate(&c, 2, 3.0, 1).unwrap();
        assert!(sol.rate >= 0.4 - 1e-9 && sol.memory_used <= 3.0 + 1e-9);
    }

    #[test]
    fn single_cached_receiver_matches_closed_forms() {
        let c = cfg(vec![0.8, 0.2], 10);
        for i in 0..=16 {
            let m = 0.2 * i as f64;
            let joint = solve_pattern(&c, Pattern::new(1, 1).unwrap(), 2.0 * m, true).unwrap();
            let (closed, _) = two_rx_joint_rate(0.8, 0.2, 1, 10, m).unwrap();
            assert!((joint.rate - closed).abs() < 1e-9, "M={m}: {} vs {closed}", joint.rate);
            let sep = solve_pattern(&c, Pattern::new(1, 1).unwrap(), 2.0 * m, false).unwrap();
            let closed = two_rx_separate_asym_rate(0.8, 0.2, 1, 10, m).unwrap();
            assert!((sep.rate - closed).abs() < 1e-9, "M={m}: {} vs {closed}", sep.rate);
        }
    }

    #[test]
    fn optimum_is_feasible_point() {
        let c = cfg(vec![0.8, 0.5, 0.2], 10);
        let sol = phase_lp_max_rate(&c, 2, 1.0, 1).unwrap();
        assert!(phase_point_feasible(&c, sol.rate, sol.piece_rate, &sol.params).unwrap());
        assert!(!phase_point_feasible(&c, sol.rate * 1.01 + 1e-6, sol.piece_rate, &sol.params).unwrap());
    }

    #[test]
    fn scheme_parameter_validation() {
        assert!(SchemeParameters::new(3, 2, 1, vec![0.5, 0.25, 0.25], vec![vec![0.0], vec![0.1]]).is_ok());
        assert!(SchemeParameters::new(3, 2, 2, vec![0.5, 0.25, 0.25], vec![vec![0.0], vec![0.1]]).is_err());
        assert!(SchemeParameters::new(3, 2, 1, vec![0.5, 0.25, 0.2], vec![vec![0.0], vec![0.1]]).is_err());
        assert!(SchemeParameters::new(3, 2, 1, vec![0.5, 0.25, 0.25], vec![vec![-0.1], vec![0.1]]).is_err());
    }
}
