//! Unequal cache budgets `M_1 >= ... >= M_K` by time sharing.
//!
//! The budget increments `M_k0 - M_{k0+1}` (with `M_{K+1} = 0`) are handed to
//! equal-cache sub-schemes in which receivers `1..=k0` cache. Sub-scheme
//! `k0` runs for a fraction of the block and uses per-receiver cache
//! `increment / fraction` during it. Since the phase LP is homogeneous apart
//! from its time budget, all sub-schemes (one copy per admissible `t`) go into
//! a single LP in perspective form and the fractions are optimized jointly.
//! `k0 = 1` uses the single-cached-receiver pattern with piggybacking.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lp::{Cmp, Model, Var};
use crate::model::SystemConfig;
use crate::placement::Pattern;

use super::phase_lp::{add_block, Block};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubScheme {
    pub k0: usize,
    pub t: usize,
    /// Fraction of the blocklength given to this sub-scheme.
    pub time_share: f64,
    /// Contribution to the overall rate (`time_share` times its own rate).
    pub rate_contribution: f64,
    /// Cache used by this sub-scheme at each of its `K0` receivers.
    pub memory_contribution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnequalOptimum {
    pub rate: f64,
    /// Sub-schemes with a positive time share.
    pub sub_schemes: Vec<SubScheme>,
}

pub fn unequal_cache_max_rate(cfg: &SystemConfig, memories: &[f64]) -> Result<UnequalOptimum> {
    let big_k = cfg.receivers;
    if memories.len() != big_k {
        return Err(Error::Domain(format!("expected {big_k} memories")));
    }
    if memories.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
        return Err(Error::Domain("memories must be nonnegative".into()));
    }
    if memories.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::Domain("memories must be nonincreasing".into()));
    }
    let caps = cfg.capacities();
    let mut model = Model::new();
    let mut blocks: Vec<(Block, Var)> = Vec::new();
    for k0 in 1..=big_k {
        let increment = memories[k0 - 1] - memories.get(k0).copied().unwrap_or(0.0);
        let patterns: Vec<Pattern> = if k0 == 1 {
            vec![Pattern::new(1, 1)?]
        } else {
            (1..k0).map(|t| Pattern::new(k0, t)).collect::<Result<_>>()?
        };
        let mut memory_terms = Vec::new();
        for pattern in patterns {
            let share = model.var(format!("s[{k0},{}]", pattern.t), 0.0, 1.0);
            let tag = format!("[{k0},{}]", pattern.t);
            let block = add_block(&mut model, &caps, pattern, Some(share), true, &tag);
            let per = (cfg.library_size * pattern.per_receiver()) as f64;
            memory_terms.push((block.piece, per));
            blocks.push((block, share));
        }
        model.constrain(format!("memory[{k0}]"), memory_terms, Cmp::Le, increment);
    }
    let shares: Vec<(Var, f64)> = blocks.iter().map(|(_, s)| (*s, 1.0)).collect();
    model.constrain("time", shares, Cmp::Eq, 1.0);
    let objective: Vec<(Var, f64)> = blocks.iter().map(|(b, _)| (b.rate, 1.0)).collect();
    let sol = model.maximize(&objective)?;
    let sub_schemes = blocks
        .iter()
        .filter(|(_, s)| sol.get(*s) > 1e-9)
        .map(|(b, s)| SubScheme {
            k0: b.pattern.k0,
            t: b.pattern.t,
            time_share: sol.get(*s),
            rate_contribution: sol.get(b.rate),
            memory_contribution: sol.get(b.piece)
                * (cfg.library_size * b.pattern.per_receiver()) as f64,
        })
        .collect();
    Ok(UnequalOptimum {
        rate: sol.objective,
        sub_schemes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DemandSet;
    use crate::regions::phase_lp::phase_lp_max_rate;

    fn cfg(deltas: Vec<f64>) -> SystemConfig {
        SystemConfig {
            receivers: deltas.len(),
            library_size: 10,
            packet_bits: 1,
            memories: vec![0.0; deltas.len()],
            deltas,
            rates: vec![0.0; 10],
            n: 1000,
            demand_set: DemandSet::FullProduct,
        }
    }

    #[test]
    fn two_receiver_examples() {
        let c = cfg(vec![0.8, 0.2]);
        let r = unequal_cache_max_rate(&c, &[2.0, 0.0]).unwrap().rate;
        assert!((r - 0.36).abs() < 1e-9, "{r}");
        let r = unequal_cache_max_rate(&c, &[0.0, 0.0]).unwrap().rate;
        assert!((r - 0.16).abs() < 1e-9, "{r}");
        let both = unequal_cache_max_rate(&c, &[2.0, 2.0]).unwrap().rate;
        let equal = phase_lp_max_rate(&c, 2, 2.0, 1).unwrap().rate;
        assert!(both >= equal - 1e-9);
    }

    #[test]
    fn ordering_enforced() {
        let c = cfg(vec![0.8, 0.2]);
        assert!(unequal_cache_max_rate(&c, &[0.0, 1.0]).is_err());
    }

    #[test]
    fn shares_sum_to_one() {
        let c = cfg(vec![0.8, 0.5, 0.2]);
        let opt = unequal_cache_max_rate(&c, &[2.0, 1.0, 0.5]).unwrap();
        let total: f64 = opt.sub_schemes.iter().map(|s| s.time_share).sum();
        assert!((total - 1.0).abs() < 1e-9);
        let rate: f64 = opt.sub_schemes.iter().map(|s| s.rate_contribution).sum();
        assert!((rate - opt.rate).abs() < 1e-9);
    }
}
