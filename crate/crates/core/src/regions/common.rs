//! Single common demand: every receiver asks for the same file.
//!
//! A tuple `(R_1..R_D, M_1..M_K)` is achievable iff some split
//! `M_{k,d} >= 0`, `sum_d M_{k,d} <= M_k`, gives
//! `R_d <= F (1 - delta_k) + M_{k,d}` for every `k, d`. Since receivers do not
//! share their budgets, the split exists iff each receiver can afford its own
//! shortfall: `sum_d max(0, R_d - F (1 - delta_k)) <= M_k`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::FEAS_TOL;
use crate::model::SystemConfig;

/// Per-receiver, per-file cache split; `rows[k-1][d-1] = M_{k,d}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheAllocation {
    pub rows: Vec<Vec<f64>>,
}

impl CacheAllocation {
    pub fn row_sums(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().sum()).collect()
    }

    /// Entries nonnegative and row sums within `memories`.
    pub fn fits(&self, memories: &[f64]) -> bool {
        self.rows.len() == memories.len()
            && self.rows.iter().flatten().all(|&x| x >= 0.0)
            && self
                .row_sums()
                .iter()
                .zip(memories)
                .all(|(s, m)| *s <= m + FEAS_TOL)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommonVerdict {
    pub inside: bool,
    /// Cache each receiver needs, `sum_d max(0, R_d - F(1-delta_k))`.
    pub required: Vec<f64>,
    /// Greedy split `M_{k,d} = max(0, R_d - F(1-delta_k))` when inside.
    pub witness: Option<CacheAllocation>,
}

fn check_shapes(cfg: &SystemConfig, rates: &[f64], memories: &[f64]) -> Result<()> {
    if rates.len() != cfg.library_size || memories.len() != cfg.receivers {
        return Err(Error::Domain(format!(
            "expected {} rates and {} memories, got {} and {}",
            cfg.library_size,
            cfg.receivers,
            rates.len(),
            memories.len()
        )));
    }
    if rates.iter().chain(memories).any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::Domain("rates and memories must be nonnegative".into()));
    }
    Ok(())
}

/// Exact membership in the common-demand capacity-memory region, with the
/// greedy witness allocation when the point is inside.
pub fn common_demand_contains(
    cfg: &SystemConfig,
    rates: &[f64],
    memories: &[f64],
) -> Result<CommonVerdict> {
    check_shapes(cfg, rates, memories)?;
    let rows: Vec<Vec<f64>> = cfg
        .capacities()
        .iter()
        .map(|cap| rates.iter().map(|r| (r - cap).max(0.0)).collect())
        .collect();
    let witness = CacheAllocation { rows };
    let required = witness.row_sums();
    let inside = required
        .iter()
        .zip(memories)
        .all(|(need, m)| *need <= m + FEAS_TOL);
    Ok(CommonVerdict {
        inside,
        required,
        witness: inside.then_some(witness),
    })
}

/// Separate cache and channel coding: each file has to fit the weakest
/// channel after caching, so every receiver must cache
/// `max(0, R_d - min_k F(1-delta_k))` of every file.
pub fn common_demand_separate_contains(
    cfg: &SystemConfig,
    rates: &[f64],
    memories: &[f64],
) -> Result<bool> {
    check_shapes(cfg, rates, memories)?;
    let worst = cfg.capacities().into_iter().fold(f64::INFINITY, f64::min);
    let need: f64 = rates.iter().map(|r| (r - worst).max(0.0)).sum();
    Ok(memories.iter().all(|m| need <= m + FEAS_TOL))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DemandSet;

    fn cfg(deltas: Vec<f64>, d: usize) -> SystemConfig {
        SystemConfig {
            receivers: deltas.len(),
            library_size: d,
            packet_bits: 1,
            memories: vec![0.0; deltas.len()],
            deltas,
            rates: vec![0.0; d],
            n: 100,
            demand_set: DemandSet::Common,
        }
    }

    #[test]
    fn witness_example() {
        let c = cfg(vec![0.8, 0.2], 2);
        let v = common_demand_contains(&c, &[1.0, 0.5], &[1.1, 0.2]).unwrap();
        assert!(v.inside);
        let w = v.witness.unwrap();
        let expect = [[0.8, 0.3], [0.2, 0.0]];
        for (row, exp) in w.rows.iter().zip(expect) {
            for (x, e) in row.iter().zip(exp) {
                assert!((x - e).abs() < 1e-12, "{row:?}");
            }
        }
        assert!(w.fits(&[1.1, 0.2]));

        let v = common_demand_contains(&c, &[1.0, 0.5], &[1.0, 0.2]).unwrap();
        assert!(!v.inside);
        assert!((v.required[0] - 1.1).abs() < 1e-12);
        assert!(v.witness.is_none());
    }

    #[test]
    fn no_cache_needed() {
        let c = cfg(vec![0.8, 0.2], 3);
        assert!(common_demand_contains(&c, &[0.2, 0.1, 0.0], &[0.0, 0.0]).unwrap().inside);
        assert!(common_demand_separate_contains(&c, &[0.2, 0.1, 0.0], &[0.0, 0.0]).unwrap());
    }

    #[test]
    fn joint_beats_separate() {
        let c = cfg(vec![0.8, 0.2], 1);
        assert!(common_demand_separate_contains(&c, &[0.5], &[0.3, 0.3]).unwrap());
        assert!(!common_demand_separate_contains(&c, &[0.5], &[0.3, 0.0]).unwrap());
        assert!(common_demand_contains(&c, &[0.5], &[0.3, 0.0]).unwrap().inside);
    }
}
