//! The printed sufficient conditions of the equal-cache subset scheme.
//!
//! Receivers `1..=K0` cache `M` each, the others nothing. With
//! `piece = M / (D C(K0-1, t-1))`:
//!
//! * `k in 1..=K0-t-1`:
//!   `R <= F(1-d_k) + piece (C(K0,t) - C(K0-k,t))` and the same with
//!   `R + sum_kt C[k][kt]` against `F(1-d_{k+1})`;
//! * `k in K0-t..=K0`:
//!   `R <= F(1-d_k) + M K0/(D t)` and `R + sum_kt C[k][kt] <= F(1-d_{k+1}) + M K0/(D t)`,
//!   the second dropped when `k = K` (no stronger receiver exists);
//! * `k in K0+1..=K`: `R - sum_k' C[k'][k] <= F(1-d_k)`.
//!
//! These are evaluated exactly as printed. They carry no phase fractions, so
//! they can disagree with [`phase_lp`](super::phase_lp); the audit reports the
//! gap instead of reconciling it.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lp::{Cmp, Model, Var, FEAS_TOL};
use crate::model::{binomial, SystemConfig};

/// One printed condition: `lhs_rate * R + sum coef * C <= rhs`.
#[derive(Debug, Clone)]
struct Condition {
    label: String,
    piggyback: Vec<((usize, usize), f64)>,
    rhs: f64,
}

fn check_domain(cfg: &SystemConfig, k0: usize, t: usize, memory: f64) -> Result<()> {
    if k0 < 2 || k0 > cfg.receivers {
        return Err(Error::Domain(format!("K0={k0} must lie in 2..={}", cfg.receivers)));
    }
    if t == 0 || t >= k0 {
        return Err(Error::Domain(format!("t={t} outside 1..={}", k0 - 1)));
    }
    if !(memory.is_finite() && memory >= 0.0) {
        return Err(Error::Domain("M must be nonnegative".into()));
    }
    Ok(())
}

/// Build the `(K + K0)` conditions; piggyback entries are `(k, kt)` 1-based.
fn conditions(cfg: &SystemConfig, k0: usize, t: usize, memory: f64) -> Vec<Condition> {
    let caps = cfg.capacities();
    let cap = |k: usize| caps[k - 1];
    let big_k = cfg.receivers;
    let d = cfg.library_size as f64;
    let piece = memory / (d * binomial(k0 - 1, t - 1) as f64);
    let full = memory * k0 as f64 / (d * t as f64);
    let row = |k: usize| -> Vec<((usize, usize), f64)> {
        (k0 + 1..=big_k).map(|kt| ((k, kt), 1.0)).collect()
    };
    let mut out = Vec::new();
    for k in 1..=k0 {
        let gain = if k + t < k0 {
            piece * (binomial(k0, t) - binomial(k0 - k, t)) as f64
        } else {
            full
        };
        let (a, b) = if k + t < k0 { ("13a", "13b") } else { ("13c", "13d") };
        out.push(Condition {
            label: format!("({a}) k={k}"),
            piggyback: Vec::new(),
            rhs: cap(k) + gain,
        });
        if k < big_k {
            out.push(Condition {
                label: format!("({b}) k={k}"),
                piggyback: row(k),
                rhs: cap(k + 1) + gain,
            });
        }
    }
    for k in k0 + 1..=big_k {
        out.push(Condition {
            label: format!("(13e) k={k}"),
            piggyback: (1..=k0).map(|kp| ((kp, k), -1.0)).collect(),
            rhs: cap(k),
        });
    }
    out
}

fn piggyback_at(c: &[Vec<f64>], k0: usize, (k, kt): (usize, usize)) -> f64 {
    c[k - 1][kt - k0 - 1]
}

/// True iff every printed condition holds (within the LP tolerance).
///
/// `piggyback[k-1][kt-K0-1]` is `C_{k,kt}`; it must be `K0 x (K-K0)`.
pub fn general_conditions_feasible(
    cfg: &SystemConfig,
    k0: usize,
    t: usize,
    rate: f64,
    memory: f64,
    piggyback: &[Vec<f64>],
) -> Result<bool> {
    check_domain(cfg, k0, t, memory)?;
    check_piggyback_shape(piggyback, k0, cfg.receivers)?;
    Ok(conditions(cfg, k0, t, memory).iter().all(|c| {
        let lhs = rate
            + c.piggyback
                .iter()
                .map(|&(idx, coef)| coef * piggyback_at(piggyback, k0, idx))
                .sum::<f64>();
        lhs <= c.rhs + FEAS_TOL
    }))
}

pub(crate) fn check_piggyback_shape(c: &[Vec<f64>], k0: usize, big_k: usize) -> Result<()> {
    if c.len() != k0 || c.iter().any(|r| r.len() != big_k - k0) {
        return Err(Error::Domain(format!(
            "piggyback matrix must be {k0} x {}",
            big_k - k0
        )));
    }
    if c.iter().flatten().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::Domain("piggyback rates must be nonnegative".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneralOptimum {
    pub rate: f64,
    pub t: usize,
    /// `C_{k,kt}` at `[k-1][kt-K0-1]`.
    pub piggyback: Vec<Vec<f64>>,
}

/// Largest `R` satisfying the printed conditions for some `t` and `C >= 0`.
///
/// Ties go to the smallest `t`; `C` is the lexicographically smallest optimal
/// point (row-major).
pub fn general_max_symmetric_rate(
    cfg: &SystemConfig,
    k0: usize,
    memory: f64,
) -> Result<GeneralOptimum> {
    check_domain(cfg, k0, 1, memory)?;
    let mut best: Option<GeneralOptimum> = None;
    for t in 1..k0 {
        let opt = max_for_t(cfg, k0, t, memory)?;
        let better = match &best {
            None => true,
            Some(b) => opt.rate > b.rate + FEAS_TOL,
        };
        if better {
            best = Some(opt);
        }
    }
    Ok(best.expect("K0 >= 2 gives at least one t"))
}

fn max_for_t(cfg: &SystemConfig, k0: usize, t: usize, memory: f64) -> Result<GeneralOptimum> {
    let big_k = cfg.receivers;
    let mut model = Model::new();
    let r = model.nonneg("R");
    let c: Vec<Vec<Var>> = (1..=k0)
        .map(|k| {
            (k0 + 1..=big_k)
                .map(|kt| model.nonneg(format!("C[{k}][{kt}]")))
                .collect()
        })
        .collect();
    for cond in conditions(cfg, k0, t, memory) {
        let mut terms = vec![(r, 1.0)];
        terms.extend(
            cond.piggyback
                .iter()
                .map(|&((k, kt), coef)| (c[k - 1][kt - k0 - 1], coef)),
        );
        model.constrain(cond.label, terms, Cmp::Le, cond.rhs);
    }
    let order: Vec<Var> = c.iter().flatten().copied().collect();
    let sol = model.maximize_lexicographic(&[(r, 1.0)], &order)?;
    Ok(GeneralOptimum {
        rate: sol.objective,
        t,
        piggyback: c
            .iter()
            .map(|row| row.iter().map(|&v| sol.get(v).max(0.0)).collect())
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DemandSet;

    fn three_rx(memory_per_file: f64) -> (SystemConfig, f64) {
        let cfg = SystemConfig {
            receivers: 3,
            library_size: 10,
            packet_bits: 1,
            deltas: vec![0.8, 0.5, 0.2],
            rates: vec![0.4; 10],
            memories: vec![memory_per_file * 10.0, memory_per_file * 10.0, 0.0],
            n: 1000,
            demand_set: DemandSet::FullProduct,
        };
        (cfg, memory_per_file * 10.0)
    }

    #[test]
    fn hand_evaluated_point() {
        let (cfg, m) = three_rx(0.1);
        let c = vec![vec![0.3], vec![0.4]];
        assert!(general_conditions_feasible(&cfg, 2, 1, 0.4, m, &c).unwrap());
        assert!(!general_conditions_feasible(&cfg, 2, 1, 0.45, m, &c).unwrap());
    }

    #[test]
    fn no_cache_reduces_to_weakest_link() {
        let (cfg, _) = three_rx(0.0);
        let zero = vec![vec![0.0], vec![0.0]];
        // (13c) at k=1 gives R <= F(1-d1) = 0.2; (13e) gives R <= 0.8
        assert!(general_conditions_feasible(&cfg, 2, 1, 0.2, 0.0, &zero).unwrap());
        assert!(!general_conditions_feasible(&cfg, 2, 1, 0.2001, 0.0, &zero).unwrap());
        let opt = general_max_symmetric_rate(&cfg, 2, 0.0).unwrap();
        assert!((opt.rate - 0.2).abs() < 1e-9);
    }

    #[test]
    fn maximum_example() {
        let (cfg, m) = three_rx(0.1);
        let opt = general_max_symmetric_rate(&cfg, 2, m).unwrap();
        assert!((opt.rate - 0.4).abs() < 1e-9, "{opt:?}");
        assert_eq!(opt.t, 1);
        // lexicographically smallest C: both zero suffice
        assert!(opt.piggyback.iter().flatten().all(|x| x.abs() < 1e-9), "{opt:?}");
        assert!(general_conditions_feasible(&cfg, 2, 1, opt.rate, m, &opt.piggyback).unwrap());
    }

    #[test]
    fn vacuous_13d_when_all_cache() {
        // K0 = K = 2: only (13c) at k=1,2 and (13d) at k=1 remain
        let cfg = SystemConfig {
            receivers: 2,
            library_size: 10,
            packet_bits: 1,
            deltas: vec![0.8, 0.2],
            rates: vec![0.3; 10],
            memories: vec![1.0, 1.0],
            n: 1000,
            demand_set: DemandSet::FullProduct,
        };
        let conds = conditions(&cfg, 2, 1, 1.0);
        assert_eq!(conds.len(), 3);
        let opt = general_max_symmetric_rate(&cfg, 2, 1.0).unwrap();
        assert!((opt.rate - (0.2 + 0.2)).abs() < 1e-9);
        assert!(opt.piggyback.iter().all(Vec::is_empty));
    }

    #[test]
    fn domain_errors() {
        let (cfg, m) = three_rx(0.1);
        let c = vec![vec![0.0], vec![0.0]];
        assert!(general_conditions_feasible(&cfg, 2, 2, 0.1, m, &c).is_err());
        assert!(general_conditions_feasible(&cfg, 2, 0, 0.1, m, &c).is_err());
        assert!(general_conditions_feasible(&cfg, 2, 1, 0.1, m, &[vec![0.0]]).is_err());
        assert!(general_max_symmetric_rate(&cfg, 1, m).is_err());
    }

    #[test]
    fn more_memory_never_hurts() {
        let (cfg, _) = three_rx(0.0);
        let mut last = 0.0;
        for i in 0..=8 {
            let r = general_max_symmetric_rate(&cfg, 2, i as f64 * 0.5).unwrap().rate;
            assert!(r >= last - 1e-9);
            last = r;
        }
    }
}
