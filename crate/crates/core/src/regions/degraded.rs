use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::FEAS_TOL;
use crate::model::SystemConfig;

/// Entry `k-1` is the rate `R_{k..K}` that receivers `k..=K` must decode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegradedRateTuple(pub Vec<f64>);

/// Membership in the degraded message-set region:
/// `sum_k r_k / (F (1 - delta_k)) <= 1`.
///
/// A positive rate on a level whose receiver has `delta_k = 1` is outside.
pub fn degraded_region_contains(cfg: &SystemConfig, r: &DegradedRateTuple) -> bool {
    degraded_region_check(cfg, r).unwrap_or(false)
}

/// Like [`degraded_region_contains`] but reports a dead channel carrying a
/// positive rate as [`Error::DegenerateChannel`].
pub fn degraded_region_check(cfg: &SystemConfig, r: &DegradedRateTuple) -> Result<bool> {
    if r.0.len() != cfg.receivers {
        return Err(Error::Domain(format!(
            "degraded tuple has {} entries, expected {}",
            r.0.len(),
            cfg.receivers
        )));
    }
    if r.0.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::Domain("degraded rates must be nonnegative".into()));
    }
    let mut load = 0.0;
    for (k, (&rate, cap)) in r.0.iter().zip(cfg.capacities()).enumerate() {
        if rate == 0.0 {
            continue;
        }
        if cap <= 0.0 {
            return Err(Error::DegenerateChannel {
                receiver: k + 1,
                rate,
            });
        }
        load += rate / cap;
    }
    Ok(load <= 1.0 + FEAS_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DemandSet;

    fn cfg(deltas: Vec<f64>) -> SystemConfig {
        SystemConfig {
            receivers: deltas.len(),
            library_size: 1,
            packet_bits: 1,
            memories: vec![0.0; deltas.len()],
            deltas,
            rates: vec![0.0],
            n: 10,
            demand_set: DemandSet::FullProduct,
        }
    }

    #[test]
    fn examples() {
        let c = cfg(vec![0.8, 0.2]);
        assert!(degraded_region_contains(&c, &DegradedRateTuple(vec![0.1, 0.4])));
        assert!(!degraded_region_contains(&c, &DegradedRateTuple(vec![0.12, 0.4])));
        assert!(degraded_region_contains(&c, &DegradedRateTuple(vec![0.0, 0.0])));
    }

    #[test]
    fn dead_channel() {
        let c = cfg(vec![1.0, 0.2]);
        assert!(!degraded_region_contains(&c, &DegradedRateTuple(vec![0.1, 0.0])));
        assert!(degraded_region_contains(&c, &DegradedRateTuple(vec![0.0, 0.8])));
        assert!(matches!(
            degraded_region_check(&c, &DegradedRateTuple(vec![0.1, 0.0])),
            Err(Error::DegenerateChannel { receiver: 1, .. })
        ));
    }
}
