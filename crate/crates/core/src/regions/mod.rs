//! Achievable-rate conditions and capacity regions.
//!
//! * [`degraded`]: the degraded message-set region of the erasure broadcast
//!   channel.
//! * [`two_receiver`]: closed forms of the three two-receiver schemes
//!   (symmetric coded caching, separate and joint coding with asymmetric
//!   caches).
//! * [`conditions`]: the printed `(K + K0)` sufficient conditions of the
//!   general equal-cache scheme and their maximization.
//! * [`phase_lp`]: the explicit per-phase LP for the same scheme, used as the
//!   ground-truth achievability test.
//! * [`unequal`]: unequal cache budgets via time sharing of equal-cache
//!   sub-schemes.
//! * [`common`]: exact capacity-memory region for a single common demand.

pub mod common;
pub mod conditions;
pub mod degraded;
pub mod phase_lp;
pub mod two_receiver;
pub mod unequal;

pub use common::{
    common_demand_contains, common_demand_separate_contains, CacheAllocation, CommonVerdict,
};
pub use conditions::{general_conditions_feasible, general_max_symmetric_rate, GeneralOptimum};
pub use degraded::{degraded_region_check, degraded_region_contains, DegradedRateTuple};
pub use phase_lp::{phase_lp_max_rate, PhaseLpSolution, SchemeParameters};
pub use two_receiver::{two_rx_joint_rate, two_rx_separate_asym_rate, two_rx_symmetric_rate};
pub use unequal::{unequal_cache_max_rate, UnequalOptimum};
