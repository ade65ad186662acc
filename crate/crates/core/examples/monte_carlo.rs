//! Monte Carlo error probability of the joint two-receiver scheme below and
//! above its rate.

use cache_channel::model::{DemandSet, SystemConfig};
use cache_channel::sim::{estimate_pe, prepare, Scheme, SimOptions};

fn main() -> cache_channel::Result<()> {
    let cfg = SystemConfig {
        receivers: 2,
        library_size: 4,
        packet_bits: 8,
        deltas: vec![0.8, 0.2],
        rates: vec![0.0; 4],
        memories: vec![2.0 * 8.0 * 0.5, 0.0],
        n: 3000,
        demand_set: DemandSet::FullProduct,
    };
    let opts = SimOptions { trials: 64, ..SimOptions::default() };
    for backoff in [0.9, 1.1] {
        let plan = prepare(&cfg, Scheme::Joint2rx, backoff)?;
        let r = estimate_pe(&cfg, &plan, &opts)?;
        println!(
            "backoff {backoff}: R={:.4} P_e={:.3} [{:.3}, {:.3}] failures per receiver {:?}",
            r.operating_rate, r.pe_hat, r.ci_lo, r.ci_hi, r.receiver_failures
        );
    }
    Ok(())
}
