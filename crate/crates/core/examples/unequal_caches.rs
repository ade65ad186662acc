//! Unequal cache budgets handled by time sharing equal-cache sub-schemes.

use cache_channel::model::{DemandSet, SystemConfig};
use cache_channel::regions::unequal_cache_max_rate;

fn main() -> cache_channel::Result<()> {
    let cfg = SystemConfig {
        receivers: 3,
        library_size: 4,
        packet_bits: 1,
        deltas: vec![0.8, 0.5, 0.2],
        rates: vec![0.0; 4],
        memories: vec![0.0; 3],
        n: 1000,
        demand_set: DemandSet::FullProduct,
    };
    for memories in [vec![2.0, 1.0, 0.0], vec![1.0, 1.0, 1.0], vec![3.0, 0.0, 0.0]] {
        let opt = unequal_cache_max_rate(&cfg, &memories)?;
        println!("memories {memories:?}: R = {:.4}", opt.rate);
        for s in &opt.sub_schemes {
            println!(
                "  K0={} t={} share={:.3} rate+={:.4} cache={:.3}",
                s.k0, s.t, s.time_share, s.rate_contribution, s.memory_contribution
            );
        }
    }
    Ok(())
}
