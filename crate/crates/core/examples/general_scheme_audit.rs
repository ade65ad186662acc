//! The general equal-cache scheme: the printed sufficient conditions next to
//! the explicit per-phase LP. They disagree on this channel, which is why
//! the LP drives schedules and simulations.

use cache_channel::model::{DemandSet, SystemConfig};
use cache_channel::regions::{general_max_symmetric_rate, phase_lp_max_rate};

fn main() -> cache_channel::Result<()> {
    let cfg = SystemConfig {
        receivers: 3,
        library_size: 3,
        packet_bits: 1,
        deltas: vec![0.7, 0.5, 0.2],
        rates: vec![0.0; 3],
        memories: vec![0.0; 3],
        n: 1000,
        demand_set: DemandSet::FullProduct,
    }
    .validate()?;
    let k0 = 3;
    println!("{:>5} {:>9} {:>9} {:>9}", "M/D", "printed", "lp t=1", "lp t=2");
    for i in 0..=8 {
        let m = 0.05 * i as f64 * cfg.library_size as f64;
        let printed = general_max_symmetric_rate(&cfg, k0, m)?;
        let t1 = phase_lp_max_rate(&cfg, k0, m, 1)?;
        let t2 = phase_lp_max_rate(&cfg, k0, m, 2)?;
        println!(
            "{:>5.2} {:>9.4} {:>9.4} {:>9.4}",
            m / cfg.library_size as f64,
            printed.rate,
            t1.rate,
            t2.rate
        );
    }
    // with K0 = 2 receiver 3 is uncached and can take piggybacked data
    let best = phase_lp_max_rate(&cfg, 2, 0.6, 1)?;
    println!("\nK0=2, M=0.6: R={:.4} beta={:?}", best.rate, best.params.beta);
    println!("piggyback C[k][kt]: {:?}", best.params.piggyback);
    Ok(())
}
