//! Every receiver wants the same file. Compare joint coding (each receiver
//! only caches what its own channel cannot carry) with separate coding
//! (everyone caches down to the weakest channel).

use cache_channel::model::{DemandSet, SystemConfig};
use cache_channel::regions::{common_demand_contains, common_demand_separate_contains};

fn main() -> cache_channel::Result<()> {
    let cfg = SystemConfig {
        receivers: 3,
        library_size: 2,
        packet_bits: 2,
        deltas: vec![0.6, 0.4, 0.1],
        rates: vec![1.5, 1.0],
        memories: vec![1.0, 0.5, 0.0],
        n: 1000,
        demand_set: DemandSet::Common,
    }
    .validate()?;
    println!("capacities {:?}", cfg.capacities());
    let v = common_demand_contains(&cfg, &cfg.rates, &cfg.memories)?;
    println!("joint: inside={} required={:?}", v.inside, v.required);
    if let Some(w) = &v.witness {
        for (k, row) in w.rows.iter().enumerate() {
            println!("  receiver {} caches {:?}", k + 1, row);
        }
    }
    // separate coding needs sum_d max(0, R_d - min cap) at every receiver
    for m in [0.5, 1.0, 1.5, 2.0] {
        let mems = vec![m; 3];
        println!(
            "M={m}: joint {} separate {}",
            common_demand_contains(&cfg, &cfg.rates, &mems)?.inside,
            common_demand_separate_contains(&cfg, &cfg.rates, &mems)?
        );
    }
    Ok(())
}
