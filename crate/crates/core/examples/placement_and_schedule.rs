//! Subset placement for K0 = 3, t = 1 and the phase schedule for one demand,
//! with its capacity check.

use cache_channel::model::{DemandSet, DemandTuple, SystemConfig};
use cache_channel::placement::{build_caches, Library, Pattern, SubMessageLayout};
use cache_channel::regions::phase_lp_max_rate;
use cache_channel::schedule::{build_schedule, verify_schedule};
use rand::SeedableRng;

fn main() -> cache_channel::Result<()> {
    let cfg = SystemConfig {
        receivers: 4,
        library_size: 4,
        packet_bits: 1,
        deltas: vec![0.7, 0.5, 0.3, 0.1],
        rates: vec![0.0; 4],
        memories: vec![1.0, 1.0, 1.0, 0.0],
        n: 400,
        demand_set: DemandSet::FullProduct,
    };
    let (k0, t) = (3, 1);
    let sol = phase_lp_max_rate(&cfg, k0, 1.0, t)?;
    let layout = SubMessageLayout::new(Pattern::new(k0, t)?, 4, cfg.n, sol.rate, sol.memory_used)?;
    println!("R = {:.4}, sub-messages {:?} bits", sol.rate, layout.lengths);

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let library = Library::random(&vec![layout.message_len(); 4], &mut rng);
    let caches = build_caches(&library, &layout, &cfg.memories)?;
    for c in &caches.receivers {
        println!("receiver {}: {} of {} bits cached", c.receiver, c.used_bits(), c.capacity_bits);
    }

    let demand = DemandTuple::new(vec![1, 2, 3, 4], 4)?;
    let schedule = build_schedule(&cfg, &sol.params, &layout, &demand)?;
    for p in &schedule.phases {
        println!("phase {}: beta={:.4} budget={} payload={} bits", p.index, p.beta, p.budget, p.payload_bits());
        for item in &p.items {
            println!("  {:?} {} bits, known to {:?}", item.kind, item.bits, item.known_to);
        }
    }
    let report = verify_schedule(&schedule, &cfg, 1.0)?;
    println!("verified: {}", report.ok);
    Ok(())
}
