//! Invariants over random configurations.

use proptest::prelude::*;

use cache_channel::model::{DemandSet, DemandTuple, SystemConfig};
use cache_channel::placement::{Pattern, SubMessageLayout};
use cache_channel::regions::{
    common_demand_contains, common_demand_separate_contains, degraded_region_contains,
    phase_lp_max_rate, two_rx_joint_rate, two_rx_separate_asym_rate, two_rx_symmetric_rate,
    DegradedRateTuple,
};
use cache_channel::schedule::{build_schedule, verify_schedule};

fn config(mut deltas: Vec<f64>, f: u32, d: usize, n: usize) -> SystemConfig {
    deltas.sort_by(|a, b| b.partial_cmp(a).unwrap());
    SystemConfig {
        receivers: deltas.len(),
        library_size: d,
        packet_bits: f,
        memories: vec![0.0; deltas.len()],
        rates: vec![0.0; d],
        deltas,
        n,
        demand_set: DemandSet::FullProduct,
    }
}

fn deltas(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..0.95f64, k)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn degraded_region_is_downward_closed(
        ds in deltas(3),
        f in 1u32..4,
        r in prop::collection::vec(0.0..2.0f64, 3),
        shrink in prop::collection::vec(0.0..=1.0f64, 3),
    ) {
        let cfg = config(ds, f, 3, 100);
        if degraded_region_contains(&cfg, &DegradedRateTuple(r.clone())) {
            let lower: Vec<f64> = r.iter().zip(&shrink).map(|(a, s)| a * s).collect();
            prop_assert!(degraded_region_contains(&cfg, &DegradedRateTuple(lower)));
        }
    }

    #[test]
    fn common_region_monotone_in_memory(
        ds in deltas(3),
        rates in prop::collection::vec(0.0..2.0f64, 4),
        mem in prop::collection::vec(0.0..4.0f64, 3),
        extra in prop::collection::vec(0.0..2.0f64, 3),
    ) {
        let cfg = config(ds, 1, 4, 100);
        let more: Vec<f64> = mem.iter().zip(&extra).map(|(a, b)| a + b).collect();
        let v = common_demand_contains(&cfg, &rates, &mem).unwrap();
        if v.inside {
            prop_assert!(common_demand_contains(&cfg, &rates, &more).unwrap().inside);
            prop_assert!(v.witness.unwrap().fits(&mem));
        }
        if common_demand_separate_contains(&cfg, &rates, &mem).unwrap() {
            prop_assert!(v.inside, "separate coding beat joint coding");
        }
    }

    #[test]
    fn joint_never_below_separate(
        ds in deltas(2),
        f in 1u32..3,
        d in 2usize..12,
        m in 0.0..6.0f64,
    ) {
        let cfg = config(ds, f, d, 100);
        let (d1, d2) = (cfg.deltas[0], cfg.deltas[1]);
        if let (Ok((joint, _)), Ok(sep)) = (
            two_rx_joint_rate(d1, d2, f, d, m),
            two_rx_separate_asym_rate(d1, d2, f, d, m),
        ) {
            prop_assert!(joint >= sep - 1e-9, "joint {joint} < separate {sep}");
        }
    }

    // Symmetric caches can beat both asymmetric schemes when the channels
    // are close (the strong receiver then has no cache), so the full chain
    // is only checked on the example channel.
    #[test]
    fn scheme_chain_on_example_channel(d in 2usize..12, frac in 0.0..1.0f64) {
        let m = frac * d as f64 / 2.0 * 0.64;
        let joint = two_rx_joint_rate(0.8, 0.2, 1, d, m);
        let sep = two_rx_separate_asym_rate(0.8, 0.2, 1, d, m);
        let sym = two_rx_symmetric_rate(0.8, 0.2, 1, d, m);
        if let (Ok((joint, _)), Ok(sep), Ok(sym)) = (joint, sep, sym) {
            prop_assert!(joint >= sep - 1e-9 && sep >= sym - 1e-9, "{joint} {sep} {sym}");
        }
    }

    #[test]
    fn joint_closed_form_matches_phase_lp(
        ds in deltas(2),
        f in 1u32..3,
        d in 2usize..12,
        m in 0.0..6.0f64,
    ) {
        let cfg = config(ds, f, d, 100);
        let Ok((closed, _)) = two_rx_joint_rate(cfg.deltas[0], cfg.deltas[1], f, d, m) else {
            return Ok(());
        };
        // the closed form's M corresponds to a 2M cache at receiver 1
        let lp = phase_lp_max_rate(&cfg, 1, 2.0 * m, 1).unwrap().rate;
        prop_assert!((closed - lp).abs() < 1e-6, "closed {closed} vs LP {lp}");
    }

    #[test]
    fn phase_lp_rate_grows_with_memory(
        ds in deltas(3),
        m in 0.0..3.0f64,
        extra in 0.0..2.0f64,
        t in 1usize..3,
    ) {
        let cfg = config(ds, 1, 3, 100);
        let a = phase_lp_max_rate(&cfg, 3, m, t).unwrap().rate;
        let b = phase_lp_max_rate(&cfg, 3, m + extra, t).unwrap().rate;
        prop_assert!(b >= a - 1e-9);
    }

    #[test]
    fn lp_schedules_cover_and_fit(
        ds in deltas(3),
        k0 in 1usize..=3,
        t_raw in 1usize..3,
        m in 0.0..2.0f64,
        demand in prop::collection::vec(1usize..=3, 3),
        n in 200usize..2000,
    ) {
        let cfg = config(ds, 1, 3, n);
        let t = if k0 == 1 { 1 } else { t_raw.min(k0 - 1) };
        let sol = phase_lp_max_rate(&cfg, k0, m, t).unwrap();
        let layout = SubMessageLayout::new(
            Pattern::new(k0, t).unwrap(), 3, n, sol.rate, sol.memory_used,
        ).unwrap();
        let demand = DemandTuple::new(demand, 3).unwrap();
        let schedule = build_schedule(&cfg, &sol.params, &layout, &demand).unwrap();
        for k in 1..=3 {
            prop_assert!(schedule.coverage_holds(&layout, k), "receiver {k} not covered");
        }
        let report = verify_schedule(&schedule, &cfg, 1.0).unwrap();
        prop_assert!(report.ok, "{:?}", report.failures().collect::<Vec<_>>());
    }

    #[test]
    fn config_json_round_trip(
        ds in deltas(3),
        f in 1u32..=64,
        d in 1usize..6,
        n in 1usize..10_000,
        r in 0.0..3.0f64,
        explicit in any::<bool>(),
    ) {
        let mut cfg = config(ds, f, d, n);
        cfg.rates = vec![r; d];
        cfg.memories = vec![r, r / 2.0, 0.0];
        if explicit {
            cfg.demand_set = DemandSet::ExplicitList { tuples: vec![vec![1, d, 1]] };
        }
        let back = SystemConfig::from_json(&cfg.to_json()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}
