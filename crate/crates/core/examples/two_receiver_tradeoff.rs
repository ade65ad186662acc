//! Rate-memory tradeoff of the three two-receiver schemes on the
//! delta = (4/5, 1/5) channel with ten files.

use cache_channel::regions::{two_rx_joint_rate, two_rx_separate_asym_rate, two_rx_symmetric_rate};

fn main() {
    let (d1, d2, f, d) = (0.8, 0.2, 1, 10);
    println!("{:>5} {:>10} {:>10} {:>10} {:>7}", "M", "symmetric", "separate", "joint", "beta1");
    for i in 0..=12 {
        let m = 0.25 * i as f64;
        let show = |r: Option<f64>| r.map_or("-".to_string(), |r| format!("{r:.4}"));
        let joint = two_rx_joint_rate(d1, d2, f, d, m).ok();
        println!(
            "{m:>5.2} {:>10} {:>10} {:>10} {:>7}",
            show(two_rx_symmetric_rate(d1, d2, f, d, m).ok()),
            show(two_rx_separate_asym_rate(d1, d2, f, d, m).ok()),
            show(joint.map(|j| j.0)),
            show(joint.map(|j| j.1)),
        );
    }
}
