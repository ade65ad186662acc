//! Nested erasure channel: one uniform per use decides every receiver, so a
//! packet erased at a strong receiver is erased at all weaker ones too.

use cache_channel::channel::transmit;

fn main() -> cache_channel::Result<()> {
    let deltas = [0.8, 0.5, 0.2];
    let uses = 100_000;
    let packets: Vec<u64> = (0..uses as u64).collect();
    let out = transmit(&packets, &deltas, 42, 0)?;
    for (k, d) in deltas.iter().enumerate() {
        let rate = out.erasure_count(k + 1) as f64 / uses as f64;
        let sigma = (d * (1.0 - d) / uses as f64).sqrt();
        println!("receiver {}: delta={d} measured={rate:.4} ({:+.2} sigma)", k + 1, (rate - d) / sigma);
    }
    println!("nested: {}", out.is_nested());
    let short = transmit(&packets[..5], &deltas, 42, 0)?;
    print!("{}", short.trace_csv());
    Ok(())
}
