//! Analytical sweep over M with a small simulation at each point, as CSV.

use cache_channel::cli::default_config;
use cache_channel::sim::{sweep, sweep_csv, Scheme, SimOptions};

fn main() -> cache_channel::Result<()> {
    let cfg = default_config();
    let grid: Vec<f64> = (0..=4).map(|i| 0.5 * i as f64).collect();
    let opts = SimOptions { trials: 8, ..SimOptions::default() };
    let rows = sweep(&cfg, &[Scheme::Symmetric2rx, Scheme::Joint2rx], &grid, Some((&opts, 0.9)))?;
    print!("{}", sweep_csv(&rows));
    Ok(())
}
