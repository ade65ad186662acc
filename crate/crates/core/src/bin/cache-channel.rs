use std::io::Write;
use std::process::ExitCode;

use cache_channel::cli::{execute, Cli, THREADS_ENV};
use clap::Parser;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: {e}");
        }
    }
    match execute(&cli) {
        Ok(out) => {
            print!("{}", out.stdout);
            std::io::stdout().flush().ok();
            ExitCode::from(out.code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
