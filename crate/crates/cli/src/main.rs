use std::io;
use std::process::ExitCode;

use clap::Parser;
use smoothgen_cli::{exit_code, run, RunConfig};

// SMOOTHGEN_THREADS caps the global rayon pool.
#[cfg(feature = "parallel")]
fn configure_threads() {
    if let Some(n) = std::env::var("SMOOTHGEN_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}

#[cfg(not(feature = "parallel"))]
fn configure_threads() {}

fn main() -> ExitCode {
    let config = RunConfig::parse();
    configure_threads();
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    match run(&config, &mut lock) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
