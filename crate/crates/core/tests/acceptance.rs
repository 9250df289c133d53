//! Acceptance battery: one line per criterion, nonzero exit on any failure.
//!
//! `CONEWALK_THREADS` sets the worker count (default: all cores).

use conewalk::battery::{run_all, BatteryOptions};

fn main() {
    let threads = std::env::var("CONEWALK_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(0);
    let opts = BatteryOptions {
        threads,
        ..BatteryOptions::default()
    };
    println!("running acceptance battery (seed {})", opts.seed);
    let outcomes = run_all(&opts, |o| println!("{}", o.line()));
    let failed = outcomes.iter().filter(|o| !o.pass).count();
    println!(
        "acceptance: {} passed, {} failed",
        outcomes.len() - failed,
        failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
