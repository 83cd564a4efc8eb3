//! Runs all four schedulers on a shared channel and prints per-scheme
//! goodput. Extra arguments are `key=value` config overrides.
//!
//! ```text
//! cargo run --release --example scheme_comparison -- N=8 K=4 M=4 realizations=20
//! ```

use std::time::Instant;

use ofdma_greedy::config::RunConfig;
use ofdma_greedy::sim::{aggregate, Simulator};

fn main() -> ofdma_greedy::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.apply_overrides(["N=8", "K=4", "M=4", "realizations=10"])?;
    let args: Vec<String> = std::env::args().skip(1).collect();
    cfg.apply_overrides(args.iter().map(String::as_str))?;
    cfg.validate()?;

    let start = Instant::now();
    let sim = Simulator::new(cfg.clone())?;
    let outputs = sim.run()?;
    let elapsed = start.elapsed();

    println!(
        "N={} K={} M={} alpha={} S={} budget={:.1}, {} realizations x {} slots ({:.1?})",
        cfg.subchannels,
        cfg.users,
        cfg.mcs_count,
        cfg.alpha,
        cfg.particles,
        cfg.power_budget(),
        cfg.realizations,
        cfg.slots,
        elapsed
    );
    println!(
        "{:<10}{:>12}{:>10}{:>12}{:>12}",
        "scheme", "goodput", "stderr", "realized", "gap bound"
    );
    for s in aggregate(&outputs, &cfg.schemes, cfg.warmup) {
        let gap = s
            .mean_gap_bound
            .map_or("-".to_string(), |g| format!("{g:.2e}"));
        println!(
            "{:<10}{:>12.4}{:>10.4}{:>12.4}{:>12}",
            s.scheme.as_str(),
            s.mean,
            s.stderr,
            s.realized_mean,
            gap
        );
    }
    Ok(())
}
