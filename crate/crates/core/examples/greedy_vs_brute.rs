//! Solves small random allocation problems with the greedy bisection and
//! with exhaustive search, and prints the utility difference next to the
//! greedy solution's gap certificate.
//!
//! ```text
//! cargo run --release --example greedy_vs_brute
//! ```

use ofdma_greedy::belief::SsgPosterior;
use ofdma_greedy::channel::{stationary_taps, ChannelParams, ModulationMatrix};
use ofdma_greedy::gsra::{
    brute_force_allocate, greedy_allocate, Kappa, SolverConfig, DEFAULT_ENUMERATION_CAP,
};
use ofdma_greedy::mcs::{McsTable, Utility};
use ofdma_greedy::rng::{stream, Purpose};

fn main() -> ofdma_greedy::Result<()> {
    let (n, k, m, s) = (3, 2, 2, 10);
    let params = ChannelParams::new(n, 2, k, 1e-2, 1)?;
    let modulation = ModulationMatrix::new(&params);
    let table = McsTable::qam(m);
    let config = SolverConfig::new(10.0 * n as f64).with_kappa(Kappa::RelativeToMuMax(1e-6));

    println!(
        "{:>4}{:>12}{:>12}{:>12}{:>12}{:>6}{:>8}",
        "seed", "greedy", "exhaustive", "difference", "bound", "iters", "degen"
    );
    for seed in 0..10 {
        let mut rng = stream(seed, 0, Purpose::Belief, 0);
        let posteriors: Vec<SsgPosterior> = (0..k)
            .map(|_| {
                let taps: Vec<_> = (0..s).map(|_| stationary_taps(&params, &mut rng)).collect();
                SsgPosterior::from_particles(&vec![1.0 / s as f64; s], &taps, &modulation)
            })
            .collect();
        let g = greedy_allocate(&posteriors, &table, &Utility::Identity, &config)?;
        let b = brute_force_allocate(
            &posteriors,
            &table,
            &Utility::Identity,
            &config,
            DEFAULT_ENUMERATION_CAP,
        )?;
        println!(
            "{:>4}{:>12.6}{:>12.6}{:>12.2e}{:>12.2e}{:>6}{:>8}",
            seed,
            g.utility,
            b.utility,
            b.utility - g.utility,
            g.certificate.bound,
            g.stats.iterations,
            g.certificate.degenerate
        );
    }
    Ok(())
}
