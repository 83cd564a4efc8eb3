//! One slot of each reference scheduler on the same channel state: the
//! genie with current CSI, the genie with CSI delayed by `d` slots, and
//! fixed-power random user selection.
//!
//! ```text
//! cargo run --release --example baselines
//! ```

use ofdma_greedy::baselines::{cgg_allocate, ncgg_allocate, FpRus};
use ofdma_greedy::channel::{Channel, ChannelParams};
use ofdma_greedy::gsra::SolverConfig;
use ofdma_greedy::mcs::{McsTable, Utility};
use ofdma_greedy::rng::{stream, Purpose};
use ofdma_greedy::schedule::Schedule;

fn main() -> ofdma_greedy::Result<()> {
    let (n, k, delay) = (16, 4, 1);
    let channel = Channel::new(ChannelParams::new(n, 2, k, 1e-2, delay)?);
    let table = McsTable::qam(8);
    let config = SolverConfig::new(10.0 * n as f64);
    let mut rng = stream(5, 0, Purpose::Channel, 0);
    let mut state = channel.init_state(&mut rng);
    let lagged = state.clone();
    channel.step(&mut state, &mut rng, delay);

    let gains = channel.subchannel_gains(&state);
    let expected = |s: &Schedule| -> f64 {
        s.iter()
            .map(|(n, a)| table.get(a.mcs).goodput(a.power, gains[a.user][n]))
            .sum()
    };

    let (ncgg, _) = ncgg_allocate(&state, &channel, &table, &Utility::Identity, &config)?;
    let mut genie = stream(5, 0, Purpose::Genie, 0);
    let (cgg, _) = cgg_allocate(
        Some(&lagged),
        &channel,
        &table,
        &Utility::Identity,
        &config,
        100,
        &mut genie,
    )?;
    let fprus = FpRus::new(n, k, &table, config.budget);
    let random = fprus.allocate(&mut stream(5, 0, Purpose::RandomUsers, 0));

    println!(
        "fp-rus uses MCS {} at power {:.2} on every subchannel",
        fprus.mcs() + 1,
        fprus.power()
    );
    println!(
        "{:<8}{:>12}{:>10}{:>10}",
        "scheme", "goodput", "power", "used"
    );
    for (name, s) in [("ncgg", &ncgg), ("cgg", &cgg), ("fprus", &random)] {
        println!(
            "{:<8}{:>12.3}{:>10.2}{:>10}",
            name,
            expected(s),
            s.total_power(),
            s.scheduled_count()
        );
    }
    Ok(())
}
