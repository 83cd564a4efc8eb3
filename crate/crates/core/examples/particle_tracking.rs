//! Tracks one user's channel from ACK/NAK feedback alone. Every subchannel
//! carries a fixed-power packet each slot; the filter sees only the
//! outcomes and resamples when its weights degenerate. Prints the true
//! squared gain of subchannel 0 next to the posterior mean.
//!
//! ```text
//! cargo run --release --example particle_tracking -- 0.01 100
//! ```

use ofdma_greedy::belief::Belief;
use ofdma_greedy::channel::{Channel, ChannelParams};
use ofdma_greedy::mcs::McsTable;
use ofdma_greedy::rng::{stream, Purpose};
use ofdma_greedy::schedule::{Assignment, Schedule};

fn main() -> ofdma_greedy::Result<()> {
    let mut args = std::env::args().skip(1);
    let alpha: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0.01);
    let particles: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(100);
    let (n, delay) = (8, 1);
    let channel = Channel::new(ChannelParams::new(n, 2, 1, alpha, delay)?);
    let table = McsTable::qam(2);
    let schedule = Schedule::from_assignments(vec![
        Some(Assignment {
            user: 0,
            mcs: 0,
            power: 2.0
        });
        n
    ]);

    let mut ch_rng = stream(3, 0, Purpose::Channel, 0);
    let mut fb_rng = stream(3, 0, Purpose::Feedback, 0);
    let mut bel_rng = stream(3, 0, Purpose::Belief, 0);
    let mut state = channel.init_state(&mut ch_rng);
    let mut belief = Belief::new(channel.params(), particles, &mut bel_rng)?.with_resampling(true);
    let mut sent = std::collections::VecDeque::new();

    println!("{:>5}{:>10}{:>10}{:>8}", "slot", "true", "belief", "ess");
    for t in 0..120 {
        if t % 10 == 0 {
            let gamma = channel.modulation().gain(0, &state.taps[0]);
            let mean = belief.expect_ssg(channel.modulation(), 0, |g| g);
            let ess = 1.0 / belief.weights_current().iter().map(|w| w * w).sum::<f64>();
            println!("{t:>5}{gamma:>10.3}{mean:>10.3}{ess:>8.1}");
        }
        sent.push_back(channel.gen_feedback(&state, &schedule, &table, &mut fb_rng));
        channel.step(&mut state, &mut ch_rng, 1);
        let frame = if t + 1 >= delay {
            sent.pop_front()
        } else {
            None
        };
        belief.advance(
            0,
            &channel,
            frame.as_ref().map(|f| (&schedule, f)),
            &table,
            &mut bel_rng,
        )?;
    }
    Ok(())
}
