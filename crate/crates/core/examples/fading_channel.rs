//! Simulates the tap process for one user and compares the empirical
//! autocorrelation of a subchannel response with `(1-α)^τ`.
//!
//! ```text
//! cargo run --release --example fading_channel -- 0.01
//! ```

use num_complex::Complex64;
use ofdma_greedy::channel::{Channel, ChannelParams};
use ofdma_greedy::rng::{stream, Purpose};

fn main() -> ofdma_greedy::Result<()> {
    let alpha: f64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(0.01);
    let channel = Channel::new(ChannelParams::new(32, 2, 1, alpha, 1)?);
    let mut rng = stream(1, 0, Purpose::Channel, 0);
    let mut state = channel.init_state(&mut rng);

    let slots = 200_000;
    let mut h = Vec::with_capacity(slots);
    for _ in 0..slots {
        h.push(channel.modulation().response(0, &state.taps[0]));
        channel.step(&mut state, &mut rng, 1);
    }
    let power = h.iter().map(|x| x.norm_sqr()).sum::<f64>() / slots as f64;
    println!("alpha = {alpha}, mean |H[0]|^2 = {power:.4} (unit by construction)");
    println!("{:>6}{:>12}{:>12}", "lag", "empirical", "(1-a)^lag");
    for lag in [1usize, 5, 10, 50, 100, 500] {
        let c: Complex64 = (0..slots - lag)
            .map(|t| h[t + lag] * h[t].conj())
            .sum::<Complex64>()
            / (slots - lag) as f64;
        println!(
            "{:>6}{:>12.4}{:>12.4}",
            lag,
            c.re / power,
            (1.0 - alpha).powi(lag as i32)
        );
    }
    Ok(())
}
