//! Prints the QAM table and the MCS that maximizes goodput at a few
//! received SNRs, for a unit gain.
//!
//! ```text
//! cargo run --example mcs_table -- 8
//! ```

use ofdma_greedy::mcs::McsTable;

fn main() {
    let count = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(15);
    let table = McsTable::qam(count);
    println!("{:>3}{:>6}{:>6}{:>14}", "m", "r", "a", "b");
    for e in table.entries() {
        println!("{:>3}{:>6}{:>6}{:>14.6e}", e.m, e.r, e.a, e.b);
    }

    println!();
    println!(
        "{:>8}{:>6}{:>12}{:>12}",
        "snr_db", "best", "goodput", "error"
    );
    for snr_db in [0.0, 5.0, 10.0, 15.0, 20.0, 30.0] {
        let p = 10f64.powf(snr_db / 10.0);
        let (pos, e) = table
            .entries()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.goodput(p, 1.0).total_cmp(&b.1.goodput(p, 1.0)))
            .unwrap();
        println!(
            "{:>8.1}{:>6}{:>12.4}{:>12.3e}",
            snr_db,
            pos + 1,
            e.goodput(p, 1.0),
            e.error_rate(p, 1.0)
        );
    }
}
