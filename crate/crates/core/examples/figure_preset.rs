//! Runs one figure sweep at reduced size and prints its plot data. Pass the
//! preset name, then `key=value` overrides.
//!
//! ```text
//! cargo run --release --example figure_preset -- fig-alpha realizations=4 N=8 K=4 M=4
//! ```

use ofdma_greedy::preset::{run_preset, Preset, PresetName};

fn main() -> ofdma_greedy::Result<()> {
    let mut args = std::env::args().skip(1);
    let name: PresetName = args.next().as_deref().unwrap_or("fig-SNR").parse()?;
    let mut overrides: Vec<String> = ["N=8", "K=4", "M=4", "realizations=4", "genie_particles=30"]
        .map(String::from)
        .to_vec();
    overrides.extend(args);

    let out = std::env::temp_dir().join(format!("ofdma-{name}"));
    let files = run_preset(&Preset::new(name), &overrides, &out)?;
    for f in &files {
        println!("wrote {}", f.display());
    }
    let plot = std::fs::read_to_string(out.join("plot.csv"))?;
    for line in plot.lines().filter(|l| !l.starts_with('#')) {
        println!("{line}");
    }
    Ok(())
}
