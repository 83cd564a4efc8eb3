use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ofdma_greedy::config::RunConfig;
use ofdma_greedy::output::{write_json, write_records, RunSummary};
use ofdma_greedy::preset::{run_preset, Preset, PresetName};
use ofdma_greedy::sim::{aggregate, SchemeSummary, Simulator, WORKERS_ENV};

/// OFDMA downlink scheduling simulator driven by ACK/NAK feedback.
#[derive(Parser)]
#[command(version, after_help = format!("Worker threads default to the core count; set {WORKERS_ENV} to override."))]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration.
    Run {
        /// Flat `key = value` config file.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Run a figure sweep: fig-time-trace, fig-particles, fig-alpha,
    /// fig-N-scaled-power, fig-N-fixed-power, fig-K or fig-SNR.
    Preset {
        name: String,
        #[command(flatten)]
        common: Common,
        /// Output directory [default: out/<name>].
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// Config override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    realizations: Option<usize>,
    /// Comma-separated subset of proposed,cgg,ncgg,fprus.
    #[arg(long)]
    schemes: Option<String>,
}

impl Common {
    fn overrides(&self) -> Vec<String> {
        let mut o = self.set.clone();
        if let Some(s) = self.seed {
            o.push(format!("seed={s}"));
        }
        if let Some(r) = self.realizations {
            o.push(format!("realizations={r}"));
        }
        if let Some(s) = &self.schemes {
            o.push(format!("schemes={s}"));
        }
        o
    }
}

fn print_table(rows: &[SchemeSummary]) {
    println!(
        "{:<10}{:>12}{:>10}{:>12}{:>12}",
        "scheme", "goodput", "stderr", "power", "gap bound"
    );
    for s in rows {
        let gap = s
            .mean_gap_bound
            .map_or("-".to_string(), |g| format!("{g:.3e}"));
        println!(
            "{:<10}{:>12.4}{:>10.4}{:>12.2}{:>12}",
            s.scheme.as_str(),
            s.mean,
            s.stderr,
            s.mean_power,
            gap
        );
    }
}

fn run(cli: Cli) -> ofdma_greedy::Result<()> {
    match cli.command {
        Command::Run {
            config,
            common,
            out_dir,
        } => {
            let mut cfg = RunConfig::default();
            if let Some(p) = config {
                cfg.merge_str(&std::fs::read_to_string(p)?)?;
            }
            cfg.apply_overrides(common.overrides().iter().map(String::as_str))?;
            cfg.validate()?;
            let outputs = Simulator::new(cfg.clone())?.run()?;
            let summary = aggregate(&outputs, &cfg.schemes, cfg.warmup);
            write_records(&out_dir.join("records.csv"), &cfg, &outputs, &[])?;
            write_json(
                &out_dir.join("summary.json"),
                &RunSummary::new(&cfg, &summary, &outputs),
            )?;
            print_table(&summary);
            println!("wrote {}", out_dir.display());
        }
        Command::Preset {
            name,
            common,
            out_dir,
        } => {
            let preset = Preset::new(name.parse::<PresetName>()?);
            let out_dir = out_dir.unwrap_or_else(|| PathBuf::from("out").join(&name));
            for f in run_preset(&preset, &common.overrides(), &out_dir)? {
                println!("wrote {}", f.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
