//! Parameter sweeps behind each figure.
//!
//! A preset fixes a few base settings, then varies one parameter. For each
//! point it writes the slot records, and at the end a JSON summary and a
//! `plot.csv` with one row per point (`x`, per-scheme mean and standard
//! error). The time-trace preset has one row per slot instead.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{plot_csv, write_atomic, write_json, write_records, PlotRow};
use crate::sim::{aggregate, RealizationOutput, SchemeSummary, Simulator};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PresetName {
    TimeTrace,
    Particles,
    Alpha,
    NScaledPower,
    NFixedPower,
    Users,
    Snr,
}

impl PresetName {
    pub const ALL: [PresetName; 7] = [
        PresetName::TimeTrace,
        PresetName::Particles,
        PresetName::Alpha,
        PresetName::NScaledPower,
        PresetName::NFixedPower,
        PresetName::Users,
        PresetName::Snr,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PresetName::TimeTrace => "fig-time-trace",
            PresetName::Particles => "fig-particles",
            PresetName::Alpha => "fig-alpha",
            PresetName::NScaledPower => "fig-N-scaled-power",
            PresetName::NFixedPower => "fig-N-fixed-power",
            PresetName::Users => "fig-K",
            PresetName::Snr => "fig-SNR",
        }
    }
}

impl fmt::Display for PresetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PresetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PresetName::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = PresetName::ALL.iter().map(|p| p.as_str()).collect();
                Error::Validation(format!(
                    "unknown preset `{s}`; expected one of {}",
                    names.join(", ")
                ))
            })
    }
}

/// A sweep: base overrides plus one override set per point.
#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: PresetName,
    /// Column name of the swept quantity.
    pub x_name: &'static str,
    pub base: Vec<String>,
    pub points: Vec<(f64, Vec<String>)>,
    /// Add the proposed scheme's mean gap certificate to the plot data.
    pub gap_column: bool,
}

fn sweep<T: fmt::Display + Copy + Into<f64>>(key: &str, values: &[T]) -> Vec<(f64, Vec<String>)> {
    values
        .iter()
        .map(|&v| (v.into(), vec![format!("{key}={v}")]))
        .collect()
}

impl Preset {
    pub fn new(name: PresetName) -> Self {
        let (x_name, base, points, gap_column): (_, Vec<&str>, _, _) = match name {
            PresetName::TimeTrace => (
                "slot",
                vec!["realizations=1", "warmup=0"],
                vec![(0.0, vec![])],
                false,
            ),
            PresetName::Particles => (
                "particles",
                vec![],
                sweep("particles", &[1u32, 2, 5, 10, 20, 30, 50]),
                false,
            ),
            PresetName::Alpha => (
                "alpha",
                vec![],
                sweep("alpha", &[1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 1e-1]),
                false,
            ),
            PresetName::NScaledPower => (
                "subchannels",
                vec!["snr_db=10"],
                sweep("subchannels", &[8u32, 16, 32, 64]),
                false,
            ),
            PresetName::NFixedPower => (
                "subchannels",
                vec!["budget=320"],
                sweep("subchannels", &[8u32, 16, 32, 64]),
                false,
            ),
            PresetName::Users => ("users", vec![], sweep("users", &[2u32, 4, 8, 16]), false),
            PresetName::Snr => (
                "snr_db",
                vec![],
                sweep("snr_db", &[0.0, 5.0, 10.0, 15.0, 20.0]),
                true,
            ),
        };
        Self {
            name,
            x_name,
            base: base.into_iter().map(String::from).collect(),
            points,
            gap_column,
        }
    }

    /// Resolved configuration of each point. `overrides` sit between the
    /// preset's base settings and the swept value.
    pub fn point_configs(&self, overrides: &[String]) -> Result<Vec<(f64, RunConfig)>> {
        self.points
            .iter()
            .map(|(x, point)| {
                let mut c = RunConfig::default();
                c.apply_overrides(self.base.iter().map(String::as_str))?;
                c.apply_overrides(overrides.iter().map(String::as_str))?;
                c.apply_overrides(point.iter().map(String::as_str))?;
                c.validate()?;
                Ok((*x, c))
            })
            .collect()
    }
}

#[derive(Debug, Serialize)]
struct PointSummary<'a> {
    x: f64,
    config: &'a RunConfig,
    seed: u64,
    power_budget: f64,
    schemes: &'a [SchemeSummary],
}

#[derive(Debug, Serialize)]
struct PresetSummary<'a> {
    preset: String,
    x_name: &'a str,
    goodput_metric: &'static str,
    points: Vec<PointSummary<'a>>,
}

/// Per-slot statistics across realizations, one row per slot.
fn time_rows(cfg: &RunConfig, outputs: &[RealizationOutput]) -> Vec<PlotRow> {
    (1..=cfg.slots)
        .map(|slot| {
            let only: Vec<RealizationOutput> = outputs
                .iter()
                .map(|o| RealizationOutput {
                    records: o
                        .records
                        .iter()
                        .filter(|r| r.slot == slot)
                        .cloned()
                        .collect(),
                    ..o.clone()
                })
                .collect();
            PlotRow {
                x: slot as f64,
                summaries: aggregate(&only, &cfg.schemes, slot - 1),
            }
        })
        .collect()
}

/// Runs the sweep and returns the paths written.
pub fn run_preset(preset: &Preset, overrides: &[String], out_dir: &Path) -> Result<Vec<PathBuf>> {
    let configs = preset.point_configs(overrides)?;
    let mut files = Vec::new();
    let mut results = Vec::with_capacity(configs.len());
    for (i, (x, cfg)) in configs.iter().enumerate() {
        let outputs = Simulator::new(cfg.clone())?.run()?;
        let path = out_dir.join(format!("records_{i:02}_{}_{x}.csv", preset.x_name));
        let extra = [
            ("preset", preset.name.to_string()),
            (preset.x_name, x.to_string()),
        ];
        write_records(&path, cfg, &outputs, &extra)?;
        files.push(path);
        let summary = aggregate(&outputs, &cfg.schemes, cfg.warmup);
        results.push((outputs, summary));
    }

    let summary = PresetSummary {
        preset: preset.name.to_string(),
        x_name: preset.x_name,
        goodput_metric: crate::output::GOODPUT_METRIC,
        points: configs
            .iter()
            .zip(&results)
            .map(|((x, cfg), (_, s))| PointSummary {
                x: *x,
                config: cfg,
                seed: cfg.seed,
                power_budget: cfg.power_budget(),
                schemes: s,
            })
            .collect(),
    };
    let path = out_dir.join("summary.json");
    write_json(&path, &summary)?;
    files.push(path);

    let (base_cfg, rows) = if preset.name == PresetName::TimeTrace {
        (&configs[0].1, time_rows(&configs[0].1, &results[0].0))
    } else {
        let rows = configs
            .iter()
            .zip(&results)
            .map(|((x, _), (_, s))| PlotRow {
                x: *x,
                summaries: s.clone(),
            })
            .collect();
        (&configs[0].1, rows)
    };
    let extra = [("preset", preset.name.to_string())];
    let text = plot_csv(base_cfg, preset.x_name, &rows, preset.gap_column, &extra)?;
    let path = out_dir.join("plot.csv");
    write_atomic(&path, text.as_bytes())?;
    files.push(path);
    Ok(files)
}
