//! Output files: slot-record CSV, JSON summaries and plot data.
//!
//! Every file starts with the resolved configuration (CSV files as `#`
//! comment lines), and files are written to a temporary sibling and renamed
//! into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::sim::{RealizationOutput, SchemeSummary, SlotRecord};
use crate::Result;

/// Which goodput the summary means are computed from.
pub const GOODPUT_METRIC: &str = "expected";

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp: PathBuf = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn header_lines(cfg: &RunConfig, extra: &[(&str, String)]) -> String {
    let mut s = String::new();
    for (k, v) in cfg.to_pairs() {
        s.push_str(&format!("# {k} = {v}\n"));
    }
    s.push_str(&format!("# goodput_metric = {GOODPUT_METRIC}\n"));
    for (k, v) in extra {
        s.push_str(&format!("# {k} = {v}\n"));
    }
    s
}

/// Slot records as CSV text, preceded by the configuration.
pub fn records_csv(
    cfg: &RunConfig,
    outputs: &[RealizationOutput],
    extra: &[(&str, String)],
) -> Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(SlotRecord::CSV_HEADER)?;
    for o in outputs {
        for r in &o.records {
            wtr.write_record(&[
                r.realization.to_string(),
                r.slot.to_string(),
                r.scheme.to_string(),
                r.goodput_expected.to_string(),
                r.goodput_realized.to_string(),
                r.total_power.to_string(),
                r.gap_bound.map_or(String::new(), |g| g.to_string()),
            ])?;
        }
    }
    let body = String::from_utf8(wtr.into_inner().map_err(|e| e.into_error())?)
        .expect("csv output is utf-8");
    Ok(header_lines(cfg, extra) + &body)
}

pub fn write_records(
    path: &Path,
    cfg: &RunConfig,
    outputs: &[RealizationOutput],
    extra: &[(&str, String)],
) -> Result<()> {
    write_atomic(path, records_csv(cfg, outputs, extra)?.as_bytes())
}

/// JSON summary of one run.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary<'a> {
    pub config: &'a RunConfig,
    pub seed: u64,
    pub power_budget: f64,
    pub goodput_metric: &'static str,
    pub schemes: &'a [SchemeSummary],
    pub degenerate_resets: usize,
}

impl<'a> RunSummary<'a> {
    pub fn new(
        config: &'a RunConfig,
        schemes: &'a [SchemeSummary],
        outputs: &[RealizationOutput],
    ) -> Self {
        Self {
            config,
            seed: config.seed,
            power_budget: config.power_budget(),
            goodput_metric: GOODPUT_METRIC,
            schemes,
            degenerate_resets: outputs.iter().map(|o| o.degenerate_resets).sum(),
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// One sweep point of a plot-data file.
#[derive(Debug, Clone)]
pub struct PlotRow {
    pub x: f64,
    pub summaries: Vec<SchemeSummary>,
}

/// `x,<scheme>_mean,<scheme>_stderr,...` rows; with `gap_column` the mean
/// certificate of the proposed scheme is appended.
pub fn plot_csv(
    base: &RunConfig,
    x_name: &str,
    rows: &[PlotRow],
    gap_column: bool,
    extra: &[(&str, String)],
) -> Result<String> {
    let schemes = &base.schemes;
    let mut wtr = csv::Writer::from_writer(Vec::new());
    let mut header = vec![x_name.to_string()];
    for s in schemes {
        header.push(format!("{s}_mean"));
        header.push(format!("{s}_stderr"));
    }
    if gap_column {
        header.push("gap_bound_mean".into());
    }
    wtr.write_record(&header)?;
    for row in rows {
        let mut rec = vec![row.x.to_string()];
        for s in schemes {
            match row.summaries.iter().find(|x| x.scheme == *s) {
                Some(x) => {
                    rec.push(x.mean.to_string());
                    rec.push(x.stderr.to_string());
                }
                None => rec.extend([String::new(), String::new()]),
            }
        }
        if gap_column {
            let gap = row.summaries.iter().find_map(|x| x.mean_gap_bound);
            rec.push(gap.map_or(String::new(), |g| g.to_string()));
        }
        wtr.write_record(&rec)?;
    }
    let body = String::from_utf8(wtr.into_inner().map_err(|e| e.into_error())?)
        .expect("csv output is utf-8");
    Ok(header_lines(base, extra) + &body)
}
