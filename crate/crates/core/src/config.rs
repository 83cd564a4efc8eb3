//! Run configuration: defaults, flat `key = value` files and overrides.
//!
//! ```text
//! # four-user toy run
//! subchannels = 8
//! users = 4
//! mcs_count = 4
//! snr_db = 10
//! schemes = proposed, fprus
//! ```
//!
//! Lines starting with `#` are comments. Short aliases `N K L M S d T` are
//! accepted for the common sizes. Unknown keys are rejected.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::channel::ChannelParams;
use crate::gsra::{Kappa, SolverConfig};
use crate::mcs::{McsTable, Utility};
use crate::{Error, Result};

/// A scheduling scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Proposed,
    Cgg,
    Ncgg,
    Fprus,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Proposed, Scheme::Cgg, Scheme::Ncgg, Scheme::Fprus];

    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::Cgg => "cgg",
            Scheme::Ncgg => "ncgg",
            Scheme::Fprus => "fprus",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.as_str() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| {
                Error::Validation(format!(
                    "unknown scheme `{s}` (expected proposed, cgg, ncgg or fprus)"
                ))
            })
    }
}

/// Parses a comma-separated scheme list into canonical order without
/// duplicates.
pub fn parse_schemes(s: &str) -> Result<Vec<Scheme>> {
    let mut out = s
        .split(',')
        .filter(|x| !x.trim().is_empty())
        .map(Scheme::from_str)
        .collect::<Result<Vec<_>>>()?;
    out.sort();
    out.dedup();
    Ok(out)
}

/// `identity`, `capacity-log` or `weighted:w1,w2,...`.
pub fn parse_utility(s: &str) -> Result<Utility> {
    let s = s.trim();
    match s {
        "identity" => Ok(Utility::Identity),
        "capacity-log" => Ok(Utility::CapacityLog),
        _ => {
            let Some(ws) = s.strip_prefix("weighted:") else {
                return Err(Error::Validation(format!("unknown utility `{s}`")));
            };
            let w = ws
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Validation(format!("bad utility weight in `{s}`: {e}")))?;
            Ok(Utility::Weighted(w))
        }
    }
}

pub fn utility_name(u: &Utility) -> String {
    match u {
        Utility::Identity => "identity".into(),
        Utility::CapacityLog => "capacity-log".into(),
        Utility::Weighted(w) => {
            let parts: Vec<String> = w.iter().map(|x| x.to_string()).collect();
            format!("weighted:{}", parts.join(","))
        }
    }
}

fn ser_utility<S: Serializer>(u: &Utility, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&utility_name(u))
}

/// Where the MCS table comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum TableSource {
    /// First `mcs_count` QAM entries.
    Qam,
    /// Single `a = b = r = 1` entry.
    Capacity,
    File(PathBuf),
}

impl fmt::Display for TableSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TableSource::Qam => f.write_str("qam"),
            TableSource::Capacity => f.write_str("capacity"),
            TableSource::File(p) => write!(f, "{}", p.display()),
        }
    }
}

fn ser_display<T: fmt::Display, S: Serializer>(
    t: &T,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&t.to_string())
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub subchannels: usize,
    pub users: usize,
    pub taps: usize,
    /// Entries kept from the QAM table.
    pub mcs_count: usize,
    #[serde(serialize_with = "ser_display")]
    pub mcs_table: TableSource,
    pub alpha: f64,
    pub delay: usize,
    pub particles: usize,
    /// Average per-subchannel SNR in dB; the budget is `10^(snr/10)·N`
    /// unless `budget` is set.
    pub snr_db: f64,
    pub budget: Option<f64>,
    pub slots: usize,
    pub warmup: usize,
    pub realizations: usize,
    pub seed: u64,
    pub schemes: Vec<Scheme>,
    pub genie_particles: usize,
    /// Bisection tolerance as a fraction of `μ_max`.
    pub kappa_rel: f64,
    pub root_tol: f64,
    pub resample: bool,
    /// Use the bare transition mixture for the current particle weights.
    pub literal_mixture: bool,
    #[serde(serialize_with = "ser_utility")]
    pub utility: Utility,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            subchannels: 32,
            users: 8,
            taps: 2,
            mcs_count: 15,
            mcs_table: TableSource::Qam,
            alpha: 1e-3,
            delay: 1,
            particles: 30,
            snr_db: 10.0,
            budget: None,
            slots: 100,
            warmup: 50,
            realizations: 500,
            seed: 1,
            schemes: Scheme::ALL.to_vec(),
            genie_particles: 100,
            kappa_rel: 1e-4,
            root_tol: 1e-9,
            resample: false,
            literal_mixture: false,
            utility: Utility::Identity,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    v.parse::<T>()
        .map_err(|e| Error::Validation(format!("`{key}`: cannot parse `{v}`: {e}")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Validation(format!(
            "`{key}`: expected a boolean, got `{v}`"
        ))),
    }
}

impl RunConfig {
    /// Sets one key. Aliases resolve to their long names.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "subchannels" | "N" => self.subchannels = parse_num(key, v)?,
            "users" | "K" => self.users = parse_num(key, v)?,
            "taps" | "L" => self.taps = parse_num(key, v)?,
            "mcs_count" | "M" => self.mcs_count = parse_num(key, v)?,
            "mcs_table" => {
                self.mcs_table = match v {
                    "qam" => TableSource::Qam,
                    "capacity" => TableSource::Capacity,
                    path => TableSource::File(PathBuf::from(path)),
                }
            }
            "alpha" => self.alpha = parse_num(key, v)?,
            "delay" | "d" => self.delay = parse_num(key, v)?,
            "particles" | "S" => self.particles = parse_num(key, v)?,
            "snr_db" => self.snr_db = parse_num(key, v)?,
            "budget" => {
                self.budget = match v {
                    "" | "none" => None,
                    _ => Some(parse_num(key, v)?),
                }
            }
            "slots" | "T" => self.slots = parse_num(key, v)?,
            "warmup" => self.warmup = parse_num(key, v)?,
            "realizations" => self.realizations = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "schemes" => self.schemes = parse_schemes(v)?,
            "genie_particles" => self.genie_particles = parse_num(key, v)?,
            "kappa_rel" => self.kappa_rel = parse_num(key, v)?,
            "root_tol" => self.root_tol = parse_num(key, v)?,
            "resample" => self.resample = parse_bool(key, v)?,
            "literal_mixture" => self.literal_mixture = parse_bool(key, v)?,
            "utility" => self.utility = parse_utility(v)?,
            other => return Err(Error::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`. Does not validate.
    pub fn merge_str(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::ConfigParse {
                    line: i + 1,
                    msg: format!("expected `key = value`, got `{line}`"),
                });
            };
            self.set(k, v).map_err(|e| Error::ConfigParse {
                line: i + 1,
                msg: e.to_string(),
            })?;
        }
        Ok(())
    }

    /// Defaults overridden by `text`, validated.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut c = Self::default();
        c.merge_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse_str(&std::fs::read_to_string(path)?)
    }

    /// Applies `key=value` overrides, e.g. from the command line.
    pub fn apply_overrides<'a>(
        &mut self,
        overrides: impl IntoIterator<Item = &'a str>,
    ) -> Result<()> {
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| Error::Validation(format!("override `{o}` is not key=value")))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Validation(m));
        for (name, v) in [
            ("subchannels", self.subchannels),
            ("users", self.users),
            ("taps", self.taps),
            ("mcs_count", self.mcs_count),
            ("delay", self.delay),
            ("particles", self.particles),
            ("slots", self.slots),
            ("realizations", self.realizations),
            ("genie_particles", self.genie_particles),
        ] {
            if v == 0 {
                return fail(format!("{name} must be at least 1"));
            }
        }
        if self.warmup >= self.slots {
            return fail(format!(
                "warmup ({}) must be smaller than slots ({})",
                self.warmup, self.slots
            ));
        }
        if self.taps > self.subchannels {
            return fail(format!(
                "taps ({}) cannot exceed subchannels ({})",
                self.taps, self.subchannels
            ));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return fail(format!("alpha must lie in (0, 1], got {}", self.alpha));
        }
        if !self.snr_db.is_finite() {
            return fail("snr_db must be finite".into());
        }
        if let Some(b) = self.budget {
            if !(b > 0.0 && b.is_finite()) {
                return fail(format!("budget must be positive, got {b}"));
            }
        }
        if self.schemes.is_empty() {
            return fail("at least one scheme is required".into());
        }
        if !(self.kappa_rel > 0.0 && self.kappa_rel < 1.0) {
            return fail(format!(
                "kappa_rel must lie in (0, 1), got {}",
                self.kappa_rel
            ));
        }
        if !(self.root_tol > 0.0 && self.root_tol < 1.0) {
            return fail(format!(
                "root_tol must lie in (0, 1), got {}",
                self.root_tol
            ));
        }
        if self.mcs_table == TableSource::Qam && self.mcs_count > 15 {
            return fail(format!(
                "the QAM table has 15 entries, mcs_count is {}",
                self.mcs_count
            ));
        }
        Ok(())
    }

    /// Sum-power budget `X_con`.
    pub fn power_budget(&self) -> f64 {
        self.budget
            .unwrap_or_else(|| 10f64.powf(self.snr_db / 10.0) * self.subchannels as f64)
    }

    pub fn channel_params(&self) -> Result<ChannelParams> {
        ChannelParams::new(
            self.subchannels,
            self.taps,
            self.users,
            self.alpha,
            self.delay,
        )
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            budget: self.power_budget(),
            kappa: Kappa::RelativeToMuMax(self.kappa_rel),
            root_tol: self.root_tol,
            max_outer: 200,
        }
    }

    /// Loads the MCS table, truncated to `mcs_count` rows for QAM and files.
    pub fn mcs_table(&self) -> Result<McsTable> {
        let table = match &self.mcs_table {
            TableSource::Qam => McsTable::qam(15),
            TableSource::Capacity => return Ok(McsTable::capacity()),
            TableSource::File(p) => McsTable::read_csv(std::fs::File::open(p)?)?,
        };
        table.truncated(self.mcs_count.min(table.len()))
    }

    /// `(key, value)` pairs in key order, as echoed into output files.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let v = serde_json::to_value(self).expect("config serializes");
        v.as_object()
            .expect("config is an object")
            .iter()
            .map(|(k, v)| {
                let s = match v {
                    serde_json::Value::String(s) => s.clone(),
                    serde_json::Value::Null => "none".into(),
                    serde_json::Value::Array(a) => a
                        .iter()
                        .map(|x| x.as_str().map_or_else(|| x.to_string(), str::to_string))
                        .collect::<Vec<_>>()
                        .join(","),
                    other => other.to_string(),
                };
                (k.clone(), s)
            })
            .collect()
    }
}
