//! Modulation-and-coding table, packet error model and utilities.
//!
//! A packet sent with MCS `m` at power `P` over a subchannel with squared
//! gain `γ` fails with probability `min(1, a_m·exp(-b_m·P·γ))` and otherwise
//! delivers `r_m` bits. Utilities map that goodput to the quantity being
//! maximized.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest capacity-log argument accepted before clipping, `1 - 1e-12`.
pub const CAPACITY_LOG_MAX_ARG: f64 = 1.0 - 1e-12;

/// A `(subchannel, user, mcs)` triple. All three are zero-based positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Combo {
    pub sub: usize,
    pub user: usize,
    pub mcs: usize,
}

impl Combo {
    pub fn new(sub: usize, user: usize, mcs: usize) -> Self {
        Self { sub, user, mcs }
    }
}

/// One row of the MCS table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McsEntry {
    /// One-based MCS index.
    pub m: usize,
    /// Bits per packet.
    pub r: f64,
    /// Error-rate prefactor.
    pub a: f64,
    /// Error-rate exponent coefficient, per unit of power times squared gain.
    pub b: f64,
}

impl McsEntry {
    /// Packet error probability `min(1, a·exp(-b·P·γ))`.
    pub fn error_rate(&self, power: f64, gain: f64) -> f64 {
        (self.a * (-self.b * power * gain).exp()).min(1.0)
    }

    /// Natural log of [`Self::error_rate`], computed without underflow.
    pub fn ln_error_rate(&self, power: f64, gain: f64) -> f64 {
        (self.a.ln() - self.b * power * gain).min(0.0)
    }

    /// Expected delivered bits, `(1 - ε)·r`.
    pub fn goodput(&self, power: f64, gain: f64) -> f64 {
        (1.0 - self.error_rate(power, gain)) * self.r
    }
}

/// Ordered MCS table; rates strictly increase with the index.
#[derive(Debug, Clone, PartialEq)]
pub struct McsTable {
    entries: Vec<McsEntry>,
}

impl McsTable {
    pub fn new(entries: Vec<McsEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidTable("table is empty".into()));
        }
        for (pos, e) in entries.iter().enumerate() {
            if e.m != pos + 1 {
                return Err(Error::InvalidTable(format!(
                    "row {} has index m={}, expected {}",
                    pos + 1,
                    e.m,
                    pos + 1
                )));
            }
            if !(e.r > 0.0 && e.a > 0.0 && e.b > 0.0)
                || !(e.r.is_finite() && e.a.is_finite() && e.b.is_finite())
            {
                return Err(Error::InvalidTable(format!(
                    "m={}: r, a and b must be positive and finite",
                    e.m
                )));
            }
        }
        if entries.windows(2).any(|w| w[1].r <= w[0].r) {
            return Err(Error::InvalidTable(
                "rates must strictly increase with m".into(),
            ));
        }
        Ok(Self { entries })
    }

    /// Uncoded `2^(m+1)`-QAM for `m = 1..=count`: `r = m + 1`, `a = 1`,
    /// `b = 1.5 / (2^(m+1) - 1)`.
    pub fn qam(count: usize) -> Self {
        let entries = (1..=count)
            .map(|m| McsEntry {
                m,
                r: (m + 1) as f64,
                a: 1.0,
                b: 1.5 / ((1u64 << (m + 1)) as f64 - 1.0),
            })
            .collect();
        Self { entries }
    }

    /// The 15-entry QAM table.
    pub fn default_qam() -> Self {
        Self::qam(15)
    }

    /// Single-entry table with `a = b = r = 1`, used with the capacity-log utility.
    pub fn capacity() -> Self {
        Self {
            entries: vec![McsEntry {
                m: 1,
                r: 1.0,
                a: 1.0,
                b: 1.0,
            }],
        }
    }

    /// First `count` rows.
    pub fn truncated(&self, count: usize) -> Result<Self> {
        if count == 0 || count > self.entries.len() {
            return Err(Error::InvalidTable(format!(
                "cannot keep {count} of {} entries",
                self.entries.len()
            )));
        }
        Ok(Self {
            entries: self.entries[..count].to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[McsEntry] {
        &self.entries
    }

    /// Entry at zero-based position `pos`.
    pub fn get(&self, pos: usize) -> &McsEntry {
        &self.entries[pos]
    }

    /// Reads CSV rows `m,r,a,b` (with header).
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let entries = rdr
            .deserialize()
            .collect::<std::result::Result<Vec<McsEntry>, _>>()?;
        Self::new(entries)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        for e in &self.entries {
            wtr.serialize(e)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Utility applied to per-assignment goodput.
#[derive(Debug, Clone, PartialEq)]
pub enum Utility {
    /// `U(x) = x`: sum-goodput.
    Identity,
    /// `U(x) = w_k·x` with one positive weight per user.
    Weighted(Vec<f64>),
    /// `U(x) = ln(1 - ln(1 - x))` on `[0, 1)`. Paired with the single-entry
    /// `a = b = r = 1` table this turns expected utility into `E ln(1 + Pγ)`.
    CapacityLog,
}

/// Utility value and scaled derivatives at the goodput `(1 - ε)·r`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct UtilityParts {
    pub value: f64,
    /// `U'(g)·ε`.
    pub slope: f64,
    /// `U''(g)·ε²`.
    pub curvature: f64,
}

impl Utility {
    /// Checks the utility against a table and user count.
    pub fn validate(&self, table: &McsTable, users: usize) -> Result<()> {
        match self {
            Utility::Identity => Ok(()),
            Utility::Weighted(w) => {
                if w.len() < users {
                    return Err(Error::InvalidParam(format!(
                        "{} utility weights for {users} users",
                        w.len()
                    )));
                }
                if w.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                    return Err(Error::InvalidParam(
                        "utility weights must be positive".into(),
                    ));
                }
                Ok(())
            }
            Utility::CapacityLog => {
                let e = table.get(0);
                if table.len() != 1 || e.r != 1.0 || e.a > 1.0 {
                    return Err(Error::InvalidParam(
                        "capacity-log utility needs a single-entry table with r = 1 and a <= 1"
                            .into(),
                    ));
                }
                Ok(())
            }
        }
    }

    fn weight(&self, user: usize) -> f64 {
        match self {
            Utility::Weighted(w) => w[user],
            _ => 1.0,
        }
    }

    /// Slope of a linear utility, `None` for the capacity-log form.
    #[inline]
    pub(crate) fn linear_weight(&self, user: usize) -> Option<f64> {
        match self {
            Utility::CapacityLog => None,
            _ => Some(self.weight(user)),
        }
    }

    fn check_arg(&self, g: f64) -> Result<f64> {
        if !(g >= 0.0) || !g.is_finite() {
            return Err(Error::InvalidParam(format!(
                "goodput {g} must be finite and non-negative"
            )));
        }
        if matches!(self, Utility::CapacityLog) {
            if g >= 1.0 {
                return Err(Error::UtilityDomain(g));
            }
            return Ok(g.min(CAPACITY_LOG_MAX_ARG));
        }
        Ok(g)
    }

    /// `U_{n,k,m}(g)`.
    pub fn value(&self, c: Combo, g: f64) -> Result<f64> {
        let g = self.check_arg(g)?;
        Ok(match self {
            Utility::CapacityLog => (1.0 - (1.0 - g).ln()).ln(),
            _ => self.weight(c.user) * g,
        })
    }

    /// `U'_{n,k,m}(g)`.
    pub fn derivative(&self, c: Combo, g: f64) -> Result<f64> {
        let g = self.check_arg(g)?;
        Ok(self.derivative_unchecked(c.user, g))
    }

    /// `U''_{n,k,m}(g)`.
    pub fn second_derivative(&self, _c: Combo, g: f64) -> Result<f64> {
        let g = self.check_arg(g)?;
        Ok(match self {
            Utility::CapacityLog => {
                let y = 1.0 - g;
                let l = 1.0 - y.ln();
                (l - 1.0) / (y * l).powi(2)
            }
            _ => 0.0,
        })
    }

    pub(crate) fn derivative_unchecked(&self, user: usize, g: f64) -> f64 {
        match self {
            Utility::CapacityLog => {
                let y = 1.0 - g.min(CAPACITY_LOG_MAX_ARG);
                1.0 / (y * (1.0 - y.ln()))
            }
            _ => self.weight(user),
        }
    }

    /// Evaluates the utility from the log error rate so the capacity-log
    /// branch stays finite at any power.
    #[inline]
    pub(crate) fn parts(&self, user: usize, ln_eps: f64, rate: f64) -> UtilityParts {
        let eps = ln_eps.exp();
        match self {
            Utility::CapacityLog => {
                let l = 1.0 - ln_eps;
                UtilityParts {
                    value: l.ln(),
                    slope: 1.0 / l,
                    curvature: -ln_eps / (l * l),
                }
            }
            _ => {
                let w = self.weight(user);
                UtilityParts {
                    value: w * (1.0 - eps) * rate,
                    slope: w * eps,
                    curvature: 0.0,
                }
            }
        }
    }
}
