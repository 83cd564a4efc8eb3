//! Per-slot assignment of users, MCS and power to subchannels.

use std::io::Write;

use crate::mcs::{Combo, McsTable};
use crate::{Error, Result};

/// A user/MCS/power triple occupying one subchannel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Assignment {
    pub user: usize,
    /// Zero-based position in the MCS table.
    pub mcs: usize,
    pub power: f64,
}

/// One optional [`Assignment`] per subchannel, so at most one user/MCS pair
/// can occupy a subchannel.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Schedule {
    subs: Vec<Option<Assignment>>,
}

impl Schedule {
    /// All subchannels idle.
    pub fn idle(subchannels: usize) -> Self {
        Self {
            subs: vec![None; subchannels],
        }
    }

    pub fn from_assignments(subs: Vec<Option<Assignment>>) -> Self {
        Self { subs }
    }

    pub fn subchannels(&self) -> usize {
        self.subs.len()
    }

    pub fn get(&self, sub: usize) -> Option<&Assignment> {
        self.subs[sub].as_ref()
    }

    pub fn set(&mut self, sub: usize, a: Option<Assignment>) {
        self.subs[sub] = a;
    }

    pub fn assignments(&self) -> &[Option<Assignment>] {
        &self.subs
    }

    /// Scheduled `(subchannel, assignment)` pairs in subchannel order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &Assignment)> {
        self.subs
            .iter()
            .enumerate()
            .filter_map(|(n, a)| a.as_ref().map(|a| (n, a)))
    }

    pub fn combos(&self) -> impl Iterator<Item = (Combo, f64)> + '_ {
        self.iter()
            .map(|(n, a)| (Combo::new(n, a.user, a.mcs), a.power))
    }

    pub fn total_power(&self) -> f64 {
        self.iter().map(|(_, a)| a.power).sum()
    }

    pub fn scheduled_count(&self) -> usize {
        self.iter().count()
    }

    /// Assignment for `user` on `sub`, if that user is scheduled there.
    pub fn for_user(&self, sub: usize, user: usize) -> Option<&Assignment> {
        self.get(sub).filter(|a| a.user == user)
    }

    /// Checks indices, non-negative powers and the sum-power budget with
    /// absolute slack `tol`.
    pub fn validate(&self, users: usize, table: &McsTable, budget: f64, tol: f64) -> Result<()> {
        for (n, a) in self.iter() {
            if a.user >= users || a.mcs >= table.len() {
                return Err(Error::InvalidParam(format!(
                    "subchannel {n}: assignment {a:?} out of range"
                )));
            }
            if !(a.power >= 0.0) || !a.power.is_finite() {
                return Err(Error::InvalidParam(format!(
                    "subchannel {n}: invalid power {}",
                    a.power
                )));
            }
        }
        let total = self.total_power();
        if total > budget + tol {
            return Err(Error::InvalidParam(format!(
                "total power {total} exceeds budget {budget}"
            )));
        }
        Ok(())
    }

    /// Appends `slot,n,k,m,P` rows, with `m` one-based, for every scheduled
    /// subchannel.
    pub fn write_csv_rows<W: Write>(&self, slot: usize, wtr: &mut csv::Writer<W>) -> Result<()> {
        for (n, a) in self.iter() {
            wtr.write_record(&[
                slot.to_string(),
                n.to_string(),
                a.user.to_string(),
                (a.mcs + 1).to_string(),
                format!("{:.17e}", a.power),
            ])?;
        }
        Ok(())
    }

    pub const CSV_HEADER: [&'static str; 5] = ["slot", "n", "k", "m", "P"];
}
