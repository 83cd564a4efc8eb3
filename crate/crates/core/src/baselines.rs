//! Reference schedulers.
//!
//! * Causal genie: knows the true taps `d` slots back and schedules on the
//!   exact conditional distribution of the current gains.
//! * Non-causal genie: knows the current gains.
//! * FP-RUS: a uniformly random user per subchannel, equal power, and the
//!   MCS with the best prior expected goodput.

use rand::Rng;

use crate::belief::{transition_posterior, SsgPosterior};
use crate::channel::{stationary_taps, Channel, ChannelState};
use crate::gsra::{greedy_allocate, Allocation, SolverConfig};
use crate::mcs::{McsEntry, McsTable, Utility};
use crate::schedule::{Assignment, Schedule};
use crate::{Error, Result};

/// Greedy allocation that maps a dead channel (no usable gain anywhere) to
/// an idle schedule.
pub fn allocate_or_idle(
    posteriors: &[SsgPosterior],
    mcs: &McsTable,
    utility: &Utility,
    config: &SolverConfig,
) -> Result<Option<Allocation>> {
    match greedy_allocate(posteriors, mcs, utility, config) {
        Ok(a) => Ok(Some(a)),
        Err(Error::ChannelDead) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Gain posteriors of the causal genie. `lagged` is the true state `d`
/// slots back, or `None` before that slot exists, in which case the
/// stationary prior is sampled.
pub fn cgg_posteriors<R: Rng + ?Sized>(
    lagged: Option<&ChannelState>,
    channel: &Channel,
    samples: usize,
    rng: &mut R,
) -> Vec<SsgPosterior> {
    let params = channel.params();
    let modulation = channel.modulation();
    (0..params.users)
        .map(|k| match lagged {
            Some(state) => transition_posterior(
                &state.taps[k],
                params,
                params.delay,
                samples,
                modulation,
                rng,
            ),
            None => {
                let draws: Vec<Vec<f64>> = (0..samples)
                    .map(|_| modulation.gains(&stationary_taps(params, rng)))
                    .collect();
                SsgPosterior::from_samples(&draws)
            }
        })
        .collect()
}

/// Causal genie schedule. Returns `None` for the allocation details when the
/// schedule is idle because no candidate has usable gain.
pub fn cgg_allocate<R: Rng + ?Sized>(
    lagged: Option<&ChannelState>,
    channel: &Channel,
    mcs: &McsTable,
    utility: &Utility,
    config: &SolverConfig,
    samples: usize,
    rng: &mut R,
) -> Result<(Schedule, Option<Allocation>)> {
    let posts = cgg_posteriors(lagged, channel, samples, rng);
    let n = channel.params().subchannels;
    let a = allocate_or_idle(&posts, mcs, utility, config)?;
    Ok((
        a.as_ref()
            .map_or_else(|| Schedule::idle(n), |a| a.schedule.clone()),
        a,
    ))
}

/// Point-mass posteriors at the true current gains.
pub fn ncgg_posteriors(state: &ChannelState, channel: &Channel) -> Vec<SsgPosterior> {
    channel
        .subchannel_gains(state)
        .iter()
        .map(|g| SsgPosterior::point_mass(g))
        .collect()
}

/// Non-causal genie schedule.
pub fn ncgg_allocate(
    state: &ChannelState,
    channel: &Channel,
    mcs: &McsTable,
    utility: &Utility,
    config: &SolverConfig,
) -> Result<(Schedule, Option<Allocation>)> {
    let posts = ncgg_posteriors(state, channel);
    let n = channel.params().subchannels;
    let a = allocate_or_idle(&posts, mcs, utility, config)?;
    Ok((
        a.as_ref()
            .map_or_else(|| Schedule::idle(n), |a| a.schedule.clone()),
        a,
    ))
}

/// `E{min(1, a·e^{-bPγ})}` for `γ ~ Exp(1)`.
pub fn prior_error_rate(entry: &McsEntry, power: f64) -> f64 {
    let bp = entry.b * power;
    if entry.a <= 1.0 {
        entry.a / (1.0 + bp)
    } else if bp == 0.0 {
        1.0
    } else {
        // Error rate saturates at 1 for γ below ln(a)/(bP).
        let g0 = entry.a.ln() / bp;
        1.0 - (-g0).exp() * bp / (1.0 + bp)
    }
}

/// Expected goodput of one packet under the stationary prior.
pub fn prior_goodput(entry: &McsEntry, power: f64) -> f64 {
    entry.r * (1.0 - prior_error_rate(entry, power))
}

/// Fixed-power random user scheduling.
#[derive(Debug, Clone, PartialEq)]
pub struct FpRus {
    subchannels: usize,
    users: usize,
    power: f64,
    mcs: usize,
}

impl FpRus {
    /// Equal split of `budget`; the MCS maximizes prior expected goodput,
    /// lowest index on ties.
    pub fn new(subchannels: usize, users: usize, mcs: &McsTable, budget: f64) -> Self {
        let power = budget / subchannels as f64;
        let mut best = 0;
        let mut best_g = prior_goodput(mcs.get(0), power);
        for (pos, e) in mcs.entries().iter().enumerate().skip(1) {
            let g = prior_goodput(e, power);
            if g > best_g {
                best = pos;
                best_g = g;
            }
        }
        Self {
            subchannels,
            users,
            power,
            mcs: best,
        }
    }

    /// Zero-based MCS position used on every subchannel.
    pub fn mcs(&self) -> usize {
        self.mcs
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    /// Draws one user per subchannel.
    pub fn allocate<R: Rng + ?Sized>(&self, rng: &mut R) -> Schedule {
        let subs = (0..self.subchannels)
            .map(|_| {
                Some(Assignment {
                    user: rng.random_range(0..self.users),
                    mcs: self.mcs,
                    power: self.power,
                })
            })
            .collect();
        Schedule::from_assignments(subs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelParams;
    use crate::rng::{stream, Purpose};

    #[test]
    fn fprus_mcs_choice() {
        let t = McsTable::default_qam();
        let f = FpRus::new(32, 8, &t, 320.0);
        assert_eq!(f.mcs(), 1);
        assert!((prior_goodput(t.get(1), 10.0) - 3.0 * 15.0 / 22.0).abs() < 1e-12);
        assert!((prior_goodput(t.get(0), 10.0) - 2.0 * 5.0 / 6.0).abs() < 1e-12);
        assert!((prior_goodput(t.get(2), 10.0) - 2.0).abs() < 1e-12);
        // Zero power: all goodputs vanish and the first entry is kept.
        assert_eq!(FpRus::new(4, 2, &t, 0.0).mcs(), 0);
    }

    #[test]
    fn prior_error_rate_matches_sampling() {
        let e = McsEntry {
            m: 1,
            r: 1.0,
            a: 2.5,
            b: 0.3,
        };
        let mut rng = stream(1, 0, Purpose::Genie, 0);
        let n = 200_000;
        let mc: f64 = (0..n)
            .map(|_| {
                let g: f64 = -(1.0 - rng.random::<f64>()).ln();
                e.error_rate(2.0, g)
            })
            .sum::<f64>()
            / n as f64;
        assert!((mc - prior_error_rate(&e, 2.0)).abs() < 3e-3);
        let e1 = McsEntry { a: 0.5, ..e };
        assert!((prior_error_rate(&e1, 2.0) - 0.5 / 1.6).abs() < 1e-15);
    }

    #[test]
    fn fprus_schedules_every_subchannel_uniformly() {
        let t = McsTable::qam(4);
        let f = FpRus::new(4, 4, &t, 40.0);
        let mut rng = stream(2, 0, Purpose::RandomUsers, 0);
        let mut counts = [0usize; 4];
        let slots = 10_000;
        for _ in 0..slots {
            let s = f.allocate(&mut rng);
            assert_eq!(s.scheduled_count(), 4);
            assert!((s.total_power() - 40.0).abs() < 1e-12);
            counts[s.get(0).unwrap().user] += 1;
        }
        let p = 0.25;
        let sd = (slots as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - slots as f64 * p).abs() < 4.0 * sd, "{counts:?}");
        }
    }

    #[test]
    fn ncgg_is_deterministic_and_uses_budget() {
        let ch = Channel::new(ChannelParams::new(4, 2, 2, 1e-3, 1).unwrap());
        let mut rng = stream(3, 0, Purpose::Channel, 0);
        let state = ch.init_state(&mut rng);
        let t = McsTable::qam(4);
        let cfg = SolverConfig::new(40.0);
        let (a, _) = ncgg_allocate(&state, &ch, &t, &Utility::Identity, &cfg).unwrap();
        let (b, _) = ncgg_allocate(&state, &ch, &t, &Utility::Identity, &cfg).unwrap();
        assert_eq!(a, b);
        a.validate(2, &t, 40.0, 1e-6).unwrap();
        assert!((a.total_power() - 40.0).abs() < 1e-6);
    }

    #[test]
    fn cgg_collapses_without_innovation() {
        // Relative tap spread after one step is about sqrt(2α).
        let ch = Channel::new(ChannelParams::new(4, 2, 2, 1e-24, 1).unwrap());
        let mut rng = stream(4, 0, Purpose::Channel, 0);
        let state = ch.init_state(&mut rng);
        let t = McsTable::qam(4);
        let cfg = SolverConfig::new(40.0);
        let mut g = stream(4, 0, Purpose::Genie, 0);
        let (c, _) =
            cgg_allocate(Some(&state), &ch, &t, &Utility::Identity, &cfg, 20, &mut g).unwrap();
        let (n, _) = ncgg_allocate(&state, &ch, &t, &Utility::Identity, &cfg).unwrap();
        assert_eq!(c.scheduled_count(), n.scheduled_count());
        for ((_, x), (_, y)) in c.iter().zip(n.iter()) {
            assert_eq!((x.user, x.mcs), (y.user, y.mcs));
            assert!((x.power - y.power).abs() < 1e-6, "{x:?} {y:?}");
        }
    }

    #[test]
    fn cgg_memoryless_posterior_is_prior() {
        let ch = Channel::new(ChannelParams::new(2, 1, 1, 1.0, 1).unwrap());
        let mut rng = stream(5, 0, Purpose::Channel, 0);
        let state = ch.init_state(&mut rng);
        let mut g = stream(5, 0, Purpose::Genie, 0);
        let posts = cgg_posteriors(Some(&state), &ch, 50_000, &mut g);
        // Mean gain 1 and second moment 2 under the exponential prior.
        assert!((posts[0].mean(0) - 1.0).abs() < 0.03);
        assert!((posts[0].expect(0, |x| x * x) - 2.0).abs() < 0.1);
    }
}
