//! Slot loop and goodput statistics.
//!
//! Within a realization every scheme sees the same channel trajectory and,
//! slot by slot, the same uniforms for packet success, so scheme
//! differences are paired. Only the proposed scheme's feedback is fed back
//! into a belief.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::Serialize;

use crate::baselines::{allocate_or_idle, cgg_allocate, ncgg_allocate, FpRus};
use crate::belief::{Belief, SsgPosterior};
use crate::channel::{Channel, ChannelState, Feedback, FeedbackFrame};
use crate::config::{RunConfig, Scheme};
use crate::gsra::SolverConfig;
use crate::mcs::{McsTable, Utility};
use crate::rng::{stream, Purpose};
use crate::schedule::Schedule;
use crate::{Error, Result};

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "OFDMA_WORKERS";

/// Outcome of one scheme in one slot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlotRecord {
    pub realization: usize,
    /// One-based slot index.
    pub slot: usize,
    pub scheme: Scheme,
    /// `Σ (1 - ε)·r` under the true gains.
    pub goodput_expected: f64,
    /// Bits of the packets that were acknowledged.
    pub goodput_realized: f64,
    pub total_power: f64,
    /// Gap certificate of the greedy solve; proposed scheme only.
    pub gap_bound: Option<f64>,
}

impl SlotRecord {
    pub const CSV_HEADER: [&'static str; 7] = [
        "realization",
        "slot",
        "scheme",
        "goodput_expected",
        "goodput_realized",
        "total_power",
        "gap_bound",
    ];
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealizationOutput {
    pub realization: usize,
    pub records: Vec<SlotRecord>,
    /// Hash of the true channel trajectory.
    pub channel_digest: u64,
    /// Belief weight resets triggered by impossible observations.
    pub degenerate_resets: usize,
}

/// Everything that is fixed across realizations.
#[derive(Debug, Clone)]
pub struct Simulator {
    config: RunConfig,
    table: McsTable,
    channel: Channel,
    solver: SolverConfig,
    fprus: FpRus,
}

/// FNV-1a over the bit patterns of every tap.
fn digest_state(mut h: u64, state: &ChannelState) -> u64 {
    for taps in &state.taps {
        for x in taps {
            for v in [x.re.to_bits(), x.im.to_bits()] {
                for byte in v.to_le_bytes() {
                    h ^= byte as u64;
                    h = h.wrapping_mul(0x0000_0100_0000_01b3);
                }
            }
        }
    }
    h
}

fn realized(frame: &FeedbackFrame, schedule: &Schedule, table: &McsTable) -> f64 {
    schedule
        .iter()
        .filter(|(n, a)| frame.get(*n, a.user) == Feedback::Ack)
        .map(|(_, a)| table.get(a.mcs).r)
        .sum()
}

impl Simulator {
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let table = config.mcs_table()?;
        config.utility.validate(&table, config.users)?;
        let channel = Channel::new(config.channel_params()?);
        let solver = config.solver_config();
        let fprus = FpRus::new(config.subchannels, config.users, &table, solver.budget);
        Ok(Self {
            config,
            table,
            channel,
            solver,
            fprus,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn table(&self) -> &McsTable {
        &self.table
    }

    pub fn channel(&self) -> &Channel {
        &self.channel
    }

    fn utility(&self) -> &Utility {
        &self.config.utility
    }

    fn expected(&self, state: &ChannelState, schedule: &Schedule) -> f64 {
        schedule
            .iter()
            .map(|(n, a)| {
                let g = self.channel.modulation().gain(n, &state.taps[a.user]);
                self.table.get(a.mcs).goodput(a.power, g)
            })
            .sum()
    }

    /// Runs one realization, `T` slots for every configured scheme.
    pub fn run_realization(&self, r: usize) -> Result<RealizationOutput> {
        let cfg = &self.config;
        let (seed, ri) = (cfg.seed, r as u64);
        let users = cfg.users;
        let d = cfg.delay;
        let has = |s: Scheme| cfg.schemes.contains(&s);

        let mut ch_rngs: Vec<_> = (0..users)
            .map(|k| stream(seed, ri, Purpose::Channel, k as u64))
            .collect();
        let mut state = self.channel.init_state_split(&mut ch_rngs);
        let mut history: VecDeque<ChannelState> = VecDeque::with_capacity(d + 1);

        let mut belief_rngs: Vec<_> = (0..users)
            .map(|k| stream(seed, ri, Purpose::Belief, k as u64))
            .collect();
        let mut beliefs = if has(Scheme::Proposed) {
            belief_rngs
                .iter_mut()
                .map(|rng| {
                    Belief::new(self.channel.params(), cfg.particles, rng).map(|b| {
                        b.with_resampling(cfg.resample)
                            .with_literal_mixture(cfg.literal_mixture)
                    })
                })
                .collect::<Result<Vec<_>>>()?
        } else {
            Vec::new()
        };
        let mut pending: VecDeque<(Schedule, FeedbackFrame)> = VecDeque::new();
        let mut genie_rng = stream(seed, ri, Purpose::Genie, 0);
        let mut user_rng = stream(seed, ri, Purpose::RandomUsers, 0);

        let mut records = Vec::with_capacity(cfg.slots * cfg.schemes.len());
        let mut digest = 0xcbf2_9ce4_8422_2325u64;
        for t in 0..cfg.slots {
            if t > 0 {
                self.channel.step_split(&mut state, &mut ch_rngs, 1);
            }
            history.push_back(state.clone());
            if history.len() > d + 1 {
                history.pop_front();
            }
            let lagged = (t >= d).then(|| history.front().unwrap());
            digest = digest_state(digest, &state);
            let fb_stream = stream(seed, ri, Purpose::Feedback, t as u64);

            for &scheme in &cfg.schemes {
                let (schedule, gap) = match scheme {
                    Scheme::Proposed => {
                        if t > 0 {
                            let fb = if t >= d { pending.pop_front() } else { None };
                            for (k, b) in beliefs.iter_mut().enumerate() {
                                let obs = fb.as_ref().map(|(s, f)| (s, f));
                                b.advance(k, &self.channel, obs, &self.table, &mut belief_rngs[k])?;
                            }
                        }
                        let posts: Vec<SsgPosterior> = beliefs
                            .iter()
                            .map(|b| b.posterior(self.channel.modulation()))
                            .collect();
                        match allocate_or_idle(&posts, &self.table, self.utility(), &self.solver)? {
                            Some(a) => (a.schedule, Some(a.certificate.bound)),
                            None => (Schedule::idle(cfg.subchannels), Some(0.0)),
                        }
                    }
                    Scheme::Cgg => {
                        let (s, _) = cgg_allocate(
                            lagged,
                            &self.channel,
                            &self.table,
                            self.utility(),
                            &self.solver,
                            cfg.genie_particles,
                            &mut genie_rng,
                        )?;
                        (s, None)
                    }
                    Scheme::Ncgg => (
                        ncgg_allocate(
                            &state,
                            &self.channel,
                            &self.table,
                            self.utility(),
                            &self.solver,
                        )?
                        .0,
                        None,
                    ),
                    Scheme::Fprus => (self.fprus.allocate(&mut user_rng), None),
                };
                let frame = self.channel.gen_feedback(
                    &state,
                    &schedule,
                    &self.table,
                    &mut fb_stream.clone(),
                );
                records.push(SlotRecord {
                    realization: r,
                    slot: t + 1,
                    scheme,
                    goodput_expected: self.expected(&state, &schedule),
                    goodput_realized: realized(&frame, &schedule, &self.table),
                    total_power: schedule.total_power(),
                    gap_bound: gap,
                });
                if scheme == Scheme::Proposed {
                    pending.push_back((schedule, frame));
                }
            }
        }
        Ok(RealizationOutput {
            realization: r,
            records,
            channel_digest: digest,
            degenerate_resets: beliefs.iter().map(|b| b.degenerate_resets()).sum(),
        })
    }

    /// Runs every realization, in parallel when more than one worker is
    /// available, and returns them in realization order.
    pub fn run(&self) -> Result<Vec<RealizationOutput>> {
        let n = self.config.realizations;
        let work = || {
            (0..n)
                .into_par_iter()
                .map(|r| self.run_realization(r))
                .collect::<Result<Vec<_>>>()
        };
        match workers_from_env()? {
            Some(w) => rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::InvalidParam(format!("worker pool: {e}")))?
                .install(work),
            None => work(),
        }
    }
}

/// Worker count from [`WORKERS_ENV`], if set.
pub fn workers_from_env() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(w) if w > 0 => Ok(Some(w)),
            _ => Err(Error::Validation(format!(
                "{WORKERS_ENV} must be a positive integer, got `{v}`"
            ))),
        },
        Err(_) => Ok(None),
    }
}

/// Per-scheme statistics over the slots after warmup.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeSummary {
    pub scheme: Scheme,
    /// Mean expected sum-goodput per slot.
    pub mean: f64,
    /// Standard error of `mean`, from the spread of per-realization means.
    pub stderr: f64,
    pub realized_mean: f64,
    pub realized_stderr: f64,
    pub mean_power: f64,
    /// Mean gap certificate, proposed scheme only.
    pub mean_gap_bound: Option<f64>,
    pub realizations: usize,
    pub slots_per_realization: usize,
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Statistics over records with `slot > warmup`. Realizations without such
/// records for a scheme are skipped.
pub fn aggregate(
    outputs: &[RealizationOutput],
    schemes: &[Scheme],
    warmup: usize,
) -> Vec<SchemeSummary> {
    schemes
        .iter()
        .filter_map(|&scheme| {
            let mut exp = Vec::new();
            let mut real = Vec::new();
            let mut power = 0.0;
            let mut gap = 0.0;
            let mut gap_n = 0usize;
            let mut slots = 0usize;
            for o in outputs {
                let recs: Vec<&SlotRecord> = o
                    .records
                    .iter()
                    .filter(|x| x.scheme == scheme && x.slot > warmup)
                    .collect();
                if recs.is_empty() {
                    continue;
                }
                let n = recs.len() as f64;
                slots = recs.len();
                exp.push(recs.iter().map(|x| x.goodput_expected).sum::<f64>() / n);
                real.push(recs.iter().map(|x| x.goodput_realized).sum::<f64>() / n);
                power += recs.iter().map(|x| x.total_power).sum::<f64>();
                for g in recs.iter().filter_map(|x| x.gap_bound) {
                    gap += g;
                    gap_n += 1;
                }
            }
            if exp.is_empty() {
                return None;
            }
            let (mean, stderr) = mean_and_stderr(&exp);
            let (realized_mean, realized_stderr) = mean_and_stderr(&real);
            Some(SchemeSummary {
                scheme,
                mean,
                stderr,
                realized_mean,
                realized_stderr,
                mean_power: power / (exp.len() * slots) as f64,
                mean_gap_bound: (gap_n > 0).then(|| gap / gap_n as f64),
                realizations: exp.len(),
                slots_per_realization: slots,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> RunConfig {
        let mut c = RunConfig::default();
        c.apply_overrides([
            "N=4",
            "K=2",
            "M=3",
            "S=10",
            "T=6",
            "warmup=2",
            "realizations=2",
            "genie_particles=10",
            "alpha=0.01",
        ])
        .unwrap();
        c
    }

    #[test]
    fn record_layout_and_budget() {
        let sim = Simulator::new(small()).unwrap();
        let out = sim.run_realization(0).unwrap();
        assert_eq!(out.records.len(), 6 * 4);
        let budget = sim.config().power_budget();
        for (i, r) in out.records.iter().enumerate() {
            assert_eq!(r.slot, i / 4 + 1);
            assert_eq!(r.scheme, Scheme::ALL[i % 4]);
            assert!(r.total_power <= budget + 1e-6);
            assert!(r.goodput_expected >= 0.0 && r.goodput_realized >= 0.0);
            assert_eq!(r.gap_bound.is_some(), r.scheme == Scheme::Proposed);
        }
    }

    #[test]
    fn deterministic_and_paired() {
        let mut c = small();
        c.schemes = vec![Scheme::Fprus];
        let a = Simulator::new(c.clone())
            .unwrap()
            .run_realization(1)
            .unwrap();
        let b = Simulator::new(c.clone())
            .unwrap()
            .run_realization(1)
            .unwrap();
        assert_eq!(a, b);
        c.schemes = vec![Scheme::Proposed, Scheme::Ncgg];
        let p = Simulator::new(c).unwrap().run_realization(1).unwrap();
        assert_eq!(p.channel_digest, a.channel_digest);
    }

    #[test]
    fn single_slot_runs_on_prior() {
        let mut c = small();
        c.apply_overrides(["T=1", "warmup=0", "schemes=proposed"])
            .unwrap();
        let out = Simulator::new(c).unwrap().run_realization(0).unwrap();
        assert_eq!(out.records.len(), 1);
    }

    fn rec(r: usize, slot: usize, g: f64) -> SlotRecord {
        SlotRecord {
            realization: r,
            slot,
            scheme: Scheme::Fprus,
            goodput_expected: g,
            goodput_realized: g,
            total_power: 1.0,
            gap_bound: None,
        }
    }

    fn output(r: usize, recs: Vec<SlotRecord>) -> RealizationOutput {
        RealizationOutput {
            realization: r,
            records: recs,
            channel_digest: 0,
            degenerate_resets: 0,
        }
    }

    #[test]
    fn aggregation_rules() {
        let outs = vec![output(0, vec![rec(0, 1, 100.0), rec(0, 2, 2.0)])];
        let s = aggregate(&outs, &[Scheme::Fprus], 1);
        assert_eq!(s[0].mean, 2.0);
        assert_eq!(s[0].stderr, 0.0);
        let outs = vec![
            output(0, vec![rec(0, 1, 1.0), rec(0, 2, 3.0)]),
            output(1, vec![rec(1, 1, 5.0), rec(1, 2, 7.0)]),
        ];
        let s = aggregate(&outs, &[Scheme::Fprus], 0);
        assert_eq!(s[0].mean, 4.0);
        assert!((s[0].stderr - 2.0).abs() < 1e-12);
        assert!(aggregate(&outs, &[Scheme::Cgg], 0).is_empty());
    }
}
