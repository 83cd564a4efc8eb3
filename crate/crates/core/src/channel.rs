//! Ground-truth channel: per-user Gauss-Markov tap processes, the DFT
//! modulation matrix mapping taps to subchannel gains, and ACK/NAK generation.
//!
//! Each of the `L` taps of user `k` evolves as
//! `h[t+1] = (1-α)·h[t] + α·w[t]` with `w` unit-variance circular Gaussian,
//! whose stationary variance is `α/(2-α)`. Subchannel gains are
//! `H = √β·F·h` where `F` holds the first `L` columns of the unitary `N`-point
//! DFT and `β = (N/L)·(2-α)/α`, which makes every `H[n]` unit variance.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::mcs::McsTable;
use crate::schedule::Schedule;
use crate::{Error, Result};

/// Complex channel impulse response of one user.
pub type Taps = Vec<Complex64>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    /// `N`
    pub subchannels: usize,
    /// `L`, at most `N`
    pub taps: usize,
    /// `K`
    pub users: usize,
    /// Fading rate in `(0, 1]`.
    pub alpha: f64,
    /// Feedback delay in slots, at least 1.
    pub delay: usize,
}

impl ChannelParams {
    pub fn new(
        subchannels: usize,
        taps: usize,
        users: usize,
        alpha: f64,
        delay: usize,
    ) -> Result<Self> {
        if subchannels == 0 || users == 0 || taps == 0 {
            return Err(Error::InvalidParam(
                "subchannels, taps and users must be at least 1".into(),
            ));
        }
        if taps > subchannels {
            return Err(Error::InvalidParam(format!(
                "tap count {taps} exceeds subchannel count {subchannels}"
            )));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidParam(format!(
                "fading rate {alpha} outside (0, 1]"
            )));
        }
        if delay == 0 {
            return Err(Error::InvalidParam(
                "feedback delay must be at least 1".into(),
            ));
        }
        Ok(Self {
            subchannels,
            taps,
            users,
            alpha,
            delay,
        })
    }

    /// Gain normalization `(N/L)·(2-α)/α`.
    pub fn beta(&self) -> f64 {
        self.subchannels as f64 / self.taps as f64 * (2.0 - self.alpha) / self.alpha
    }

    /// Stationary per-tap variance `α/(2-α)`.
    pub fn stationary_variance(&self) -> f64 {
        self.alpha / (2.0 - self.alpha)
    }

    /// Mean factor `(1-α)^steps` of the `steps`-slot transition.
    pub fn decay(&self, steps: usize) -> f64 {
        (1.0 - self.alpha).powi(steps as i32)
    }

    /// Per-tap variance `α²·Σ_{j<steps} (1-α)^{2j}` of the `steps`-slot
    /// transition.
    pub fn innovation_variance(&self, steps: usize) -> f64 {
        let q = (1.0 - self.alpha).powi(2);
        let mut sum = 0.0;
        let mut term = 1.0;
        for _ in 0..steps {
            sum += term;
            term *= q;
        }
        self.alpha * self.alpha * sum
    }
}

/// Circularly-symmetric complex Gaussian with the given variance.
pub fn sample_cn<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// Taps drawn from the stationary distribution.
pub fn stationary_taps<R: Rng + ?Sized>(params: &ChannelParams, rng: &mut R) -> Taps {
    let v = params.stationary_variance();
    (0..params.taps).map(|_| sample_cn(rng, v)).collect()
}

/// Advances taps by `steps` slots of the AR(1) recursion.
pub fn step_taps<R: Rng + ?Sized>(taps: &mut [Complex64], alpha: f64, rng: &mut R, steps: usize) {
    for _ in 0..steps {
        for h in taps.iter_mut() {
            *h = *h * (1.0 - alpha) + sample_cn(rng, 1.0) * alpha;
        }
    }
}

/// `G = √β·F`, stored row-major (`N × L`).
#[derive(Debug, Clone)]
pub struct ModulationMatrix {
    subchannels: usize,
    taps: usize,
    entries: Vec<Complex64>,
}

impl ModulationMatrix {
    pub fn new(params: &ChannelParams) -> Self {
        let (n_sub, n_taps) = (params.subchannels, params.taps);
        let scale = (params.beta() / n_sub as f64).sqrt();
        let mut entries = Vec::with_capacity(n_sub * n_taps);
        for n in 0..n_sub {
            for l in 0..n_taps {
                // Reduce the phase index mod N before scaling to keep it exact.
                let k = (n * l) % n_sub;
                let phase = -2.0 * PI * k as f64 / n_sub as f64;
                entries.push(Complex64::from_polar(scale, phase));
            }
        }
        Self {
            subchannels: n_sub,
            taps: n_taps,
            entries,
        }
    }

    pub fn subchannels(&self) -> usize {
        self.subchannels
    }

    pub fn row(&self, n: usize) -> &[Complex64] {
        &self.entries[n * self.taps..(n + 1) * self.taps]
    }

    /// `H[n] = Σ_l G[n,l]·h[l]`.
    pub fn response(&self, n: usize, taps: &[Complex64]) -> Complex64 {
        self.row(n).iter().zip(taps).map(|(g, h)| g * h).sum()
    }

    /// Squared subchannel gain `|H[n]|²`.
    pub fn gain(&self, n: usize, taps: &[Complex64]) -> f64 {
        self.response(n, taps).norm_sqr()
    }

    pub fn gains(&self, taps: &[Complex64]) -> Vec<f64> {
        (0..self.subchannels).map(|n| self.gain(n, taps)).collect()
    }
}

/// True taps of every user at one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelState {
    pub slot: usize,
    pub taps: Vec<Taps>,
}

impl ChannelState {
    /// Appends `slot,k,l,re,im` rows.
    pub fn write_csv_rows<W: Write>(&self, wtr: &mut csv::Writer<W>) -> Result<()> {
        for (k, taps) in self.taps.iter().enumerate() {
            for (l, h) in taps.iter().enumerate() {
                wtr.write_record(&[
                    self.slot.to_string(),
                    k.to_string(),
                    l.to_string(),
                    format!("{:.17e}", h.re),
                    format!("{:.17e}", h.im),
                ])?;
            }
        }
        Ok(())
    }

    pub const CSV_HEADER: [&'static str; 5] = ["slot", "k", "l", "re", "im"];
}

/// ACK/NAK report for one (subchannel, user) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feedback {
    Ack,
    Nak,
    NotScheduled,
}

/// All feedback produced by the packets of one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackFrame {
    pub slot: usize,
    subchannels: usize,
    users: usize,
    entries: Vec<Feedback>,
}

impl FeedbackFrame {
    pub fn empty(slot: usize, subchannels: usize, users: usize) -> Self {
        Self {
            slot,
            subchannels,
            users,
            entries: vec![Feedback::NotScheduled; subchannels * users],
        }
    }

    pub fn get(&self, sub: usize, user: usize) -> Feedback {
        self.entries[sub * self.users + user]
    }

    pub fn set(&mut self, sub: usize, user: usize, f: Feedback) {
        self.entries[sub * self.users + user] = f;
    }

    pub fn subchannels(&self) -> usize {
        self.subchannels
    }

    pub fn users(&self) -> usize {
        self.users
    }

    /// Feedback of `user` on every subchannel.
    pub fn user_row(&self, user: usize) -> impl Iterator<Item = Feedback> + '_ {
        (0..self.subchannels).map(move |n| self.get(n, user))
    }

    pub fn acks(&self) -> usize {
        self.entries.iter().filter(|f| **f == Feedback::Ack).count()
    }
}

/// Channel parameters together with the modulation matrix they induce.
#[derive(Debug, Clone)]
pub struct Channel {
    params: ChannelParams,
    modulation: ModulationMatrix,
}

impl Channel {
    pub fn new(params: ChannelParams) -> Self {
        Self {
            modulation: ModulationMatrix::new(&params),
            params,
        }
    }

    pub fn params(&self) -> &ChannelParams {
        &self.params
    }

    pub fn modulation(&self) -> &ModulationMatrix {
        &self.modulation
    }

    /// Stationary draw for every user from a single stream.
    pub fn init_state<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelState {
        ChannelState {
            slot: 0,
            taps: (0..self.params.users)
                .map(|_| stationary_taps(&self.params, rng))
                .collect(),
        }
    }

    /// Stationary draw with one stream per user.
    pub fn init_state_split<R: Rng>(&self, rngs: &mut [R]) -> ChannelState {
        assert_eq!(rngs.len(), self.params.users);
        ChannelState {
            slot: 0,
            taps: rngs
                .iter_mut()
                .map(|r| stationary_taps(&self.params, r))
                .collect(),
        }
    }

    pub fn step<R: Rng + ?Sized>(&self, state: &mut ChannelState, rng: &mut R, steps: usize) {
        for taps in &mut state.taps {
            step_taps(taps, self.params.alpha, rng, steps);
        }
        state.slot += steps;
    }

    pub fn step_split<R: Rng>(&self, state: &mut ChannelState, rngs: &mut [R], steps: usize) {
        assert_eq!(rngs.len(), self.params.users);
        for (taps, rng) in state.taps.iter_mut().zip(rngs) {
            step_taps(taps, self.params.alpha, rng, steps);
        }
        state.slot += steps;
    }

    /// Squared gains `γ[k][n]`.
    pub fn subchannel_gains(&self, state: &ChannelState) -> Vec<Vec<f64>> {
        state
            .taps
            .iter()
            .map(|h| self.modulation.gains(h))
            .collect()
    }

    /// Draws one uniform per subchannel (idle or not) and NAKs a scheduled
    /// packet when the uniform falls below its error rate. Stream consumption
    /// does not depend on the schedule, so schedules evaluated with copies of
    /// the same stream see common random numbers.
    pub fn gen_feedback<R: Rng + ?Sized>(
        &self,
        state: &ChannelState,
        schedule: &Schedule,
        mcs: &McsTable,
        rng: &mut R,
    ) -> FeedbackFrame {
        let mut frame =
            FeedbackFrame::empty(state.slot, self.params.subchannels, self.params.users);
        for n in 0..self.params.subchannels {
            let u: f64 = rng.random();
            if let Some(a) = schedule.get(n) {
                let gamma = self.modulation.gain(n, &state.taps[a.user]);
                let eps = mcs.get(a.mcs).error_rate(a.power, gamma);
                let f = if u < eps {
                    Feedback::Nak
                } else {
                    Feedback::Ack
                };
                frame.set(n, a.user, f);
            }
        }
        frame
    }
}
