//! Per-user particle posterior over channel taps, driven by delayed ACK/NAK
//! feedback.
//!
//! With delay `d`, the belief at slot `t` keeps the particle sets of slots
//! `t-d ..= t` as trajectories: particle `i` at `t` is the AR(1) descendant of
//! particle `i` at `t-d`. Two weight vectors are carried:
//!
//! * lagged weights `ν(t-d | t-d)`: sequential importance weights of the
//!   trajectories, multiplied each slot by the likelihood of the feedback
//!   for slot `t-d`;
//! * current weights `ν(t | t-d)`: the mixture `Σ_j ν(t-d|t-d)[j]·p(h_t[i] | h_{t-d}[j])`
//!   evaluated with the closed-form `d`-step Gaussian transition.
//!
//! No resampling happens unless [`Belief::with_resampling`] is enabled.
//! Weight arithmetic is done in the log domain.

use std::collections::VecDeque;
use std::io::Write;

use num_complex::Complex64;
use rand::Rng;

use crate::channel::{
    sample_cn, stationary_taps, step_taps, Channel, ChannelParams, Feedback, FeedbackFrame,
    ModulationMatrix, Taps,
};
use crate::mcs::{McsEntry, McsTable};
use crate::schedule::Schedule;
use crate::{Error, Result};

/// Weighted samples of the squared gain `γ[n]` for one user, shared across
/// subchannels (all gains of a sample come from the same tap vector).
#[derive(Debug, Clone, PartialEq)]
pub struct SsgPosterior {
    subchannels: usize,
    weights: Vec<f64>,
    /// `gains[n * len + i]`
    gains: Vec<f64>,
}

impl SsgPosterior {
    /// Builds the posterior from tap particles, dropping zero-weight ones.
    pub fn from_particles(
        weights: &[f64],
        particles: &[Taps],
        modulation: &ModulationMatrix,
    ) -> Self {
        let keep: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > 0.0).collect();
        let n_sub = modulation.subchannels();
        let mut gains = Vec::with_capacity(n_sub * keep.len());
        for n in 0..n_sub {
            gains.extend(keep.iter().map(|&i| modulation.gain(n, &particles[i])));
        }
        Self {
            subchannels: n_sub,
            weights: keep.iter().map(|&i| weights[i]).collect(),
            gains,
        }
    }

    /// Exact knowledge of every squared gain.
    pub fn point_mass(gains: &[f64]) -> Self {
        Self {
            subchannels: gains.len(),
            weights: vec![1.0],
            gains: gains.to_vec(),
        }
    }

    /// Equally weighted samples; `samples[i][n]` is the gain of sample `i` on
    /// subchannel `n`.
    pub fn from_samples(samples: &[Vec<f64>]) -> Self {
        let n_sub = samples.first().map_or(0, |s| s.len());
        let w = 1.0 / samples.len() as f64;
        let mut gains = Vec::with_capacity(n_sub * samples.len());
        for n in 0..n_sub {
            gains.extend(samples.iter().map(|s| s[n]));
        }
        Self {
            subchannels: n_sub,
            weights: vec![w; samples.len()],
            gains,
        }
    }

    pub fn subchannels(&self) -> usize {
        self.subchannels
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Gains of every sample on subchannel `n`, aligned with [`Self::weights`].
    pub fn gains(&self, n: usize) -> &[f64] {
        let s = self.weights.len();
        &self.gains[n * s..(n + 1) * s]
    }

    /// `E{f(γ[n])}`.
    pub fn expect(&self, n: usize, f: impl Fn(f64) -> f64) -> f64 {
        self.weights
            .iter()
            .zip(self.gains(n))
            .map(|(w, &g)| w * f(g))
            .sum()
    }

    pub fn mean(&self, n: usize) -> f64 {
        self.expect(n, |g| g)
    }
}

/// Natural log of `p(f_k | h_k, schedule)`, the product over subchannels of
/// `ε` for a NAK, `1 - ε` for an ACK and 1 where the user was not scheduled.
pub fn ln_feedback_likelihood(
    taps: &[Complex64],
    user: usize,
    frame: &FeedbackFrame,
    schedule: &Schedule,
    modulation: &ModulationMatrix,
    mcs: &McsTable,
) -> Result<f64> {
    let obs = observations(user, frame, schedule, mcs)?;
    Ok(ln_likelihood_of(&obs, taps, modulation))
}

/// [`ln_feedback_likelihood`] exponentiated.
pub fn feedback_likelihood(
    taps: &[Complex64],
    user: usize,
    frame: &FeedbackFrame,
    schedule: &Schedule,
    modulation: &ModulationMatrix,
    mcs: &McsTable,
) -> Result<f64> {
    ln_feedback_likelihood(taps, user, frame, schedule, modulation, mcs).map(f64::exp)
}

struct Observation {
    sub: usize,
    entry: McsEntry,
    power: f64,
    ack: bool,
}

fn observations(
    user: usize,
    frame: &FeedbackFrame,
    schedule: &Schedule,
    mcs: &McsTable,
) -> Result<Vec<Observation>> {
    let mut out = Vec::new();
    for (n, f) in frame.user_row(user).enumerate() {
        match (schedule.for_user(n, user), f) {
            (None, Feedback::NotScheduled) => {}
            (Some(a), Feedback::Ack | Feedback::Nak) => out.push(Observation {
                sub: n,
                entry: *mcs.get(a.mcs),
                power: a.power,
                ack: f == Feedback::Ack,
            }),
            (a, f) => {
                return Err(Error::InvalidParam(format!(
                    "user {user}, subchannel {n}: feedback {f:?} inconsistent with assignment {a:?}"
                )))
            }
        }
    }
    Ok(out)
}

fn ln_likelihood_of(obs: &[Observation], taps: &[Complex64], modulation: &ModulationMatrix) -> f64 {
    obs.iter()
        .map(|o| {
            let gamma = modulation.gain(o.sub, taps);
            let ln_eps = o.entry.ln_error_rate(o.power, gamma);
            if o.ack {
                (-ln_eps.exp_m1()).ln()
            } else {
                ln_eps
            }
        })
        .sum()
}

/// Normalizes log weights in place into probabilities. Returns `false` when
/// every entry is `-inf`.
fn normalize_log(ln_w: &mut [f64]) -> bool {
    let max = ln_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_nan() {
        return false;
    }
    let mut sum = 0.0;
    for w in ln_w.iter_mut() {
        *w = (*w - max).exp();
        sum += *w;
    }
    for w in ln_w.iter_mut() {
        *w /= sum;
    }
    true
}

fn log_sum_exp(x: &[f64]) -> f64 {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + x.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// Particle belief for one user.
#[derive(Debug, Clone)]
pub struct Belief {
    /// Particle sets for slots `max(0, t-d) ..= t`, oldest first.
    history: VecDeque<Vec<Taps>>,
    slot: usize,
    delay: usize,
    weights_lagged: Vec<f64>,
    weights_current: Vec<f64>,
    resample: bool,
    literal_mixture: bool,
    degenerate_resets: usize,
}

impl Belief {
    /// `particles` stationary draws with uniform weights.
    pub fn new<R: Rng + ?Sized>(
        params: &ChannelParams,
        particles: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if particles == 0 {
            return Err(Error::InvalidParam(
                "particle count must be at least 1".into(),
            ));
        }
        let set: Vec<Taps> = (0..particles)
            .map(|_| stationary_taps(params, rng))
            .collect();
        let w = 1.0 / particles as f64;
        Ok(Self {
            history: VecDeque::from([set]),
            slot: 0,
            delay: params.delay,
            weights_lagged: vec![w; particles],
            weights_current: vec![w; particles],
            resample: false,
            literal_mixture: false,
            degenerate_resets: 0,
        })
    }

    /// Enables systematic resampling of the trajectories whenever the
    /// effective sample size of the lagged weights drops below half.
    pub fn with_resampling(mut self, on: bool) -> Self {
        self.resample = on;
        self
    }

    /// Current weights as the bare transition mixture `Σ_j ν_j·p(h_i|h_j)`
    /// instead of dividing it by the mixture the particles were drawn from.
    /// The two agree when transition kernels of different particles do not
    /// overlap; otherwise the bare form leans toward the prior mode.
    pub fn with_literal_mixture(mut self, on: bool) -> Self {
        self.literal_mixture = on;
        self
    }

    pub fn len(&self) -> usize {
        self.weights_current.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights_current.is_empty()
    }

    /// Slot `t` the current particles describe.
    pub fn slot(&self) -> usize {
        self.slot
    }

    /// Slot `t-d` of the lagged particles, once the delay window is filled.
    pub fn lagged_slot(&self) -> Option<usize> {
        self.slot.checked_sub(self.delay)
    }

    pub fn particles(&self) -> &[Taps] {
        self.history.back().expect("history is never empty")
    }

    pub fn lagged_particles(&self) -> Option<&[Taps]> {
        (self.history.len() == self.delay + 1).then(|| self.history.front().unwrap().as_slice())
    }

    pub fn weights_current(&self) -> &[f64] {
        &self.weights_current
    }

    pub fn weights_lagged(&self) -> &[f64] {
        &self.weights_lagged
    }

    /// Number of times every lagged likelihood was zero and the weights were
    /// reset to uniform.
    pub fn degenerate_resets(&self) -> usize {
        self.degenerate_resets
    }

    /// Moves to slot `t+1`: every trajectory takes one AR(1) step, so the
    /// new current particle is the `d`-step descendant of the new lagged one.
    pub fn propagate<R: Rng + ?Sized>(&mut self, params: &ChannelParams, rng: &mut R) {
        let mut next = self.particles().to_vec();
        for taps in &mut next {
            step_taps(taps, params.alpha, rng, 1);
        }
        self.history.push_back(next);
        if self.history.len() > self.delay + 1 {
            self.history.pop_front();
        }
        self.slot += 1;
    }

    /// Multiplies the lagged weights by the likelihood of `frame`, which must
    /// report slot `t-d`, and renormalizes. If every likelihood is zero the
    /// weights are reset to uniform and the reset counter is bumped.
    pub fn update_weights(
        &mut self,
        user: usize,
        frame: &FeedbackFrame,
        schedule: &Schedule,
        modulation: &ModulationMatrix,
        mcs: &McsTable,
    ) -> Result<()> {
        if self.lagged_slot() != Some(frame.slot) {
            return Err(Error::InvalidParam(format!(
                "feedback for slot {} does not match lagged slot {:?}",
                frame.slot,
                self.lagged_slot()
            )));
        }
        let obs = observations(user, frame, schedule, mcs)?;
        if obs.is_empty() {
            return Ok(());
        }
        let lagged = self.history.front().unwrap();
        let mut ln_w: Vec<f64> = self
            .weights_lagged
            .iter()
            .zip(lagged)
            .map(|(w, h)| w.ln() + ln_likelihood_of(&obs, h, modulation))
            .collect();
        if normalize_log(&mut ln_w) {
            self.weights_lagged = ln_w;
        } else {
            let s = self.len();
            self.weights_lagged = vec![1.0 / s as f64; s];
            self.degenerate_resets += 1;
        }
        Ok(())
    }

    /// Recomputes the current weights from the lagged ones through the
    /// transition density. Each current particle was drawn from the uniform
    /// mixture of kernels around the lagged particles, so its weight is the
    /// weighted mixture divided by the uniform one. No-op until the delay
    /// window is filled.
    pub fn reweight_current(&mut self, params: &ChannelParams) {
        let Some(lagged) = self.lagged_particles() else {
            return;
        };
        let decay = params.decay(self.delay);
        let var = params.innovation_variance(self.delay);
        let current = self.particles();
        let ln_lag: Vec<f64> = self.weights_lagged.iter().map(|w| w.ln()).collect();
        let means: Vec<Taps> = lagged
            .iter()
            .map(|h| h.iter().map(|x| x * decay).collect())
            .collect();
        let mut kern = vec![0.0; lagged.len()];
        let mut terms = vec![0.0; lagged.len()];
        let mut ln_cur: Vec<f64> = current
            .iter()
            .map(|h| {
                for (k, mean) in kern.iter_mut().zip(&means) {
                    let dist: f64 = h.iter().zip(mean).map(|(a, b)| (a - b).norm_sqr()).sum();
                    *k = -dist / var;
                }
                for (t, (lw, k)) in terms.iter_mut().zip(ln_lag.iter().zip(&kern)) {
                    *t = lw + k;
                }
                let num = log_sum_exp(&terms);
                if self.literal_mixture || num == f64::NEG_INFINITY {
                    num
                } else {
                    num - log_sum_exp(&kern)
                }
            })
            .collect();
        if normalize_log(&mut ln_cur) {
            self.weights_current = ln_cur;
        } else {
            self.weights_current = self.weights_lagged.clone();
        }
    }

    /// Systematic resampling of whole trajectories when the lagged effective
    /// sample size is below `S/2`. Returns whether it resampled.
    pub fn resample_if_degenerate<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        let s = self.len();
        let ess = 1.0 / self.weights_lagged.iter().map(|w| w * w).sum::<f64>();
        if ess >= s as f64 / 2.0 {
            return false;
        }
        let u0: f64 = rng.random::<f64>() / s as f64;
        let mut idx = Vec::with_capacity(s);
        let mut cum = self.weights_lagged[0];
        let mut j = 0;
        for i in 0..s {
            let u = u0 + i as f64 / s as f64;
            while u > cum && j + 1 < s {
                j += 1;
                cum += self.weights_lagged[j];
            }
            idx.push(j);
        }
        for set in self.history.iter_mut() {
            *set = idx.iter().map(|&j| set[j].clone()).collect();
        }
        self.weights_lagged = vec![1.0 / s as f64; s];
        true
    }

    /// One slot of the filter: propagate, absorb the feedback of slot `t-d`
    /// when it is given, and refresh the current weights.
    pub fn advance<R: Rng + ?Sized>(
        &mut self,
        user: usize,
        channel: &Channel,
        feedback: Option<(&Schedule, &FeedbackFrame)>,
        mcs: &McsTable,
        rng: &mut R,
    ) -> Result<()> {
        self.propagate(channel.params(), rng);
        if let Some((schedule, frame)) = feedback {
            self.update_weights(user, frame, schedule, channel.modulation(), mcs)?;
            if self.resample {
                self.resample_if_degenerate(rng);
            }
        }
        self.reweight_current(channel.params());
        Ok(())
    }

    /// `E{f(γ[n])} ≈ Σ_i ν(t|t-d)[i]·f(γ[n](h_t[i]))`.
    pub fn expect_ssg(
        &self,
        modulation: &ModulationMatrix,
        n: usize,
        f: impl Fn(f64) -> f64,
    ) -> f64 {
        self.weights_current
            .iter()
            .zip(self.particles())
            .map(|(w, h)| w * f(modulation.gain(n, h)))
            .sum()
    }

    pub fn posterior(&self, modulation: &ModulationMatrix) -> SsgPosterior {
        SsgPosterior::from_particles(&self.weights_current, self.particles(), modulation)
    }

    /// Appends `i,weight,re_0,im_0,...` rows for the current particles.
    pub fn write_csv_rows<W: Write>(&self, wtr: &mut csv::Writer<W>) -> Result<()> {
        for (i, (w, h)) in self
            .weights_current
            .iter()
            .zip(self.particles())
            .enumerate()
        {
            let mut row = vec![i.to_string(), format!("{w:.17e}")];
            for x in h {
                row.push(format!("{:.17e}", x.re));
                row.push(format!("{:.17e}", x.im));
            }
            wtr.write_record(&row)?;
        }
        Ok(())
    }
}

/// Equally weighted draws from the exact `steps`-slot transition out of
/// known taps. Used by the causal genie.
pub fn transition_posterior<R: Rng + ?Sized>(
    taps: &[Complex64],
    params: &ChannelParams,
    steps: usize,
    samples: usize,
    modulation: &ModulationMatrix,
    rng: &mut R,
) -> SsgPosterior {
    let decay = params.decay(steps);
    let var = params.innovation_variance(steps);
    let draws: Vec<Vec<f64>> = (0..samples)
        .map(|_| {
            let h: Taps = taps
                .iter()
                .map(|x| x * decay + sample_cn(rng, var))
                .collect();
            modulation.gains(&h)
        })
        .collect();
    SsgPosterior::from_samples(&draws)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};
    use crate::schedule::Assignment;

    fn flat_channel(alpha: f64, delay: usize) -> Channel {
        Channel::new(ChannelParams::new(1, 1, 1, alpha, delay).unwrap())
    }

    fn one_packet(power: f64, mcs: usize) -> Schedule {
        let mut s = Schedule::idle(1);
        s.set(
            0,
            Some(Assignment {
                user: 0,
                mcs,
                power,
            }),
        );
        s
    }

    fn frame_with(slot: usize, f: Feedback) -> FeedbackFrame {
        let mut fr = FeedbackFrame::empty(slot, 1, 1);
        fr.set(0, 0, f);
        fr
    }

    fn assert_normalized(w: &[f64]) {
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(w.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn init_is_uniform() {
        let ch = flat_channel(0.1, 1);
        let mut rng = stream(1, 0, Purpose::Belief, 0);
        let b = Belief::new(ch.params(), 1, &mut rng).unwrap();
        assert_eq!(b.weights_current(), &[1.0]);
        let b = Belief::new(ch.params(), 7, &mut rng).unwrap();
        assert!(b.weights_current().iter().all(|&w| w == 1.0 / 7.0));
        assert!(Belief::new(ch.params(), 0, &mut rng).is_err());
    }

    #[test]
    fn prior_mean_gain_is_unity() {
        let ch = Channel::new(ChannelParams::new(32, 2, 1, 1e-3, 1).unwrap());
        let mut rng = stream(2, 0, Purpose::Belief, 0);
        let b = Belief::new(ch.params(), 20_000, &mut rng).unwrap();
        let m = b.expect_ssg(ch.modulation(), 5, |g| g);
        assert!((m - 1.0).abs() < 0.03, "{m}");
        assert!((b.expect_ssg(ch.modulation(), 0, |_| 1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_step_propagation() {
        let ch = flat_channel(0.3, 1);
        let mut rng = stream(3, 0, Purpose::Belief, 0);
        let mut b = Belief::new(ch.params(), 4, &mut rng).unwrap();
        let before = b.particles().to_vec();
        let mut rng_copy = rng.clone();
        b.propagate(ch.params(), &mut rng);
        for (h0, h1) in before.iter().zip(b.particles()) {
            let y = sample_cn(&mut rng_copy, 1.0);
            let expect = h0[0] * 0.7 + y * 0.3;
            assert!((h1[0] - expect).norm() < 1e-15);
        }
        assert_eq!(b.lagged_particles().unwrap(), before.as_slice());
    }

    #[test]
    fn tiny_alpha_leaves_particles_in_place() {
        let ch = flat_channel(1e-12, 1);
        let mut rng = stream(4, 0, Purpose::Belief, 0);
        let mut b = Belief::new(ch.params(), 8, &mut rng).unwrap();
        let before = b.particles().to_vec();
        b.propagate(ch.params(), &mut rng);
        for (h0, h1) in before.iter().zip(b.particles()) {
            assert!((h0[0] - h1[0]).norm() <= 1e-11 * (1.0 + h0[0].norm()));
        }
    }

    #[test]
    fn multi_slot_innovation_variance() {
        let ch = flat_channel(0.2, 3);
        let mut rng = stream(5, 0, Purpose::Belief, 0);
        let mut b = Belief::new(ch.params(), 10_000, &mut rng).unwrap();
        for _ in 0..3 {
            b.propagate(ch.params(), &mut rng);
        }
        let lag = b.lagged_particles().unwrap();
        let decay = ch.params().decay(3);
        let var: f64 = lag
            .iter()
            .zip(b.particles())
            .map(|(h0, h)| (h[0] - h0[0] * decay).norm_sqr())
            .sum::<f64>()
            / lag.len() as f64;
        let expect = ch.params().innovation_variance(3);
        assert!((var / expect - 1.0).abs() < 0.05, "{var} vs {expect}");
    }

    #[test]
    fn likelihood_cases() {
        let ch = flat_channel(0.5, 1);
        let mcs = McsTable::qam(1);
        let h = vec![Complex64::new(0.4, 0.1)];
        let gamma = ch.modulation().gain(0, &h);

        let idle = FeedbackFrame::empty(0, 1, 1);
        assert_eq!(
            feedback_likelihood(&h, 0, &idle, &Schedule::idle(1), ch.modulation(), &mcs).unwrap(),
            1.0
        );

        let nak = frame_with(0, Feedback::Nak);
        let l =
            feedback_likelihood(&h, 0, &nak, &one_packet(2.0, 0), ch.modulation(), &mcs).unwrap();
        assert!((l - (-0.5 * 2.0 * gamma).exp()).abs() < 1e-14);

        let ack = frame_with(0, Feedback::Ack);
        assert_eq!(
            feedback_likelihood(&h, 0, &ack, &one_packet(0.0, 0), ch.modulation(), &mcs).unwrap(),
            0.0
        );

        // Feedback without a matching assignment is rejected.
        assert!(
            feedback_likelihood(&h, 0, &ack, &Schedule::idle(1), ch.modulation(), &mcs).is_err()
        );
    }

    #[test]
    fn not_scheduled_leaves_weights_unchanged() {
        let ch = Channel::new(ChannelParams::new(4, 2, 2, 0.1, 1).unwrap());
        let mcs = McsTable::qam(2);
        let mut rng = stream(6, 0, Purpose::Belief, 0);
        let mut b = Belief::new(ch.params(), 16, &mut rng).unwrap();
        // Move off uniform weights first so invariance is meaningful.
        b.propagate(ch.params(), &mut rng);
        let mut s = Schedule::idle(4);
        s.set(
            1,
            Some(Assignment {
                user: 0,
                mcs: 1,
                power: 3.0,
            }),
        );
        let mut f = FeedbackFrame::empty(0, 4, 2);
        f.set(1, 0, Feedback::Nak);
        b.update_weights(0, &f, &s, ch.modulation(), &mcs).unwrap();
        let w = b.weights_lagged().to_vec();

        b.propagate(ch.params(), &mut rng);
        let mut s2 = Schedule::idle(4);
        s2.set(
            2,
            Some(Assignment {
                user: 1,
                mcs: 0,
                power: 3.0,
            }),
        );
        let mut f2 = FeedbackFrame::empty(1, 4, 2);
        f2.set(2, 1, Feedback::Ack);
        b.update_weights(0, &f2, &s2, ch.modulation(), &mcs)
            .unwrap();
        assert_eq!(b.weights_lagged(), w.as_slice());
    }

    #[test]
    fn two_particle_normalization() {
        // Pick powers so the two particles' NAK likelihoods are 0.2 and 0.8.
        let ch = flat_channel(0.5, 1);
        let mcs = McsTable::qam(1);
        let mut rng = stream(7, 0, Purpose::Belief, 0);
        let mut b = Belief::new(ch.params(), 2, &mut rng).unwrap();
        let beta = ch.params().beta();
        let power = 1.0;
        let b1 = mcs.get(0).b;
        let target = |l: f64| Complex64::new((-l.ln() / (b1 * power * beta)).sqrt(), 0.0);
        b.history[0] = vec![vec![target(0.2)], vec![target(0.8)]];
        b.propagate(ch.params(), &mut rng);
        b.update_weights(
            0,
            &frame_with(0, Feedback::Nak),
            &one_packet(power, 0),
            ch.modulation(),
            &mcs,
        )
        .unwrap();
        let w = b.weights_lagged();
        assert!(
            (w[0] - 0.2).abs() < 1e-12 && (w[1] - 0.8).abs() < 1e-12,
            "{w:?}"
        );
    }

    #[test]
    fn impossible_observation_resets_to_uniform() {
        let ch = flat_channel(0.5, 1);
        let mcs = McsTable::qam(1);
        let mut rng = stream(8, 0, Purpose::Belief, 0);
        let mut b = Belief::new(ch.params(), 5, &mut rng).unwrap();
        b.propagate(ch.params(), &mut rng);
        b.update_weights(
            0,
            &frame_with(0, Feedback::Ack),
            &one_packet(0.0, 0),
            ch.modulation(),
            &mcs,
        )
        .unwrap();
        assert_eq!(b.degenerate_resets(), 1);
        assert!(b.weights_lagged().iter().all(|&w| (w - 0.2).abs() < 1e-15));
    }

    #[test]
    fn stale_frames_are_rejected() {
        let ch = flat_channel(0.5, 2);
        let mcs = McsTable::qam(1);
        let mut rng = stream(9, 0, Purpose::Belief, 0);
        let mut b = Belief::new(ch.params(), 3, &mut rng).unwrap();
        b.propagate(ch.params(), &mut rng);
        // Lagged slot not yet available for d = 2.
        let r = b.update_weights(
            0,
            &frame_with(0, Feedback::Nak),
            &one_packet(1.0, 0),
            ch.modulation(),
            &mcs,
        );
        assert!(r.is_err());
        b.propagate(ch.params(), &mut rng);
        let r = b.update_weights(
            0,
            &frame_with(1, Feedback::Nak),
            &one_packet(1.0, 0),
            ch.modulation(),
            &mcs,
        );
        assert!(r.is_err());
        b.update_weights(
            0,
            &frame_with(0, Feedback::Nak),
            &one_packet(1.0, 0),
            ch.modulation(),
            &mcs,
        )
        .unwrap();
    }

    #[test]
    fn reweight_single_particle() {
        let ch = flat_channel(0.01, 1);
        let mut rng = stream(10, 0, Purpose::Belief, 0);
        let mut b = Belief::new(ch.params(), 1, &mut rng).unwrap();
        b.propagate(ch.params(), &mut rng);
        b.reweight_current(ch.params());
        assert_eq!(b.weights_current(), &[1.0]);
    }

    #[test]
    fn reweight_memoryless_limit() {
        let ch = flat_channel(1.0, 1);
        let mut rng = stream(11, 0, Purpose::Belief, 0);
        let mut b = Belief::new(ch.params(), 6, &mut rng).unwrap();
        b.propagate(ch.params(), &mut rng);
        b.reweight_current(ch.params());
        // Fresh prior draws under uniform lagged weights stay uniform.
        assert!(b
            .weights_current()
            .iter()
            .all(|w| (w - 1.0 / 6.0).abs() < 1e-12));
        let mut b = b.with_literal_mixture(true);
        b.reweight_current(ch.params());
        let dens: Vec<f64> = b
            .particles()
            .iter()
            .map(|h| (-h[0].norm_sqr()).exp())
            .collect();
        let total: f64 = dens.iter().sum();
        for (w, d) in b.weights_current().iter().zip(&dens) {
            assert!((w - d / total).abs() < 1e-12);
        }
    }

    #[test]
    fn reweight_symmetric_particles() {
        let ch = flat_channel(0.5, 1);
        let mut rng = stream(12, 0, Purpose::Belief, 0);
        let mut b = Belief::new(ch.params(), 2, &mut rng).unwrap();
        let p = Complex64::new(0.6, 0.0);
        b.history[0] = vec![vec![p], vec![-p]];
        b.propagate(ch.params(), &mut rng);
        // Current particles equidistant from both decayed parents.
        let c = Complex64::new(0.0, 0.2);
        *b.history.back_mut().unwrap() = vec![vec![c], vec![-c]];
        b.reweight_current(ch.params());
        let w = b.weights_current();
        assert!((w[0] - 0.5).abs() < 1e-12 && (w[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn weights_stay_normalized_over_a_run() {
        let ch = Channel::new(ChannelParams::new(4, 2, 1, 0.05, 1).unwrap());
        let mcs = McsTable::qam(3);
        let mut rng = stream(13, 0, Purpose::Belief, 0);
        let mut fb = stream(13, 0, Purpose::Feedback, 0);
        let mut truth = ch.init_state(&mut rng);
        let mut b = Belief::new(ch.params(), 50, &mut rng).unwrap();
        let mut s = Schedule::idle(4);
        s.set(
            0,
            Some(Assignment {
                user: 0,
                mcs: 1,
                power: 4.0,
            }),
        );
        s.set(
            3,
            Some(Assignment {
                user: 0,
                mcs: 0,
                power: 2.0,
            }),
        );
        let mut last = ch.gen_feedback(&truth, &s, &mcs, &mut fb);
        for _ in 0..30 {
            ch.step(&mut truth, &mut rng, 1);
            b.advance(0, &ch, Some((&s, &last)), &mcs, &mut rng)
                .unwrap();
            assert_normalized(b.weights_lagged());
            assert_normalized(b.weights_current());
            last = ch.gen_feedback(&truth, &s, &mcs, &mut fb);
        }
    }

    #[test]
    fn resampling_restores_uniform_weights() {
        let ch = flat_channel(0.05, 1);
        let mcs = McsTable::qam(1);
        let mut rng = stream(14, 0, Purpose::Belief, 0);
        let mut b = Belief::new(ch.params(), 40, &mut rng)
            .unwrap()
            .with_resampling(true);
        b.propagate(ch.params(), &mut rng);
        for _ in 0..5 {
            let slot = b.lagged_slot().unwrap();
            b.update_weights(
                0,
                &frame_with(slot, Feedback::Nak),
                &one_packet(8.0, 0),
                ch.modulation(),
                &mcs,
            )
            .unwrap();
            b.propagate(ch.params(), &mut rng);
        }
        assert!(b.resample_if_degenerate(&mut rng));
        assert!(b.weights_lagged().iter().all(|&w| w == 1.0 / 40.0));
    }

    #[test]
    fn posterior_matches_expectation_operator() {
        let ch = Channel::new(ChannelParams::new(8, 2, 1, 0.01, 1).unwrap());
        let mut rng = stream(15, 0, Purpose::Belief, 0);
        let mut b = Belief::new(ch.params(), 30, &mut rng).unwrap();
        b.propagate(ch.params(), &mut rng);
        b.reweight_current(ch.params());
        let post = b.posterior(ch.modulation());
        for n in 0..8 {
            let a = b.expect_ssg(ch.modulation(), n, |g| (-0.3 * g).exp());
            let c = post.expect(n, |g| (-0.3 * g).exp());
            assert!((a - c).abs() < 1e-12);
        }
        let single = SsgPosterior::point_mass(&[0.7, 0.2]);
        assert_eq!(single.mean(0), 0.7);
        assert_eq!(single.expect(1, |_| 1.0), 1.0);
    }
}
