//! Reference computations shared by the integration tests. Nothing here calls
//! into the solver or filter code under test beyond the plain data types.
#![allow(dead_code)]

use ofdma_greedy::belief::SsgPosterior;
use ofdma_greedy::channel::{stationary_taps, ChannelParams, ModulationMatrix};
use ofdma_greedy::mcs::{McsEntry, McsTable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random small allocation problem.
pub struct Instance {
    pub posteriors: Vec<SsgPosterior>,
    pub table: McsTable,
    pub budget: f64,
}

/// Posteriors built from stationary tap draws with random weights, so gains
/// are correlated across subchannels the way the filter produces them.
pub fn random_instance(seed: u64, max_n: usize, max_k: usize, max_m: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=max_n);
    let k = rng.random_range(1..=max_k);
    let m = rng.random_range(1..=max_m);
    let taps = rng.random_range(1..=n.min(2));
    let alpha = 10f64.powf(rng.random_range(-3.0..-1.0));
    let params = ChannelParams::new(n, taps, k, alpha, 1).unwrap();
    let modulation = ModulationMatrix::new(&params);
    let posteriors = (0..k)
        .map(|_| {
            let s = rng.random_range(1..=12);
            let particles: Vec<_> = (0..s).map(|_| stationary_taps(&params, &mut rng)).collect();
            let mut w: Vec<f64> = (0..s)
                .map(|_| -rng.random::<f64>().max(1e-12).ln())
                .collect();
            let sum: f64 = w.iter().sum();
            w.iter_mut().for_each(|x| *x /= sum);
            SsgPosterior::from_particles(&w, &particles, &modulation)
        })
        .collect();
    let snr_db: f64 = rng.random_range(0.0..20.0);
    Instance {
        posteriors,
        table: McsTable::qam(m),
        budget: 10f64.powf(snr_db / 10.0) * n as f64,
    }
}

/// `(weights, gains)` of user `k` on subchannel `n`.
fn samples(post: &SsgPosterior, n: usize) -> (&[f64], &[f64]) {
    (post.weights(), post.gains(n))
}

/// Expected goodput `E{(1 - min(1, a·e^{-bPγ}))·r}` and its derivative in `P`.
pub fn goodput_and_slope(e: &McsEntry, w: &[f64], g: &[f64], p: f64) -> (f64, f64) {
    let mut val = 0.0;
    let mut der = 0.0;
    for (&wi, &gi) in w.iter().zip(g) {
        let eps = e.a * (-e.b * p * gi).exp();
        if eps <= 1.0 {
            val += wi * (1.0 - eps) * e.r;
            der += wi * e.r * e.b * gi * eps;
        }
    }
    (val, der)
}

/// Power maximizing `goodput(P) - μP` by bisection on the slope.
fn best_power(e: &McsEntry, w: &[f64], g: &[f64], mu: f64) -> f64 {
    if goodput_and_slope(e, w, g, 0.0).1 <= mu {
        return 0.0;
    }
    let mut hi = 1.0;
    while goodput_and_slope(e, w, g, hi).1 > mu {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    while hi - lo > 1e-15 * hi {
        let mid = 0.5 * (lo + hi);
        if goodput_and_slope(e, w, g, mid).1 > mu {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Best expected utility of one fixed schedule (identity utility, sum
/// power `budget`), found by bisection on the power price.
pub fn fixed_schedule_utility(legs: &[(&McsEntry, &[f64], &[f64])], budget: f64) -> f64 {
    let live: Vec<_> = legs
        .iter()
        .filter(|(_, w, g)| w.iter().zip(g.iter()).any(|(a, b)| a * b > 0.0))
        .collect();
    if live.is_empty() {
        return legs
            .iter()
            .map(|(e, w, g)| goodput_and_slope(e, w, g, 0.0).0)
            .sum();
    }
    let total = |mu: f64| -> f64 { live.iter().map(|(e, w, g)| best_power(e, w, g, mu)).sum() };
    let mut hi = live
        .iter()
        .map(|(e, w, g)| goodput_and_slope(e, w, g, 0.0).1)
        .fold(0.0, f64::max);
    let mut lo = hi;
    while total(lo) < budget {
        lo *= 0.5;
    }
    while hi - lo > 1e-15 * hi {
        let mid = 0.5 * (lo + hi);
        if total(mid) > budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Split the remaining budget between the two bracketing allocations.
    let p_lo: Vec<f64> = live
        .iter()
        .map(|(e, w, g)| best_power(e, w, g, lo))
        .collect();
    let p_hi: Vec<f64> = live
        .iter()
        .map(|(e, w, g)| best_power(e, w, g, hi))
        .collect();
    let (s_lo, s_hi): (f64, f64) = (p_lo.iter().sum(), p_hi.iter().sum());
    let t = if s_lo > s_hi {
        (budget - s_hi) / (s_lo - s_hi)
    } else {
        0.0
    };
    let dead: f64 = legs
        .iter()
        .filter(|(_, w, g)| !w.iter().zip(g.iter()).any(|(a, b)| a * b > 0.0))
        .map(|(e, w, g)| goodput_and_slope(e, w, g, 0.0).0)
        .sum();
    dead + live
        .iter()
        .zip(p_lo.iter().zip(&p_hi))
        .map(|((e, w, g), (a, b))| goodput_and_slope(e, w, g, b + t * (a - b)).0)
        .sum::<f64>()
}

/// Exhaustive optimum over every schedule (each subchannel idle or one
/// `(user, mcs)`), identity utility.
pub fn exhaustive_utility(inst: &Instance) -> f64 {
    let n_sub = inst.posteriors[0].subchannels();
    let k = inst.posteriors.len();
    let m = inst.table.len();
    let radix = k * m + 1;
    let mut best = f64::NEG_INFINITY;
    for code in 0..radix.pow(n_sub as u32) {
        let mut rest = code;
        let mut legs = Vec::new();
        for n in 0..n_sub {
            let d = rest % radix;
            rest /= radix;
            if d > 0 {
                let (user, mcs) = ((d - 1) / m, (d - 1) % m);
                let (w, g) = samples(&inst.posteriors[user], n);
                legs.push((inst.table.get(mcs), w, g));
            }
        }
        best = best.max(fixed_schedule_utility(&legs, inst.budget));
    }
    best
}

/// Modified Bessel function `I0(x)·e^{-x}`, polynomial fits good to ~1e-7.
pub fn bessel_i0e(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 3.75 {
        let y = (x / 3.75).powi(2);
        let p = 1.0
            + y * (3.515_622_9
                + y * (3.089_942_4
                    + y * (1.206_749_2 + y * (0.265_973_2 + y * (0.036_076_8 + y * 0.004_581_3)))));
        p * (-ax).exp()
    } else {
        let y = 3.75 / ax;
        let p = 0.398_942_28
            + y * (0.013_285_92
                + y * (0.002_253_19
                    + y * (-0.001_575_65
                        + y * (0.009_162_81
                            + y * (-0.020_577_06
                                + y * (0.026_355_37 + y * (-0.016_476_33 + y * 0.003_923_77)))))));
        p / ax.sqrt()
    }
}

/// One-tap, one-subchannel filter computed on a grid over `r = |h|`.
///
/// The prior is the stationary Rayleigh law, each slot multiplies by the
/// ACK/NAK likelihood and then applies the one-step Rician transition.
pub struct RadialGrid {
    pub r: Vec<f64>,
    pub density: Vec<f64>,
    dr: f64,
}

impl RadialGrid {
    pub fn stationary(points: usize, alpha: f64) -> Self {
        let v = alpha / (2.0 - alpha);
        let r_max = (40.0 * v).sqrt();
        let dr = r_max / points as f64;
        let r: Vec<f64> = (0..points).map(|i| (i as f64 + 0.5) * dr).collect();
        let density = r
            .iter()
            .map(|&x| 2.0 * x / v * (-x * x / v).exp())
            .collect();
        let mut out = Self { r, density, dr };
        out.normalize();
        out
    }

    fn normalize(&mut self) {
        let s: f64 = self.density.iter().sum::<f64>() * self.dr;
        self.density.iter_mut().for_each(|d| *d /= s);
    }

    /// Multiplies by the probability of the observed outcome given `γ = β r²`.
    pub fn observe(&mut self, entry: &McsEntry, power: f64, beta: f64, ack: bool) {
        for (d, &x) in self.density.iter_mut().zip(&self.r) {
            let eps = (entry.a * (-entry.b * power * beta * x * x).exp()).min(1.0);
            *d *= if ack { 1.0 - eps } else { eps };
        }
        self.normalize();
    }

    /// `h' = (1-α)h + α·w`: `|h'|` given `|h|` is Rician.
    pub fn transition(&mut self, alpha: f64) {
        let c = 1.0 - alpha;
        let s2 = alpha * alpha;
        let width = 12.0 * alpha;
        let n = self.r.len();
        let mut next = vec![0.0; n];
        for (j, &x) in self.r.iter().enumerate() {
            let mass = self.density[j] * self.dr;
            if mass == 0.0 {
                continue;
            }
            let centre = c * x;
            let i0 = (((centre - width) / self.dr).floor().max(0.0)) as usize;
            let i1 = (((centre + width) / self.dr).ceil() as usize).min(n);
            let kernel: Vec<f64> = (i0..i1)
                .map(|i| {
                    let y = self.r[i];
                    let z = 2.0 * centre * y / s2;
                    2.0 * y / s2 * (-(y - centre).powi(2) / s2).exp() * bessel_i0e(z)
                })
                .collect();
            let total: f64 = kernel.iter().sum();
            if total > 0.0 {
                for (i, k) in (i0..i1).zip(kernel) {
                    next[i] += mass * k / total / self.dr;
                }
            }
        }
        self.density = next;
        self.normalize();
    }

    /// Mean and variance of `γ = β r²`.
    pub fn gain_moments(&self, beta: f64) -> (f64, f64) {
        let m1: f64 = self
            .r
            .iter()
            .zip(&self.density)
            .map(|(x, d)| beta * x * x * d)
            .sum::<f64>()
            * self.dr;
        let m2: f64 = self
            .r
            .iter()
            .zip(&self.density)
            .map(|(x, d)| (beta * x * x).powi(2) * d)
            .sum::<f64>()
            * self.dr;
        (m1, m2 - m1 * m1)
    }
}
