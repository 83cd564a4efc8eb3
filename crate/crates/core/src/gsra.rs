//! Greedy scheduling and resource allocation.
//!
//! For a power price `μ`, every `(n,k,m)` gets the power that minimizes
//! `V = -E{U((1 - ε)r)} + μP`. Each subchannel keeps the minimizer of `V`
//! among the candidates with `V ≤ 0` (smallest power on ties), and the
//! resulting total power is non-increasing in `μ`. A bisection on `μ` matches
//! the budget, the two bracketing schedules get their powers re-solved with
//! the user set held fixed, and the one with the smaller Lagrangian wins.
//!
//! [`brute_force_allocate`] runs the fixed-schedule power step on every
//! admissible schedule and is used as the reference for small instances.

use crate::belief::SsgPosterior;
use crate::mcs::{Combo, McsEntry, McsTable, Utility};
use crate::schedule::{Assignment, Schedule};
use crate::{Error, Result};

/// Default enumeration limit for [`brute_force_allocate`].
pub const DEFAULT_ENUMERATION_CAP: usize = 5000;

const MAX_ROOT_ITERATIONS: usize = 300;
/// Newton steps before the root solve falls back to plain bisection.
const NEWTON_ITERATIONS: usize = 60;

/// Bisection tolerance on `μ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kappa {
    Absolute(f64),
    /// Fraction of `μ_max` for the instance at hand.
    RelativeToMuMax(f64),
}

impl Kappa {
    pub fn resolve(&self, mu_max: f64) -> f64 {
        match *self {
            Kappa::Absolute(k) => k,
            Kappa::RelativeToMuMax(f) => f * mu_max,
        }
    }

    fn value(&self) -> f64 {
        match *self {
            Kappa::Absolute(k) | Kappa::RelativeToMuMax(k) => k,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Sum-power budget `X_con`.
    pub budget: f64,
    pub kappa: Kappa,
    /// Relative tolerance of the per-candidate power root.
    pub root_tol: f64,
    /// Cap on outer bisection iterations.
    pub max_outer: usize,
}

impl SolverConfig {
    pub fn new(budget: f64) -> Self {
        Self {
            budget,
            kappa: Kappa::RelativeToMuMax(1e-4),
            root_tol: 1e-9,
            max_outer: 200,
        }
    }

    pub fn with_kappa(mut self, kappa: Kappa) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.budget > 0.0 && self.budget.is_finite()) {
            return Err(Error::InvalidParam(format!(
                "power budget must be positive, got {}",
                self.budget
            )));
        }
        let k = self.kappa.value();
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidParam(format!(
                "kappa must be positive, got {k}"
            )));
        }
        if !(self.root_tol > 0.0 && self.root_tol < 1.0) {
            return Err(Error::InvalidParam(format!(
                "root tolerance must lie in (0, 1), got {}",
                self.root_tol
            )));
        }
        Ok(())
    }
}

/// Bound on the utility lost to the greedy projection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapCertificate {
    pub mu_low: f64,
    pub mu_high: f64,
    /// Duality gap `min_μ D(μ) - Û` over the prices visited, where
    /// `D(μ) = μ·X_con - Σ_n min(0, min_{k,m} V)` bounds the optimum from
    /// above and `Û` is the utility returned. Zero when degenerate.
    pub bound: f64,
    /// `(μ_high - μ_min)·max(0, X_con - X_tot(μ_high))`, or 0 when
    /// degenerate. Always at least `bound` up to solver tolerance.
    pub projection_bound: f64,
    /// Both bracketing schedules coincide and no subchannel had more than one
    /// minimizer.
    pub degenerate: bool,
}

/// Work counters of one [`greedy_allocate`] call.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverStats {
    pub iterations: usize,
    /// Per-candidate power evaluations inside the bisection, short-circuited
    /// zero powers included.
    pub bisection_power_solves: usize,
    /// Winner-set and projection steps inside the bisection, two per
    /// subchannel per iteration.
    pub selection_ops: usize,
    /// Power evaluations spent on the endpoints and fixed-schedule re-solves.
    pub endpoint_power_solves: usize,
    /// `(μ, X_tot(μ))` for every bisection midpoint, in visiting order.
    pub trace: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub schedule: Schedule,
    pub certificate: GapCertificate,
    pub stats: SolverStats,
    /// Expected utility of `schedule`.
    pub utility: f64,
    /// Lagrangian of the chosen schedule at its final price.
    pub lagrangian: f64,
    pub mu_min: f64,
    pub mu_max: f64,
    /// Absolute tolerance used on `μ`.
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceResult {
    pub schedule: Schedule,
    pub utility: f64,
    pub lagrangian: f64,
    pub schedules_evaluated: usize,
}

/// Winners on one subchannel at one price.
#[derive(Debug, Clone, PartialEq)]
pub struct SubchannelWinners {
    /// Minimizers of `V` among candidates with `V ≤ 0`, excluding
    /// zero-power candidates whose `V` is exactly 0.
    pub set: Vec<Combo>,
    /// The member kept by the projection.
    pub chosen: Option<(Combo, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub mu: f64,
    pub winners: Vec<SubchannelWinners>,
    /// Projected schedule with powers `P*(μ)`.
    pub schedule: Schedule,
    pub total_power: f64,
}

/// One `(n,k,m)` with its gain samples.
struct Cand<'a> {
    combo: Combo,
    a: f64,
    ln_a: f64,
    b: f64,
    r: f64,
    w: &'a [f64],
    g: &'a [f64],
    mean_gain: f64,
    /// `μ` at and above which the optimal power is zero.
    threshold: f64,
}

impl<'a> Cand<'a> {
    fn new(combo: Combo, e: &McsEntry, post: &'a SsgPosterior, utility: &Utility) -> Self {
        let w = post.weights();
        let g = post.gains(combo.sub);
        let mut c = Cand {
            combo,
            a: e.a,
            ln_a: e.a.ln(),
            b: e.b,
            r: e.r,
            w,
            g,
            mean_gain: w.iter().zip(g).map(|(w, g)| w * g).sum(),
            threshold: 0.0,
        };
        c.threshold = c.marginal(0.0, utility).0;
        c
    }

    fn live(&self) -> bool {
        self.mean_gain > 0.0
    }

    /// `a·b·r·E{U'(g)·γ·e^{-bPγ}}` and its derivative in `P`.
    #[inline]
    fn marginal(&self, p: f64, utility: &Utility) -> (f64, f64) {
        let user = self.combo.user;
        let mut d = 0.0;
        let mut dd = 0.0;
        if let Some(wu) = utility.linear_weight(user) {
            // U' constant, U'' zero; the clipped branch has the same form.
            for (&wi, &gi) in self.w.iter().zip(self.g) {
                let t = wi * gi * (self.ln_a - self.b * p * gi).exp();
                d += t;
                dd -= t * gi;
            }
            let s = wu * self.b * self.r;
            return (s * d, s * self.b * dd);
        }
        for (&wi, &gi) in self.w.iter().zip(self.g) {
            let ln_raw = self.ln_a - self.b * p * gi;
            if ln_raw > 0.0 {
                // Error rate clipped at 1: goodput is flat in P here.
                let slope = utility.parts(user, 0.0, self.r).slope * ln_raw.exp();
                d += wi * gi * slope;
                dd -= wi * gi * gi * slope;
            } else {
                let u = utility.parts(user, ln_raw, self.r);
                d += wi * gi * u.slope;
                dd += wi * gi * gi * (self.r * u.curvature - u.slope);
            }
        }
        (self.b * self.r * d, self.b * self.b * self.r * dd)
    }

    /// `ln D(P)` and its derivative for a linear utility with slope `wu`,
    /// evaluated with a max shift so it never underflows.
    fn ln_marginal(&self, p: f64, wu: f64) -> (f64, f64) {
        let e = |wi: f64, gi: f64| (wi * gi).ln() + self.ln_a - self.b * p * gi;
        let top = self
            .w
            .iter()
            .zip(self.g)
            .filter(|(&wi, &gi)| wi * gi > 0.0)
            .map(|(&wi, &gi)| e(wi, gi))
            .fold(f64::NEG_INFINITY, f64::max);
        let (mut sum, mut gsum) = (0.0, 0.0);
        for (&wi, &gi) in self.w.iter().zip(self.g) {
            if wi * gi > 0.0 {
                let t = (e(wi, gi) - top).exp();
                sum += t;
                gsum += t * gi;
            }
        }
        ((wu * self.b * self.r).ln() + top + sum.ln(), -self.b * gsum / sum)
    }

    fn expected_utility(&self, p: f64, utility: &Utility) -> f64 {
        let user = self.combo.user;
        if let Some(wu) = utility.linear_weight(user) {
            let miss: f64 = self
                .w
                .iter()
                .zip(self.g)
                .map(|(&wi, &gi)| wi * (self.ln_a - self.b * p * gi).min(0.0).exp())
                .sum();
            return wu * self.r * (self.w.iter().sum::<f64>() - miss);
        }
        self.w
            .iter()
            .zip(self.g)
            .map(|(&wi, &gi)| {
                wi * utility
                    .parts(user, (self.ln_a - self.b * p * gi).min(0.0), self.r)
                    .value
            })
            .sum()
    }

    fn v(&self, mu: f64, p: f64, utility: &Utility) -> f64 {
        -self.expected_utility(p, utility) + mu * p
    }

    /// Optimal power at price `mu`. The root is known to lie in `[lo, hi]`
    /// (`hi = None` when no upper bound is known).
    fn power(&self, mu: f64, lo: f64, hi: Option<f64>, utility: &Utility, tol: f64) -> Result<f64> {
        if !self.live() || mu >= self.threshold {
            return Ok(0.0);
        }
        let mut lo = lo.max(0.0);
        let mut hi = hi.filter(|&h| h >= lo);
        let guess = (self.threshold.ln() - mu.ln()) / (self.b * self.mean_gain);
        let mut x = match hi {
            Some(h) if !(guess > lo && guess < h) => 0.5 * (lo + h),
            _ => guess.max(lo),
        };
        let linear = utility.linear_weight(self.combo.user);
        let ln_mu = mu.ln();
        for it in 0..MAX_ROOT_ITERATIONS {
            // Linear utilities solve ln D(P) = ln μ, which stays accurate
            // where D itself underflows.
            let (d, step) = match linear {
                Some(wu) => {
                    let (ln_m, slope) = self.ln_marginal(x, wu);
                    let d = ln_m - ln_mu;
                    (d, d / slope)
                }
                None => {
                    let (m, dm) = self.marginal(x, utility);
                    (m - mu, (m - mu) / dm)
                }
            };
            if d == 0.0 {
                return Ok(x);
            }
            if d.is_nan() {
                break;
            }
            if d > 0.0 {
                lo = x;
            } else {
                hi = Some(x);
            }
            let newton = x - step;
            let next = match hi {
                Some(h) if it >= NEWTON_ITERATIONS || !(newton > lo && newton < h) => 0.5 * (lo + h),
                Some(_) => newton,
                None if newton.is_finite() && newton > lo => newton,
                None => 2.0 * x + 1.0,
            };
            if (next - x).abs() <= tol * next.abs() || hi.is_some_and(|h| h - lo <= tol * h) {
                return Ok(next);
            }
            x = next;
        }
        Err(Error::RootSolve(format!(
            "power root for {:?} at mu={mu} did not converge",
            self.combo
        )))
    }
}

/// All candidates of an instance, ordered by subchannel, then user, then MCS.
struct Instance<'a> {
    cands: Vec<Cand<'a>>,
    subchannels: usize,
    per_sub: usize,
    mcs_len: usize,
    utility: &'a Utility,
}

impl<'a> Instance<'a> {
    fn new(posteriors: &'a [SsgPosterior], mcs: &McsTable, utility: &'a Utility) -> Result<Self> {
        let users = posteriors.len();
        if users == 0 {
            return Err(Error::InvalidParam("no users".into()));
        }
        let subchannels = posteriors[0].subchannels();
        if posteriors
            .iter()
            .any(|p| p.subchannels() != subchannels || p.is_empty())
        {
            return Err(Error::InvalidParam(
                "posteriors disagree on subchannels or are empty".into(),
            ));
        }
        utility.validate(mcs, users)?;
        let mut cands = Vec::with_capacity(subchannels * users * mcs.len());
        for n in 0..subchannels {
            for (k, post) in posteriors.iter().enumerate() {
                for (m, e) in mcs.entries().iter().enumerate() {
                    cands.push(Cand::new(Combo::new(n, k, m), e, post, utility));
                }
            }
        }
        Ok(Self {
            cands,
            subchannels,
            per_sub: users * mcs.len(),
            mcs_len: mcs.len(),
            utility,
        })
    }

    fn bounds(&self, idx: impl Iterator<Item = usize>, budget: f64) -> Option<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        let mut any = false;
        for j in idx {
            let c = &self.cands[j];
            if !c.live() {
                continue;
            }
            any = true;
            hi = hi.max(c.threshold);
            lo = lo.min(c.marginal(budget, self.utility).0);
        }
        any.then(|| (lo.max(f64::MIN_POSITIVE).min(hi), hi))
    }

    fn power(&self, j: usize, mu: f64, lo: f64, hi: Option<f64>, tol: f64) -> Result<f64> {
        self.cands[j].power(mu, lo, hi, self.utility, tol)
    }
}

fn iteration_count(width: f64, kappa: f64, cap: usize) -> usize {
    if width <= kappa {
        0
    } else {
        ((width / kappa).log2().ceil() as usize).min(cap)
    }
}

/// Keeps the minimum-`V` set among `(combo, V, P)` with `V ≤ 0` and projects
/// it to one entry: smallest power, then lowest `(user, mcs)`. Zero-power
/// entries with `V = 0` are treated as idle. Entries within
/// `1e-12·max(1, |V_min|)` of the minimum count as ties.
pub fn pick_winner(cands: &[(Combo, f64, f64)]) -> SubchannelWinners {
    let eligible = |&&(_, v, p): &&(Combo, f64, f64)| v <= 0.0 && !(v == 0.0 && p == 0.0);
    let vmin = cands
        .iter()
        .filter(eligible)
        .map(|c| c.1)
        .fold(f64::INFINITY, f64::min);
    if vmin == f64::INFINITY {
        return SubchannelWinners {
            set: vec![],
            chosen: None,
        };
    }
    let tie = 1e-12 * vmin.abs().max(1.0);
    let mut set: Vec<&(Combo, f64, f64)> = cands
        .iter()
        .filter(eligible)
        .filter(|c| c.1 <= vmin + tie)
        .collect();
    set.sort_by(|x, y| {
        x.2.total_cmp(&y.2)
            .then((x.0.user, x.0.mcs).cmp(&(y.0.user, y.0.mcs)))
    });
    SubchannelWinners {
        chosen: set.first().map(|c| (c.0, c.2)),
        set: {
            let mut s: Vec<Combo> = set.iter().map(|c| c.0).collect();
            s.sort();
            s
        },
    }
}

/// Price evaluation inside the bisection.
struct MuEval {
    mu: f64,
    powers: Vec<f64>,
    /// Chosen candidate index per subchannel.
    choice: Vec<Option<usize>>,
    total: f64,
    max_set: usize,
    /// Relaxed Lagrangian dual `μ·X_con - Σ_n min(0, min V)`.
    dual: f64,
}

fn evaluate_mu(
    inst: &Instance,
    mu: f64,
    above: Option<&MuEval>,
    below: Option<&MuEval>,
    budget: f64,
    tol: f64,
) -> Result<MuEval> {
    let mut powers = Vec::with_capacity(inst.cands.len());
    for j in 0..inst.cands.len() {
        // Power is non-increasing in μ: an evaluation at a higher price
        // bounds the root from below and one at a lower price from above.
        let lo = above.map_or(0.0, |e| e.powers[j]);
        let hi = below.map(|e| e.powers[j]);
        powers.push(inst.power(j, mu, lo, hi, tol)?);
    }
    let mut choice = Vec::with_capacity(inst.subchannels);
    let mut total = 0.0;
    let mut max_set = 0;
    let mut dual = mu * budget;
    let mut buf = Vec::with_capacity(inst.per_sub);
    for n in 0..inst.subchannels {
        buf.clear();
        let base = n * inst.per_sub;
        for j in base..base + inst.per_sub {
            let c = &inst.cands[j];
            buf.push((c.combo, c.v(mu, powers[j], inst.utility), powers[j]));
        }
        dual -= buf.iter().map(|c| c.1).fold(0.0, f64::min);
        let w = pick_winner(&buf);
        max_set = max_set.max(w.set.len());
        let idx = w.chosen.map(|(c, p)| {
            total += p;
            base + c.user * inst.mcs_len + c.mcs
        });
        choice.push(idx);
    }
    Ok(MuEval {
        mu,
        powers,
        choice,
        total,
        max_set,
        dual,
    })
}

/// Powers for a fixed schedule, matched to the budget by bisection on `μ`
/// and linear interpolation between the two bracketing allocations.
struct Fixed {
    powers: Vec<f64>,
    utility: f64,
    lagrangian: f64,
}

fn solve_fixed(
    inst: &Instance,
    sched: &[usize],
    budget: f64,
    kappa: f64,
    tol: f64,
    max_outer: usize,
    solves: &mut usize,
) -> Result<Fixed> {
    let utility_of = |powers: &[f64]| -> f64 {
        sched
            .iter()
            .zip(powers)
            .map(|(&j, &p)| inst.cands[j].expected_utility(p, inst.utility))
            .sum()
    };
    let Some((mu_min, mu_max)) = inst.bounds(sched.iter().copied(), budget) else {
        let powers = vec![0.0; sched.len()];
        let u = utility_of(&powers);
        return Ok(Fixed {
            powers,
            utility: u,
            lagrangian: -u,
        });
    };
    let eval = |mu: f64,
                lo: Option<&Vec<f64>>,
                hi: Option<&Vec<f64>>,
                solves: &mut usize|
     -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(sched.len());
        for (i, &j) in sched.iter().enumerate() {
            out.push(inst.power(j, mu, hi.map_or(0.0, |h| h[i]), lo.map(|l| l[i]), tol)?);
        }
        *solves += sched.len();
        Ok(out)
    };
    let (mut lo, mut hi) = (mu_min, mu_max);
    let mut p_lo: Option<Vec<f64>> = None;
    let mut p_hi: Option<Vec<f64>> = None;
    for _ in 0..iteration_count(mu_max - mu_min, kappa, max_outer) {
        let mu = 0.5 * (lo + hi);
        let p = eval(mu, p_lo.as_ref(), p_hi.as_ref(), solves)?;
        if p.iter().sum::<f64>() > budget {
            lo = mu;
            p_lo = Some(p);
        } else {
            hi = mu;
            p_hi = Some(p);
        }
    }
    let p_lo = match p_lo {
        Some(p) => p,
        None => eval(lo, None, p_hi.as_ref(), solves)?,
    };
    let p_hi = match p_hi {
        Some(p) => p,
        None => eval(hi, Some(&p_lo), None, solves)?,
    };
    let (x_lo, x_hi): (f64, f64) = (p_lo.iter().sum(), p_hi.iter().sum());
    let lambda = if x_lo != x_hi {
        ((x_lo - budget) / (x_lo - x_hi)).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let mut powers: Vec<f64> = p_lo
        .iter()
        .zip(&p_hi)
        .map(|(l, h)| lambda * h + (1.0 - lambda) * l)
        .collect();
    let total: f64 = powers.iter().sum();
    if total > budget {
        let s = budget / total;
        powers.iter_mut().for_each(|p| *p *= s);
    }
    let total: f64 = powers.iter().sum();
    let u = utility_of(&powers);
    Ok(Fixed {
        lagrangian: (total - budget) * hi - u,
        utility: u,
        powers,
    })
}

fn build_schedule(inst: &Instance, sched: &[usize], powers: &[f64]) -> Schedule {
    let mut s = Schedule::idle(inst.subchannels);
    for (&j, &p) in sched.iter().zip(powers) {
        let c = &inst.cands[j];
        // A zero-power packet with a ≥ 1 fails surely; leave the slot idle.
        if p == 0.0 && c.a >= 1.0 {
            continue;
        }
        s.set(
            c.combo.sub,
            Some(Assignment {
                user: c.combo.user,
                mcs: c.combo.mcs,
                power: p,
            }),
        );
    }
    s
}

/// `[μ_min, μ_max]` over every candidate with a non-zero mean gain.
pub fn mu_bounds(
    posteriors: &[SsgPosterior],
    mcs: &McsTable,
    utility: &Utility,
    budget: f64,
) -> Result<(f64, f64)> {
    let inst = Instance::new(posteriors, mcs, utility)?;
    inst.bounds(0..inst.cands.len(), budget)
        .ok_or(Error::ChannelDead)
}

/// Power minimizing `V` for one candidate at price `mu`.
pub fn solve_power(
    mu: f64,
    posterior: &SsgPosterior,
    combo: Combo,
    entry: &McsEntry,
    utility: &Utility,
    root_tol: f64,
) -> Result<f64> {
    if !(mu >= 0.0) {
        return Err(Error::InvalidParam(format!(
            "price must be non-negative, got {mu}"
        )));
    }
    let c = Cand::new(combo, entry, posterior, utility);
    if mu == 0.0 && c.live() {
        return Err(Error::RootSolve(
            "zero price has no finite optimal power".into(),
        ));
    }
    c.power(mu, 0.0, None, utility, root_tol)
}

/// `V = -E{U((1 - ε)r)} + μP`.
pub fn v_metric(
    mu: f64,
    power: f64,
    posterior: &SsgPosterior,
    combo: Combo,
    entry: &McsEntry,
    utility: &Utility,
) -> f64 {
    Cand::new(combo, entry, posterior, utility).v(mu, power, utility)
}

/// Expected utility of a schedule under the given posteriors.
pub fn expected_utility(
    schedule: &Schedule,
    posteriors: &[SsgPosterior],
    mcs: &McsTable,
    utility: &Utility,
) -> f64 {
    schedule
        .combos()
        .map(|(c, p)| {
            Cand::new(c, mcs.get(c.mcs), &posteriors[c.user], utility).expected_utility(p, utility)
        })
        .sum()
}

/// Winner sets and projected schedule at price `mu`.
pub fn select_winners(
    mu: f64,
    posteriors: &[SsgPosterior],
    mcs: &McsTable,
    utility: &Utility,
    root_tol: f64,
) -> Result<Selection> {
    let inst = Instance::new(posteriors, mcs, utility)?;
    let mut winners = Vec::with_capacity(inst.subchannels);
    let mut schedule = Schedule::idle(inst.subchannels);
    for n in 0..inst.subchannels {
        let mut buf = Vec::with_capacity(inst.per_sub);
        for j in n * inst.per_sub..(n + 1) * inst.per_sub {
            let p = inst.power(j, mu, 0.0, None, root_tol)?;
            let c = &inst.cands[j];
            buf.push((c.combo, c.v(mu, p, utility), p));
        }
        let w = pick_winner(&buf);
        if let Some((c, p)) = w.chosen {
            schedule.set(
                n,
                Some(Assignment {
                    user: c.user,
                    mcs: c.mcs,
                    power: p,
                }),
            );
        }
        winners.push(w);
    }
    Ok(Selection {
        mu,
        winners,
        total_power: schedule.total_power(),
        schedule,
    })
}

/// Total projected power `X_tot(μ)`.
pub fn projected_power(
    mu: f64,
    posteriors: &[SsgPosterior],
    mcs: &McsTable,
    utility: &Utility,
    root_tol: f64,
) -> Result<f64> {
    Ok(select_winners(mu, posteriors, mcs, utility, root_tol)?.total_power)
}

/// Greedy allocation with its gap certificate.
pub fn greedy_allocate(
    posteriors: &[SsgPosterior],
    mcs: &McsTable,
    utility: &Utility,
    config: &SolverConfig,
) -> Result<Allocation> {
    config.validate()?;
    let inst = Instance::new(posteriors, mcs, utility)?;
    let budget = config.budget;
    let tol = config.root_tol;
    let (mu_min, mu_max) = inst
        .bounds(0..inst.cands.len(), budget)
        .ok_or(Error::ChannelDead)?;
    let kappa = config.kappa.resolve(mu_max);
    let iterations = iteration_count(mu_max - mu_min, kappa, config.max_outer);

    let mut stats = SolverStats {
        iterations,
        ..Default::default()
    };
    let (mut lo, mut hi) = (mu_min, mu_max);
    let mut e_lo: Option<MuEval> = None;
    let mut e_hi: Option<MuEval> = None;
    let mut dual = f64::INFINITY;
    for _ in 0..iterations {
        let mu = 0.5 * (lo + hi);
        let e = evaluate_mu(&inst, mu, e_hi.as_ref(), e_lo.as_ref(), budget, tol)?;
        dual = dual.min(e.dual);
        stats.bisection_power_solves += inst.cands.len();
        stats.selection_ops += 2 * inst.subchannels;
        stats.trace.push((mu, e.total));
        if e.total > budget {
            lo = mu;
            e_lo = Some(e);
        } else {
            hi = mu;
            e_hi = Some(e);
        }
    }
    let e_lo = match e_lo {
        Some(e) => e,
        None => {
            stats.endpoint_power_solves += inst.cands.len();
            evaluate_mu(&inst, lo, e_hi.as_ref(), None, budget, tol)?
        }
    };
    let e_hi = match e_hi {
        Some(e) => e,
        None => {
            stats.endpoint_power_solves += inst.cands.len();
            evaluate_mu(&inst, hi, None, Some(&e_lo), budget, tol)?
        }
    };

    let sched_lo: Vec<usize> = e_lo.choice.iter().flatten().copied().collect();
    let sched_hi: Vec<usize> = e_hi.choice.iter().flatten().copied().collect();
    let mut solves = 0;
    let f_hi = solve_fixed(
        &inst,
        &sched_hi,
        budget,
        kappa,
        tol,
        config.max_outer,
        &mut solves,
    )?;
    let (sched, fixed) = if sched_lo == sched_hi {
        (sched_hi, f_hi)
    } else {
        let f_lo = solve_fixed(
            &inst,
            &sched_lo,
            budget,
            kappa,
            tol,
            config.max_outer,
            &mut solves,
        )?;
        if f_lo.lagrangian < f_hi.lagrangian {
            (sched_lo, f_lo)
        } else {
            (sched_hi, f_hi)
        }
    };
    stats.endpoint_power_solves += solves;

    dual = dual.min(e_lo.dual).min(e_hi.dual);
    let degenerate = e_lo.choice == e_hi.choice && e_lo.max_set <= 1 && e_hi.max_set <= 1;
    let (bound, projection_bound) = if degenerate {
        (0.0, 0.0)
    } else {
        (
            (dual - fixed.utility).max(0.0),
            (hi - mu_min) * (budget - e_hi.total).max(0.0),
        )
    };
    debug_assert!(e_lo.mu == lo && e_hi.mu == hi);
    Ok(Allocation {
        schedule: build_schedule(&inst, &sched, &fixed.powers),
        certificate: GapCertificate {
            mu_low: lo,
            mu_high: hi,
            bound,
            projection_bound,
            degenerate,
        },
        stats,
        utility: fixed.utility,
        lagrangian: fixed.lagrangian,
        mu_min,
        mu_max,
        kappa,
    })
}

/// Exhaustive search over all `(KM + 1)^N` schedules. `config.kappa` is
/// resolved against the instance-wide `μ_max`, as in [`greedy_allocate`], so
/// both solvers price a given schedule identically.
pub fn brute_force_allocate(
    posteriors: &[SsgPosterior],
    mcs: &McsTable,
    utility: &Utility,
    config: &SolverConfig,
    cap: usize,
) -> Result<BruteForceResult> {
    config.validate()?;
    let inst = Instance::new(posteriors, mcs, utility)?;
    let radix = inst.per_sub + 1;
    let needed = (radix as f64).powi(inst.subchannels as i32);
    if needed > cap as f64 {
        return Err(Error::EnumerationCap { needed, cap });
    }
    let (_, mu_max) = inst
        .bounds(0..inst.cands.len(), config.budget)
        .ok_or(Error::ChannelDead)?;
    let kappa = config.kappa.resolve(mu_max);
    let total = needed as usize;
    let mut best: Option<(Vec<usize>, Fixed)> = None;
    let mut digits = vec![0usize; inst.subchannels];
    let mut sched = Vec::with_capacity(inst.subchannels);
    let mut solves = 0;
    for code in 0..total {
        let mut rest = code;
        for d in digits.iter_mut() {
            *d = rest % radix;
            rest /= radix;
        }
        sched.clear();
        sched.extend(
            digits
                .iter()
                .enumerate()
                .filter(|(_, &d)| d > 0)
                .map(|(n, &d)| n * inst.per_sub + d - 1),
        );
        let f = solve_fixed(
            &inst,
            &sched,
            config.budget,
            kappa,
            config.root_tol,
            config.max_outer,
            &mut solves,
        )?;
        if best
            .as_ref()
            .is_none_or(|(_, b)| f.lagrangian < b.lagrangian)
        {
            best = Some((sched.clone(), f));
        }
    }
    let (sched, fixed) = best.expect("at least the idle schedule is enumerated");
    Ok(BruteForceResult {
        schedule: build_schedule(&inst, &sched, &fixed.powers),
        utility: fixed.utility,
        lagrangian: fixed.lagrangian,
        schedules_evaluated: total,
    })
}
