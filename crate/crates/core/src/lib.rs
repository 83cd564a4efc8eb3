//! Joint user scheduling, MCS selection and power allocation for an OFDMA
//! downlink where the only channel knowledge at the base station is the
//! ACK/NAK feedback of previously scheduled packets.
//!
//! The crate is organised bottom-up:
//!
//! * [`mcs`]: modulation-and-coding table, packet error model, goodput and
//!   the utility family.
//! * [`channel`]: Gauss-Markov tap processes, subchannel gains and stochastic
//!   ACK/NAK generation.
//! * [`belief`]: per-user particle posterior over channel taps, updated from
//!   delayed feedback.
//! * [`gsra`]: the greedy Lagrangian allocator with its optimality-gap
//!   certificate, and the exhaustive oracle it is checked against.
//! * [`baselines`]: causal / non-causal genie schedulers and fixed-power
//!   random user scheduling.
//! * [`sim`]: the slot loop, paired across schemes, and goodput statistics.
//! * [`config`] and [`preset`]: run configuration and the figure sweeps used
//!   by the `ofdma-sim` binary.

pub mod baselines;
pub mod belief;
pub mod channel;
pub mod config;
pub mod error;
pub mod gsra;
pub mod mcs;
pub mod output;
pub mod preset;
pub mod rng;
pub mod schedule;
pub mod sim;

pub use error::{Error, Result};
