//! Gillespie direct-method simulation, used as an independent check on CME
//! steady states. Trajectories are reproducible from a `u64` seed through
//! `ChaCha8Rng`.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cme::propensity;
use crate::crn::ReactionNetwork;
use crate::state_space::{enumerate_microstates, Microstate, StateSpace, StateSpaceError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SsaError {
    #[error("invalid SSA configuration: {0}")]
    InvalidConfig(String),
    #[error("initial state {0:?} violates the conservation laws")]
    InvalidInitial(Vec<u64>),
    #[error("trajectory left the state space at {0:?}")]
    LeftStateSpace(Vec<u64>),
    #[error(transparent)]
    StateSpace(#[from] StateSpaceError),
}

/// Simulation window `[0, t_end]`; occupancy is averaged over `[burn_in, t_end]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsaConfig {
    pub seed: u64,
    pub t_end: f64,
    pub burn_in: f64,
    pub sample_interval: f64,
}

impl SsaConfig {
    /// Window holding `n_samples` sampling intervals after the burn-in.
    pub fn with_samples(seed: u64, n_samples: u64, burn_in: f64, sample_interval: f64) -> Self {
        SsaConfig {
            seed,
            t_end: burn_in + n_samples as f64 * sample_interval,
            burn_in,
            sample_interval,
        }
    }

    /// Number of sampling intervals in the averaging window.
    pub fn samples(&self) -> u64 {
        ((self.t_end - self.burn_in) / self.sample_interval).round() as u64
    }

    pub fn validate(&self) -> Result<(), SsaError> {
        let ok = self.t_end.is_finite()
            && self.t_end > 0.0
            && self.burn_in >= 0.0
            && self.burn_in < self.t_end
            && self.sample_interval > 0.0;
        if ok {
            Ok(())
        } else {
            Err(SsaError::InvalidConfig(format!("{self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `(time, state)`, starting with `(0, initial)`.
    pub events: Vec<(f64, Microstate)>,
}

impl Trajectory {
    /// `time,<species...>` rows.
    pub fn to_csv(&self, network: &ReactionNetwork) -> String {
        let mut out = String::from("time");
        for s in &network.species {
            out.push(',');
            out.push_str(&s.name);
        }
        out.push('\n');
        for (t, st) in &self.events {
            let _ = write!(out, "{t}");
            for c in st.counts() {
                let _ = write!(out, ",{c}");
            }
            out.push('\n');
        }
        out
    }
}

fn check_initial(network: &ReactionNetwork, initial: &[u64]) -> Result<(), SsaError> {
    if initial.len() != network.species.len() {
        return Err(SsaError::InvalidInitial(initial.to_vec()));
    }
    let declared = network.declared_totals();
    if let Some(d) = declared {
        if network.totals_of(initial) != d {
            return Err(SsaError::InvalidInitial(initial.to_vec()));
        }
    }
    Ok(())
}

/// Runs the direct method, calling `visit(t_start, t_stop, state)` for every
/// holding interval inside `[0, t_end]`.
fn simulate(
    network: &ReactionNetwork,
    initial: &[u64],
    config: &SsaConfig,
    mut visit: impl FnMut(f64, f64, &[u64]),
) {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let m = network.reactions.len();
    let mut state = initial.to_vec();
    let mut t = 0.0;
    let mut a = vec![0.0; m];
    loop {
        for (r, slot) in a.iter_mut().enumerate() {
            *slot = propensity(network, r, &state);
        }
        let total: f64 = a.iter().sum();
        if total <= 0.0 {
            visit(t, config.t_end, &state);
            return;
        }
        let u1: f64 = 1.0 - rng.random::<f64>();
        let tau = -u1.ln() / total;
        if t + tau >= config.t_end {
            visit(t, config.t_end, &state);
            return;
        }
        visit(t, t + tau, &state);
        t += tau;
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut chosen = m - 1;
        for (r, &v) in a.iter().enumerate() {
            acc += v;
            if target < acc {
                chosen = r;
                break;
            }
        }
        // Guard against round-off selecting a disabled channel.
        while a[chosen] <= 0.0 {
            chosen -= 1;
        }
        state = network
            .fire(chosen, &state)
            .expect("positive propensity implies reactants are present");
    }
}

/// Exact-sampling trajectory over `[0, config.t_end]`. Stops early, without
/// error, in an absorbing state.
pub fn gillespie_run(
    network: &ReactionNetwork,
    initial: &Microstate,
    config: &SsaConfig,
) -> Result<Trajectory, SsaError> {
    config.validate()?;
    check_initial(network, initial.counts())?;
    let mut events = vec![(0.0, initial.clone())];
    simulate(network, initial.counts(), config, |start, _, state| {
        if start > 0.0 {
            events.push((start, Microstate(state.to_vec())));
        }
    });
    Ok(Trajectory { events })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalPmf {
    pub probabilities: Vec<f64>,
    pub samples: u64,
}

impl EmpiricalPmf {
    /// Mirrors the CME pmf export.
    pub fn to_csv(&self, space: &StateSpace, network: &ReactionNetwork) -> String {
        crate::cme::SteadyStatePmf {
            probabilities: self.probabilities.clone(),
            residual: 0.0,
        }
        .to_csv(space, network)
    }
}

/// Time-weighted occupancy over `[burn_in, t_end]` on `space`.
pub fn empirical_steady_pmf(
    network: &ReactionNetwork,
    space: &StateSpace,
    initial: &Microstate,
    config: &SsaConfig,
) -> Result<EmpiricalPmf, SsaError> {
    config.validate()?;
    check_initial(network, initial.counts())?;
    let mut occupancy = vec![0.0; space.len()];
    let mut outside = None;
    simulate(network, initial.counts(), config, |start, stop, state| {
        let lo = start.max(config.burn_in);
        if stop <= lo {
            return;
        }
        match space.index_of_counts(state) {
            Some(i) => occupancy[i] += stop - lo,
            None => outside = Some(state.to_vec()),
        }
    });
    if let Some(s) = outside {
        return Err(SsaError::LeftStateSpace(s));
    }
    let total: f64 = occupancy.iter().sum();
    Ok(EmpiricalPmf {
        probabilities: occupancy.into_iter().map(|v| v / total).collect(),
        samples: config.samples(),
    })
}

/// Enumerates the space of `initial`'s totals and estimates the pmf on it.
pub fn empirical_from_initial(
    network: &ReactionNetwork,
    initial: &Microstate,
    config: &SsaConfig,
) -> Result<(StateSpace, EmpiricalPmf), SsaError> {
    let totals = network.totals_of(initial.counts());
    let space = enumerate_microstates(network, &totals)?;
    let pmf = empirical_steady_pmf(network, &space, initial, config)?;
    Ok((space, pmf))
}

/// Independent replicas with seeds `seed, seed+1, …`, in parallel; results in replica order.
pub fn replicas(
    network: &ReactionNetwork,
    space: &StateSpace,
    initial: &Microstate,
    config: &SsaConfig,
    count: usize,
) -> Result<Vec<EmpiricalPmf>, SsaError> {
    (0..count as u64)
        .into_par_iter()
        .map(|k| {
            let c = SsaConfig {
                seed: config.seed.wrapping_add(k),
                ..*config
            };
            empirical_steady_pmf(network, space, initial, &c)
        })
        .collect()
}

/// `½ Σ |p − q|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}
