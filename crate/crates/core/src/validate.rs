//! Three-way comparison of closed-form, exact-CME and simulated `A` values
//! across the five models.
//!
//! Closed forms only hold when binding is much faster than catalysis, so they
//! are compared against the CME at a separated rate set. The simulator is
//! compared against the CME at the unit rate set, where runs are cheap.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{conditional_silence, ChannelError};
use crate::cme::{stationary_from_initial, CmeError};
use crate::crn::{CrnError, ModelKind, ModelPreset, PresetRates};
use crate::retro::{a0, a0_mimo, a_mac, a_n, an_mimo_numeric, RateSet, RetroError};
use crate::ssa::{empirical_steady_pmf, total_variation, SsaConfig, SsaError};
use crate::state_space::Microstate;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ValidateError {
    #[error(transparent)]
    Retro(#[from] RetroError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Cme(#[from] CmeError),
    #[error(transparent)]
    Ssa(#[from] SsaError),
    #[error(transparent)]
    Network(#[from] CrnError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidateConfig {
    pub seed: u64,
    pub ssa_samples: u64,
    pub burn_in: f64,
    pub sample_interval: f64,
    pub tv_threshold: f64,
    /// Binding-to-catalysis ratio of the rate set used for closed forms.
    pub separation: f64,
    /// Closed-form tolerance is `closed_form_factor · c/k`.
    pub closed_form_factor: f64,
    pub p0_second: f64,
    pub targets: usize,
    /// Targets bound by the first upstream system in the MAC model.
    pub mac_q: usize,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        ValidateConfig {
            seed: 42,
            ssa_samples: 100_000,
            burn_in: 100.0,
            sample_interval: 1.0,
            tv_threshold: 0.02,
            separation: 1e4,
            closed_form_factor: 10.0,
            p0_second: 0.5,
            targets: 2,
            mac_q: 1,
        }
    }
}

impl ValidateConfig {
    pub fn models(&self) -> Vec<ModelKind> {
        let n = self.targets;
        vec![
            ModelKind::IsolatedSiso,
            ModelKind::SisoDownstream { n },
            ModelKind::IsolatedMimo,
            ModelKind::MimoDownstream { n },
            ModelKind::MacTwoSiso { n, q: self.mac_q },
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationRow {
    pub model: ModelKind,
    /// Closed form at the separated rates.
    pub a_closed: f64,
    /// Exact CME at the separated rates.
    pub a_exact_separated: f64,
    pub closed_abs_diff: f64,
    pub closed_tolerance: f64,
    /// False where no equality is claimed.
    pub closed_asserted: bool,
    pub assumption_ratio: f64,
    /// Exact CME at the unit rates.
    pub a_exact: f64,
    pub a_ssa: f64,
    /// Largest TV distance over the conditional solves behind `a_ssa`.
    pub tv_distance: f64,
    pub tv_threshold: f64,
    pub ssa_samples: u64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub config: ValidateConfig,
    pub rows: Vec<ValidationRow>,
    pub all_pass: bool,
}

fn preset(kind: ModelKind, k: f64, c: f64) -> ModelPreset {
    ModelPreset::new(kind, PresetRates::separated(k, c, kind.targets()))
}

/// `(P(Z1 = 0) exact, P(Z1 = 0) simulated, TV)` for one input combination.
fn conditional_pair(
    p: &ModelPreset,
    i2: u64,
    ssa: &SsaConfig,
) -> Result<(f64, f64, f64), ValidateError> {
    let mut q = p.clone();
    q.totals.itot1 = 1;
    q.totals.itot2 = i2;
    let net = q.build()?;
    let init = net.initial_counts().expect("preset amounts are integers");
    let (space, exact) = stationary_from_initial(&net, &init)?;
    let sim = empirical_steady_pmf(&net, &space, &Microstate(init), ssa)?;
    let z1 = net.species_index("Z1").expect("every preset has Z1");
    let silent = |probs: &[f64]| -> f64 {
        space
            .states()
            .iter()
            .zip(probs)
            .filter(|(s, _)| s.counts()[z1] == 0)
            .map(|(_, v)| v)
            .sum()
    };
    Ok((
        silent(&exact.probabilities),
        silent(&sim.probabilities),
        total_variation(&exact.probabilities, &sim.probabilities),
    ))
}

fn closed_and_exact(kind: ModelKind, cfg: &ValidateConfig) -> Result<(f64, f64), ValidateError> {
    let c = 1.0 / cfg.separation;
    let p = preset(kind, 1.0, c);
    let r = RateSet::from_preset(&p);
    let q0 = cfg.p0_second;
    Ok(match kind {
        ModelKind::IsolatedSiso => (a0(&r).value, conditional_silence(&p, 1, 0)?),
        ModelKind::SisoDownstream { n } => (a_n(&r, n)?.value, conditional_silence(&p, 1, 0)?),
        ModelKind::IsolatedMimo => (a0_mimo(&r, q0)?.value, an_mimo_numeric(&p, q0)?.mixture.value),
        ModelKind::MimoDownstream { n } => {
            let m = an_mimo_numeric(&p, q0)?;
            (a_n(&r, n)?.value * q0 + m.g * (1.0 - q0), m.mixture.value)
        }
        ModelKind::MacTwoSiso { q, .. } => {
            let exact = conditional_silence(&p, 1, p.totals.itot2)?;
            (a_mac(&r, q)?.value, exact)
        }
    })
}

pub fn validate_model(kind: ModelKind, cfg: &ValidateConfig) -> Result<ValidationRow, ValidateError> {
    let (a_closed, a_exact_separated) = closed_and_exact(kind, cfg)?;
    let closed_tolerance = cfg.closed_form_factor / cfg.separation;
    let closed_abs_diff = (a_closed - a_exact_separated).abs();
    let closed_asserted = !matches!(kind, ModelKind::MacTwoSiso { .. });

    let unit = preset(kind, 1.0, 1.0);
    let ssa = SsaConfig::with_samples(cfg.seed, cfg.ssa_samples, cfg.burn_in, cfg.sample_interval);
    let mimo = matches!(kind, ModelKind::IsolatedMimo | ModelKind::MimoDownstream { .. });
    let (a_exact, a_ssa, tv_distance) = if mimo {
        let (e0, s0, t0) = conditional_pair(&unit, 0, &ssa)?;
        let (e1, s1, t1) = conditional_pair(&unit, 1, &ssa)?;
        let q0 = cfg.p0_second;
        (q0 * e0 + (1.0 - q0) * e1, q0 * s0 + (1.0 - q0) * s1, t0.max(t1))
    } else {
        conditional_pair(&unit, unit.totals.itot2, &ssa)?
    };
    let pass = tv_distance <= cfg.tv_threshold && (!closed_asserted || closed_abs_diff <= closed_tolerance);
    Ok(ValidationRow {
        model: kind,
        a_closed,
        a_exact_separated,
        closed_abs_diff,
        closed_tolerance,
        closed_asserted,
        assumption_ratio: RateSet::from_preset(&preset(kind, 1.0, 1.0 / cfg.separation)).separation_ratio(),
        a_exact,
        a_ssa,
        tv_distance,
        tv_threshold: cfg.tv_threshold,
        ssa_samples: cfg.ssa_samples,
        pass,
    })
}

/// One row per model, computed in parallel and returned in model order.
pub fn validation_report(cfg: &ValidateConfig) -> Result<ValidationReport, ValidateError> {
    let rows: Vec<ValidationRow> = cfg
        .models()
        .into_par_iter()
        .map(|k| validate_model(k, cfg))
        .collect::<Result<_, _>>()?;
    let all_pass = rows.iter().all(|r| r.pass);
    Ok(ValidationReport {
        config: cfg.clone(),
        rows,
        all_pass,
    })
}
