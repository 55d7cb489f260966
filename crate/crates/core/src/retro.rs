//! Closed-form retroactivity constants `A` for the five models, and the
//! CME-backed constants that have no closed form.
//!
//! Bold quantities: `k0 = k0m·Ω/k0p`, `k0p_bold = k0p/Ω`, and per target
//! `k3_j = k3m_j·Ω/k3p_j`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{conditional_silence, extract_a, joint_io_pmf, ChannelError, InputEnsemble};
use crate::crn::{ModelKind, ModelPreset, PresetRates};

/// Binding-to-catalysis ratio below which the separation assumption is flagged.
pub const SEPARATION_WARNING_RATIO: f64 = 1e2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RetroError {
    #[error("assumption violated: {0}")]
    AssumptionViolated(String),
    #[error("Q = {q} is outside 0..={n}")]
    InvalidQ { q: usize, n: usize },
    #[error("expected {expected} dissociation constants, got {got}")]
    TargetCount { expected: usize, got: usize },
    #[error("preset {0} has no second upstream system")]
    NotMimo(&'static str),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSet {
    pub k0p: f64,
    pub k0m: f64,
    pub c1: f64,
    pub c2: f64,
    /// Dissociation constants `k3_j`, already volume-scaled.
    pub k3: Vec<f64>,
    pub volume: f64,
}

impl RateSet {
    pub fn from_preset(preset: &ModelPreset) -> Self {
        Self::from_rates(&preset.rates, preset.volume)
    }

    pub fn from_rates(r: &PresetRates, volume: f64) -> Self {
        RateSet {
            k0p: r.k0p,
            k0m: r.k0m,
            c1: r.c1,
            c2: r.c2,
            k3: r.k3p.iter().zip(&r.k3m).map(|(p, m)| m * volume / p).collect(),
            volume,
        }
    }

    pub fn k0(&self) -> f64 {
        self.k0m * self.volume / self.k0p
    }

    pub fn k0p_bold(&self) -> f64 {
        self.k0p / self.volume
    }

    /// `min(k0p_bold, k0m) / max(c1, c2)`; infinite when both catalytic rates vanish.
    pub fn separation_ratio(&self) -> f64 {
        let c = self.c1.max(self.c2);
        if c == 0.0 {
            f64::INFINITY
        } else {
            self.k0p_bold().min(self.k0m) / c
        }
    }

    /// Human-readable notes on violated asymptotic assumptions.
    pub fn assumption_warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        let r = self.separation_ratio();
        if r < SEPARATION_WARNING_RATIO {
            w.push(format!(
                "binding/catalysis separation {r:.3e} is below {SEPARATION_WARNING_RATIO:e}; closed forms are approximate"
            ));
        }
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AVariant {
    A0,
    A0Exact,
    AN,
    A0Mimo,
    AnMimoNumeric,
    AMac,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ClosedForm,
    Cme,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AConstant {
    pub value: f64,
    pub variant: AVariant,
    pub provenance: Provenance,
}

impl AConstant {
    fn closed(value: f64, variant: AVariant) -> Self {
        AConstant {
            value,
            variant,
            provenance: Provenance::ClosedForm,
        }
    }
}

fn a_with_load(r: &RateSet, inverse_k3_sum: f64) -> f64 {
    let denom = (1.0 + r.k0()) * r.c2 + (1.0 + inverse_k3_sum) * r.c1;
    if denom == 0.0 {
        // c1 = c2 = 0: nothing is ever produced.
        return 1.0;
    }
    1.0 - r.c1 / denom
}

/// `(1+k0)c2 / (c1 + (1+k0)c2)`.
pub fn a0(r: &RateSet) -> AConstant {
    AConstant::closed(a_with_load(r, 0.0), AVariant::A0)
}

/// The isolated-SISO constant before the `c ≪ k` approximation.
pub fn a0_exact(r: &RateSet) -> AConstant {
    let kb = r.k0p_bold();
    let s = r.k0m + kb + r.c1;
    let num = r.c2 * s;
    let den = kb * r.c1 + num;
    let value = if den == 0.0 { 1.0 } else { num / den };
    AConstant::closed(value, AVariant::A0Exact)
}

fn inverse_sum(r: &RateSet, n: usize) -> Result<f64, RetroError> {
    match r.k3.len() {
        len if len == n => Ok(r.k3.iter().map(|k| 1.0 / k).sum()),
        // A single constant stands for N identical targets.
        1 => Ok(n as f64 / r.k3[0]),
        got => Err(RetroError::TargetCount { expected: n, got }),
    }
}

/// `1 − c1 / ((1+k0)c2 + (1 + Σ 1/k3_j) c1)` over `n` targets. A one-element
/// `k3` list is broadcast to all `n` targets.
pub fn a_n(r: &RateSet, n: usize) -> Result<AConstant, RetroError> {
    if n == 0 {
        return Ok(AConstant::closed(a_with_load(r, 0.0), AVariant::AN));
    }
    Ok(AConstant::closed(a_with_load(r, inverse_sum(r, n)?), AVariant::AN))
}

/// Isolated-MIMO constant with both inputs present. Requires `c1 = c2`.
pub fn b_constant(r: &RateSet) -> Result<f64, RetroError> {
    if r.c1 != r.c2 {
        return Err(RetroError::AssumptionViolated(format!(
            "B needs equal catalytic rates, got c1 = {} and c2 = {}",
            r.c1, r.c2
        )));
    }
    let (kb, km, c) = (r.k0p_bold(), r.k0m, r.c1);
    let num = 3.0 * kb * kb + km * km + 4.0 * km * kb + 3.0 * km * c + 6.0 * kb * c;
    let den = 5.0 * kb * kb + km * km + 5.0 * km * kb + 3.0 * km * c + 8.0 * kb * c;
    Ok(num / den)
}

/// `A0·p0₂ + B·(1 − p0₂)`.
pub fn a0_mimo(r: &RateSet, p0_second: f64) -> Result<AConstant, RetroError> {
    if !(0.0..=1.0).contains(&p0_second) {
        return Err(ChannelError::InvalidProbability(p0_second).into());
    }
    let b = b_constant(r)?;
    Ok(AConstant::closed(
        a0(r).value * p0_second + b * (1.0 - p0_second),
        AVariant::A0Mimo,
    ))
}

/// CME-extracted MIMO constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MimoNumeric {
    /// `A` of the mixture joint.
    pub mixture: AConstant,
    /// Conditional `A` with the second input absent; the SISO-with-N value.
    pub an: f64,
    /// Conditional `A` with the second input present.
    pub g: f64,
}

/// Extracts `A`, `AN` and `G` for an isolated or downstream MIMO preset and
/// checks `A = AN·p0₂ + G·(1 − p0₂)` to 1e-10.
pub fn an_mimo_numeric(preset: &ModelPreset, p0_second: f64) -> Result<MimoNumeric, RetroError> {
    if !matches!(
        preset.kind,
        ModelKind::IsolatedMimo | ModelKind::MimoDownstream { .. }
    ) {
        return Err(RetroError::NotMimo(preset.kind.label()));
    }
    let inputs = InputEnsemble::new(0.5)?.with_second(p0_second)?;
    let joint = joint_io_pmf(preset, inputs)?;
    let mixture = extract_a(&joint)?.a;
    let an = conditional_silence(preset, 1, 0)?;
    let g = conditional_silence(preset, 1, 1)?;
    let linear = an * p0_second + g * (1.0 - p0_second);
    if (mixture - linear).abs() > 1e-10 {
        return Err(RetroError::AssumptionViolated(format!(
            "mixture A {mixture} differs from AN·p0₂ + G·p1₂ = {linear}"
        )));
    }
    Ok(MimoNumeric {
        mixture: AConstant {
            value: mixture,
            variant: AVariant::AnMimoNumeric,
            provenance: Provenance::Cme,
        },
        an,
        g,
    })
}

/// MAC constant when the first upstream system binds the first `q` targets.
pub fn a_mac(r: &RateSet, q: usize) -> Result<AConstant, RetroError> {
    let n = r.k3.len();
    if q > n {
        return Err(RetroError::InvalidQ { q, n });
    }
    let s: f64 = r.k3[..q].iter().map(|k| 1.0 / k).sum();
    Ok(AConstant::closed(a_with_load(r, s), AVariant::AMac))
}

/// `A` extracted from the exact CME joint of any preset.
pub fn a_from_cme(preset: &ModelPreset, p0_second: Option<f64>) -> Result<f64, RetroError> {
    let mut inputs = InputEnsemble::new(0.5)?;
    if let Some(q) = p0_second {
        inputs = inputs.with_second(q)?;
    }
    Ok(extract_a(&joint_io_pmf(preset, inputs)?)?.a)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rates(k0p: f64, k0m: f64, c1: f64, c2: f64, k3: Vec<f64>) -> RateSet {
        RateSet {
            k0p,
            k0m,
            c1,
            c2,
            k3,
            volume: 1.0,
        }
    }

    #[test]
    fn a0_examples() {
        assert!((a0(&rates(1.0, 1.0, 2.0, 2.0, vec![])).value - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(a0(&rates(1.0, 1.0, 2.0, 0.0, vec![])).value, 0.0);
        assert!(a0(&rates(1.0, 1.0, 1.0, 1e12, vec![])).value >= 1.0 - 1e-10);
    }

    #[test]
    fn a0_exact_examples() {
        assert!((a0_exact(&rates(1.0, 1.0, 1.0, 1.0, vec![])).value - 0.75).abs() < 1e-15);
        assert_eq!(a0_exact(&rates(1.0, 1.0, 1.0, 0.0, vec![])).value, 0.0);
        let sep = rates(1.0, 1.0, 1e-4, 1e-4, vec![]);
        assert!((a0_exact(&sep).value - a0(&sep).value).abs() < 1e-3);
    }

    #[test]
    fn a_n_examples() {
        let r = rates(1.0, 1.0, 1.0, 1.0, vec![1.0]);
        assert_eq!(a_n(&r, 0).unwrap().value, a0(&r).value);
        assert!((a_n(&r, 1).unwrap().value - 0.75).abs() < 1e-15);
        assert!(a_n(&r, 1_000_000_000).unwrap().value >= 1.0 - 1e-8);
        let two = rates(1.0, 1.0, 1.0, 1.0, vec![1.0, 2.0]);
        assert!(matches!(a_n(&two, 3), Err(RetroError::TargetCount { .. })));
    }

    #[test]
    fn b_examples() {
        let r = rates(1.0, 1.0, 1e-3, 1e-3, vec![]);
        assert!((b_constant(&r).unwrap() - 8.009 / 11.011).abs() < 1e-12);
        let scaled = rates(3.0, 3.0, 3e-3, 3e-3, vec![]);
        assert!((b_constant(&scaled).unwrap() - b_constant(&r).unwrap()).abs() < 1e-15);
        assert!(matches!(
            b_constant(&rates(1.0, 1.0, 1.0, 2.0, vec![])),
            Err(RetroError::AssumptionViolated(_))
        ));
    }

    #[test]
    fn a0_mimo_endpoints_and_order() {
        let r = rates(1.0, 1.0, 1e-4, 1e-4, vec![]);
        let a = a0(&r).value;
        assert_eq!(a0_mimo(&r, 1.0).unwrap().value, a);
        assert_eq!(a0_mimo(&r, 0.0).unwrap().value, b_constant(&r).unwrap());
        for i in 0..=100 {
            assert!(a0_mimo(&r, i as f64 / 100.0).unwrap().value >= a);
        }
    }

    #[test]
    fn a_mac_endpoints() {
        let r = rates(1.0, 1.0, 1.0, 1.0, vec![1.0, 1.0, 1.0, 1.0]);
        assert_eq!(a_mac(&r, 0).unwrap().value, a0(&r).value);
        assert_eq!(a_mac(&r, 4).unwrap().value, a_n(&r, 4).unwrap().value);
        let mid = a_mac(&r, 2).unwrap().value;
        assert!(a0(&r).value < mid && mid < a_n(&r, 4).unwrap().value);
        assert_eq!(a_mac(&r, 5), Err(RetroError::InvalidQ { q: 5, n: 4 }));
    }

    #[test]
    fn bold_constants_scale_with_volume() {
        let mut r = rates(2.0, 3.0, 1.0, 1.0, vec![]);
        r.volume = 4.0;
        assert_eq!(r.k0(), 6.0);
        assert_eq!(r.k0p_bold(), 0.5);
        let p = PresetRates::uniform(1.0, 1.0, 1.0, 1.0, 2.0, 3.0, 2);
        assert_eq!(RateSet::from_rates(&p, 2.0).k3, vec![3.0, 3.0]);
    }

    #[test]
    fn mimo_numeric_rejects_siso() {
        let p = ModelPreset::new(ModelKind::IsolatedSiso, PresetRates::separated(1.0, 1.0, 0));
        assert_eq!(an_mimo_numeric(&p, 0.5), Err(RetroError::NotMimo("isolated-siso")));
    }
}
