//! Binary input/output joint pmfs and information measures, all in nats.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cme::{stationary_from_initial, CmeError};
use crate::crn::{CrnError, ModelPreset};

/// Largest mass tolerated in the (I = 0, Z = 1) cell of a Z-channel joint.
pub const Z_CHANNEL_TOLERANCE: f64 = 1e-10;
/// Final bracket width of the capacity search.
pub const GOLDEN_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error("P(I=0, Z=1) = {0:e} exceeds the Z-channel tolerance")]
    NotZChannel(f64),
    #[error("row I=1 carries no probability mass")]
    ZeroMassRow,
    #[error("p puts mass where q has none")]
    SupportMismatch,
    #[error("noise variance must be positive, got {0}")]
    NonpositiveNoise(f64),
    #[error("signal variance must be nonnegative, got {0}")]
    NegativeSignal(f64),
    #[error(transparent)]
    Cme(#[from] CmeError),
    #[error(transparent)]
    Network(#[from] CrnError),
}

fn check_probability(p: f64) -> Result<f64, ChannelError> {
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(ChannelError::InvalidProbability(p))
    }
}

/// Priors of the binary input symbols.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputEnsemble {
    pub p0: f64,
    /// `P(I2(t0) = 0)` for models with a second upstream system.
    pub p0_second: Option<f64>,
}

impl InputEnsemble {
    pub fn new(p0: f64) -> Result<Self, ChannelError> {
        Ok(InputEnsemble {
            p0: check_probability(p0)?,
            p0_second: None,
        })
    }

    pub fn with_second(self, p0_second: f64) -> Result<Self, ChannelError> {
        Ok(InputEnsemble {
            p0_second: Some(check_probability(p0_second)?),
            ..self
        })
    }

    pub fn p1(&self) -> f64 {
        1.0 - self.p0
    }
}

/// Rows `I1(t0) ∈ {0, 1}`, columns `Z1(ts) ∈ {0, 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointIoPmf(pub [[f64; 2]; 2]);

impl JointIoPmf {
    /// The Z-channel joint `[[p0, 0], [A p1, (1 − A) p1]]`.
    pub fn from_z_channel(a: f64, p0: f64) -> Self {
        let p1 = 1.0 - p0;
        JointIoPmf([[p0, 0.0], [a * p1, (1.0 - a) * p1]])
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.0.iter().map(|r| r.to_vec()).collect()
    }

    pub fn input_marginal(&self) -> [f64; 2] {
        [self.0[0][0] + self.0[0][1], self.0[1][0] + self.0[1][1]]
    }

    pub fn output_marginal(&self) -> [f64; 2] {
        [self.0[0][0] + self.0[1][0], self.0[0][1] + self.0[1][1]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZChannelParam {
    pub a: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityBounds {
    pub lower: f64,
    pub upper: f64,
    pub z_capacity: f64,
}

/// `P(Z1(ts) = 0 | I1(t0) = i1, I2(t0) = i2)` from the exact CME steady state.
/// `i2` is ignored by models without a second input.
pub fn conditional_silence(preset: &ModelPreset, i1: u64, i2: u64) -> Result<f64, ChannelError> {
    let mut p = preset.clone();
    p.totals.itot1 = i1;
    p.totals.itot2 = i2;
    let net = p.build()?;
    let init = net
        .initial_counts()
        .expect("preset initial amounts are integers");
    let (space, pmf) = stationary_from_initial(&net, &init)?;
    let z1 = net.species_index("Z1").expect("every preset has Z1");
    Ok(pmf.mass_where(&space, |c| c[z1] == 0))
}

/// Joint pmf of `(I1(t0), Z1(ts))`.
///
/// For models with a second input, the conditional solves over `I2(t0)` are
/// mixed with weights `(p0₂, p1₂)`; when `p0_second` is absent the second input
/// is held at the preset's `itot2`.
pub fn joint_io_pmf(preset: &ModelPreset, inputs: InputEnsemble) -> Result<JointIoPmf, ChannelError> {
    let silent_given_one = if preset.kind.has_second_input() {
        match inputs.p0_second {
            Some(q0) => {
                let s0 = conditional_silence(preset, 1, 0)?;
                let s1 = conditional_silence(preset, 1, 1)?;
                q0 * s0 + (1.0 - q0) * s1
            }
            None => conditional_silence(preset, 1, preset.totals.itot2)?,
        }
    } else {
        conditional_silence(preset, 1, 0)?
    };
    let silent_given_zero = conditional_silence(preset, 0, preset.totals.itot2)?;
    let (p0, p1) = (inputs.p0, inputs.p1());
    Ok(JointIoPmf([
        [p0 * silent_given_zero, p0 * (1.0 - silent_given_zero)],
        [p1 * silent_given_one, p1 * (1.0 - silent_given_one)],
    ]))
}

/// `A = P(I=1, Z=0) / P(I=1)`.
pub fn extract_a(joint: &JointIoPmf) -> Result<ZChannelParam, ChannelError> {
    let leak = joint.0[0][1];
    if leak > Z_CHANNEL_TOLERANCE {
        return Err(ChannelError::NotZChannel(leak));
    }
    let row = joint.0[1][0] + joint.0[1][1];
    if row <= 0.0 {
        return Err(ChannelError::ZeroMassRow);
    }
    Ok(ZChannelParam {
        a: joint.0[1][0] / row,
    })
}

fn xlnx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

pub fn entropy(pmf: &[f64]) -> f64 {
    -pmf.iter().map(|&p| xlnx(p)).sum::<f64>()
}

/// `H(X | Y)` for a joint with rows indexed by X and columns by Y.
pub fn conditional_entropy(joint: &[Vec<f64>]) -> f64 {
    let cols = joint.first().map_or(0, Vec::len);
    (0..cols)
        .map(|y| {
            let py: f64 = joint.iter().map(|r| r[y]).sum();
            if py <= 0.0 {
                return 0.0;
            }
            let cond: Vec<f64> = joint.iter().map(|r| r[y] / py).collect();
            py * entropy(&cond)
        })
        .sum()
}

fn row_marginal(joint: &[Vec<f64>]) -> Vec<f64> {
    joint.iter().map(|r| r.iter().sum()).collect()
}

/// `H(X) − H(X | Y)`, clamped at zero against round-off.
pub fn mutual_information(joint: &[Vec<f64>]) -> f64 {
    (entropy(&row_marginal(joint)) - conditional_entropy(joint)).max(0.0)
}

/// Two-log-term expression for the MI of a Z-channel with crossover `A` and prior `p0`.
pub fn mi_closed_form(a: f64, p0: f64) -> f64 {
    let p1 = 1.0 - p0;
    let silent = p0 + a * p1;
    let h_input = -(xlnx(p0) + xlnx(p1));
    let h_cond = if silent > 0.0 {
        -(p0 * ln_ratio(p0, silent) + a * p1 * ln_ratio(a * p1, silent))
    } else {
        0.0
    };
    (h_input - h_cond).max(0.0)
}

fn ln_ratio(x: f64, y: f64) -> f64 {
    if x > 0.0 {
        (x / y).ln()
    } else {
        0.0
    }
}

/// `D(p ‖ q)` in nats.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64, ChannelError> {
    let mut d = 0.0;
    for (&x, &y) in p.iter().zip(q) {
        if x > 0.0 {
            if y <= 0.0 {
                return Err(ChannelError::SupportMismatch);
            }
            d += x * (x / y).ln();
        }
    }
    Ok(d.max(0.0))
}

pub fn capacity_lower_bound(a: f64, p0: f64) -> f64 {
    mi_closed_form(a, p0)
}

/// `max_x D(P(Z|x) ‖ P(Z))` with `P(Z)` the output marginal induced by `p0`.
/// Infinite when `P(Z)` misses an outcome some input can produce.
pub fn capacity_upper_bound(a: f64, p0: f64) -> f64 {
    let p1 = 1.0 - p0;
    let pz = [p0 + a * p1, (1.0 - a) * p1];
    [[1.0, 0.0], [a, 1.0 - a]]
        .iter()
        .map(|row| kl_divergence(row, &pz).unwrap_or(f64::INFINITY))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `ln(1 + (1 − A) A^{A/(1−A)})`.
pub fn z_channel_capacity(a: f64) -> f64 {
    if a <= 0.0 {
        return std::f64::consts::LN_2;
    }
    if a >= 1.0 {
        return 0.0;
    }
    (1.0 + (1.0 - a) * a.powf(a / (1.0 - a))).ln()
}

pub fn capacity_bounds(a: f64, p0: f64) -> CapacityBounds {
    CapacityBounds {
        lower: capacity_lower_bound(a, p0),
        upper: capacity_upper_bound(a, p0),
        z_capacity: z_channel_capacity(a),
    }
}

/// Maximizes the MI over `p0`: 101-point grid, then golden-section search in
/// the bracket around the best grid point. Returns `(C, p0*)`.
pub fn capacity_via_optimization(a: f64) -> (f64, f64) {
    if a >= 1.0 {
        return (0.0, 0.5);
    }
    let f = |p: f64| mi_closed_form(a, p);
    let best = (0..=100)
        .map(|i| i as f64 / 100.0)
        .fold((f64::NEG_INFINITY, 0.0), |acc, p| {
            let v = f(p);
            if v > acc.0 {
                (v, p)
            } else {
                acc
            }
        })
        .1;
    let (mut lo, mut hi) = ((best - 0.01).max(0.0), (best + 0.01).min(1.0));
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > GOLDEN_TOLERANCE {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        }
    }
    let p = 0.5 * (lo + hi);
    (f(p), p)
}

/// `½ ln(1 + σ_Y² / σ_noise²)`.
pub fn awgn_capacity(signal_variance: f64, noise_variance: f64) -> Result<f64, ChannelError> {
    if noise_variance.is_nan() || noise_variance <= 0.0 {
        return Err(ChannelError::NonpositiveNoise(noise_variance));
    }
    if signal_variance < 0.0 {
        return Err(ChannelError::NegativeSignal(signal_variance));
    }
    Ok(0.5 * (signal_variance / noise_variance).ln_1p())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub a: f64,
    pub p0: f64,
    pub bounds: CapacityBounds,
}

/// Per-`A` summary over the `p0` grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepReduction {
    pub a: f64,
    pub max_lower: f64,
    pub min_upper: f64,
    pub z_capacity: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub reductions: Vec<SweepReduction>,
}

/// Evenly spaced grid of `n` points on `[0, 1]`.
pub fn unit_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    }
}

/// Bounds at every `(A, p0)` pair, rows ordered by `A` then `p0`.
pub fn sweep_bounds(a_grid: &[f64], p0_grid: &[f64]) -> Result<SweepTable, ChannelError> {
    for &x in a_grid.iter().chain(p0_grid) {
        check_probability(x)?;
    }
    if p0_grid.is_empty() {
        return Ok(SweepTable::default());
    }
    let per_a: Vec<(Vec<SweepRow>, SweepReduction)> = a_grid
        .par_iter()
        .map(|&a| {
            let rows: Vec<SweepRow> = p0_grid
                .iter()
                .map(|&p0| SweepRow {
                    a,
                    p0,
                    bounds: capacity_bounds(a, p0),
                })
                .collect();
            let red = SweepReduction {
                a,
                max_lower: rows.iter().map(|r| r.bounds.lower).fold(f64::NEG_INFINITY, f64::max),
                min_upper: rows.iter().map(|r| r.bounds.upper).fold(f64::INFINITY, f64::min),
                z_capacity: z_channel_capacity(a),
            };
            (rows, red)
        })
        .collect();
    let mut table = SweepTable::default();
    for (rows, red) in per_a {
        table.rows.extend(rows);
        table.reductions.push(red);
    }
    Ok(table)
}

impl SweepTable {
    pub fn surface_csv(&self) -> String {
        let mut out = String::from("A,p01,lower_nats,upper_nats,zcap_nats\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.a, r.p0, r.bounds.lower, r.bounds.upper, r.bounds.z_capacity
            );
        }
        out
    }

    pub fn reduction_csv(&self) -> String {
        let mut out = String::from("A,max_lower,min_upper,zcap_nats\n");
        for r in &self.reductions {
            let _ = writeln!(out, "{},{},{},{}", r.a, r.max_lower, r.min_upper, r.z_capacity);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crn::{ModelKind, PresetRates};
    use std::f64::consts::LN_2;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn unit_rate_siso_joint() {
        let preset = ModelPreset::new(ModelKind::IsolatedSiso, PresetRates::separated(1.0, 1.0, 0));
        let j = joint_io_pmf(&preset, InputEnsemble::new(0.5).unwrap()).unwrap();
        let want = [[0.5, 0.0], [0.375, 0.125]];
        for (r, w) in j.0.iter().zip(want) {
            for (x, y) in r.iter().zip(w) {
                assert!(close(*x, y, 1e-14));
            }
        }
        assert!(close(extract_a(&j).unwrap().a, 0.75, 1e-14));
    }

    #[test]
    fn degenerate_prior_and_perfect_channel() {
        let preset = ModelPreset::new(ModelKind::IsolatedSiso, PresetRates::separated(1.0, 1.0, 0));
        let j = joint_io_pmf(&preset, InputEnsemble::new(1.0).unwrap()).unwrap();
        assert_eq!(j.0, [[1.0, 0.0], [0.0, 0.0]]);
        let mut perfect = preset.clone();
        perfect.rates.c2 = 0.0;
        let j = joint_io_pmf(&perfect, InputEnsemble::new(0.3).unwrap()).unwrap();
        assert!(close(j.0[1][0], 0.0, 1e-15) && close(j.0[1][1], 0.7, 1e-15));
    }

    #[test]
    fn extract_a_edge_cases() {
        assert_eq!(extract_a(&JointIoPmf([[0.4, 0.0], [0.0, 0.6]])).unwrap().a, 0.0);
        assert_eq!(extract_a(&JointIoPmf([[0.4, 0.0], [0.6, 0.0]])).unwrap().a, 1.0);
        assert_eq!(
            extract_a(&JointIoPmf([[1.0, 0.0], [0.0, 0.0]])),
            Err(ChannelError::ZeroMassRow)
        );
        assert!(matches!(
            extract_a(&JointIoPmf([[0.4, 0.1], [0.0, 0.5]])),
            Err(ChannelError::NotZChannel(_))
        ));
    }

    #[test]
    fn entropy_examples() {
        assert!(close(entropy(&[0.5, 0.5]), LN_2, 1e-15));
        assert_eq!(entropy(&[1.0, 0.0]), 0.0);
        let j = vec![vec![0.5, 0.0], vec![0.25, 0.25]];
        assert!(close(conditional_entropy(&j), 0.477386, 1e-6));
    }

    #[test]
    fn mutual_information_examples() {
        let j = JointIoPmf::from_z_channel(0.5, 0.5).rows();
        assert!(close(mutual_information(&j), 0.215762, 1e-6));
        assert!(close(mi_closed_form(0.5, 0.5), 0.215762, 1e-6));
        let product = vec![vec![0.12, 0.28], vec![0.18, 0.42]];
        assert!(mutual_information(&product) < 1e-15);
        let perfect = JointIoPmf::from_z_channel(0.0, 0.3).rows();
        assert!(close(mutual_information(&perfect), entropy(&[0.3, 0.7]), 1e-15));
        assert_eq!(mi_closed_form(1.0, 0.37), 0.0);
        assert!(close(mi_closed_form(0.0, 0.5), LN_2, 1e-15));
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl_divergence(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        assert!(close(kl_divergence(&[1.0, 0.0], &[0.5, 0.5]).unwrap(), LN_2, 1e-15));
        assert_eq!(kl_divergence(&[0.5, 0.5], &[1.0, 0.0]), Err(ChannelError::SupportMismatch));
    }

    #[test]
    fn capacity_examples() {
        assert!(close(z_channel_capacity(0.0), LN_2, 1e-15));
        assert_eq!(z_channel_capacity(1.0), 0.0);
        assert!(close(z_channel_capacity(0.5), 1.25f64.ln(), 1e-15));
        let (c, p) = capacity_via_optimization(0.0);
        assert!(close(c, LN_2, 1e-12) && close(p, 0.5, 1e-6));
        assert_eq!(capacity_via_optimization(1.0), (0.0, 0.5));
        let (c, _) = capacity_via_optimization(0.5);
        assert!(close(c, 1.25f64.ln(), 1e-6));
        assert!(close(capacity_upper_bound(0.0, 0.5), LN_2, 1e-15));
        assert!(capacity_upper_bound(0.5, 0.9) >= 1.25f64.ln());
    }

    #[test]
    fn upper_bound_meets_capacity_at_optimum() {
        for a in [0.1, 0.5, 0.9] {
            let (c, p) = capacity_via_optimization(a);
            assert!(close(capacity_upper_bound(a, p), z_channel_capacity(a), 1e-6));
            assert!(close(c, z_channel_capacity(a), 1e-6));
        }
    }

    #[test]
    fn awgn_examples() {
        assert_eq!(awgn_capacity(0.0, 1.0).unwrap(), 0.0);
        assert!(close(awgn_capacity(1.0, 1.0).unwrap(), 0.5 * LN_2, 1e-15));
        assert!(close(awgn_capacity(25.0, 1.0).unwrap(), 0.5 * 26f64.ln(), 1e-15));
        assert_eq!(awgn_capacity(1.0, 0.0), Err(ChannelError::NonpositiveNoise(0.0)));
    }

    #[test]
    fn sweep_shapes() {
        let t = sweep_bounds(&[0.0, 0.5, 1.0], &[0.5]).unwrap();
        assert_eq!(t.rows.len(), 3);
        assert_eq!(t.reductions.len(), 3);
        assert!(close(t.rows[1].bounds.lower, 0.215762, 1e-6));
        assert!(sweep_bounds(&[], &[]).unwrap().rows.is_empty());
        assert!(sweep_bounds(&[1.5], &[0.5]).is_err());
        let csv = t.surface_csv();
        assert!(csv.starts_with("A,p01,lower_nats,upper_nats,zcap_nats\n"));
        assert_eq!(csv.lines().count(), 4);
    }
}
