//! Reaction-rate equations and the linear noise approximation at steady state.
//!
//! Single upstream systems use the one-step cyclic reduction
//! `I1 -> Z1` (flux `c1·E·I1`), `Z1 -> I1` (flux `c2·Z1`); systems whose two
//! upstream replicas share one enzyme keep the two-step scheme. Concentrations
//! throughout; downstream dissociation constants are `k3m/k3p`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{awgn_capacity, ChannelError};
use crate::crn::{ModelKind, PresetRates};
use crate::linalg::{max_abs, solve_dense};

pub const NEWTON_MAX_ITERATIONS: usize = 200;
pub const MAX_STEP_HALVINGS: usize = 60;
pub const RESIDUAL_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LnaError {
    #[error("Newton iteration did not converge (residual {0:e})")]
    NoConvergence(f64),
    #[error("Jacobian is not Hurwitz (max real eigenvalue part {0:e})")]
    NotHurwitz(f64),
    #[error("Lyapunov system is singular")]
    SingularSolve,
    #[error("invalid LNA parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// Concentration-level parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LnaParams {
    pub rates: PresetRates,
    pub itot1: f64,
    pub itot2: f64,
    pub etot: f64,
    pub etot2: f64,
    pub dtot: Vec<f64>,
    pub volume: f64,
    pub noise_variance: f64,
}

impl LnaParams {
    /// Unit rates, `Itot = Dtot = 100`, `Etot = 1`, `Ω = 1`, unit noise.
    pub fn defaults(kind: ModelKind) -> Self {
        let n = kind.targets();
        LnaParams {
            rates: PresetRates::separated(1.0, 1.0, n),
            itot1: 100.0,
            itot2: 100.0,
            etot: 1.0,
            etot2: 1.0,
            dtot: vec![100.0; n],
            volume: 1.0,
            noise_variance: 1.0,
        }
    }

    fn validate(&self, kind: ModelKind) -> Result<(), LnaError> {
        let n = kind.targets();
        if self.rates.k3p.len() != n || self.rates.k3m.len() != n || self.dtot.len() != n {
            return Err(LnaError::InvalidParams(format!(
                "expected {n} downstream rate pairs and totals"
            )));
        }
        if let ModelKind::MacTwoSiso { n, q } = kind {
            if q > n {
                return Err(LnaError::InvalidParams(format!("Q = {q} exceeds N = {n}")));
            }
        }
        let r = &self.rates;
        let values = [r.k0p, r.k0m, r.c1, r.c2, self.itot1, self.itot2, self.etot, self.etot2]
            .into_iter()
            .chain(r.k3p.iter().copied())
            .chain(r.k3m.iter().copied())
            .chain(self.dtot.iter().copied());
        for v in values {
            if !(v.is_finite() && v >= 0.0) {
                return Err(LnaError::InvalidParams(format!("{v} is not a nonnegative number")));
            }
        }
        if r.k3p.contains(&0.0) {
            return Err(LnaError::InvalidParams("k3p must be positive".into()));
        }
        if !(self.volume.is_finite() && self.volume > 0.0) {
            return Err(LnaError::InvalidParams(format!("volume {}", self.volume)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Flux {
    k: f64,
    reactants: Vec<usize>,
    change: Vec<(usize, f64)>,
}

/// Mass-action rate equations on the independent species left after
/// eliminating one species per conservation law.
#[derive(Debug, Clone, PartialEq)]
pub struct RateEquationSystem {
    pub model: ModelKind,
    pub species: Vec<String>,
    /// Full-species index of each independent variable.
    pub state: Vec<usize>,
    /// Conservation laws as (name, coefficients over all species, total).
    pub laws: Vec<(String, Vec<f64>, f64)>,
    pub volume: f64,
    offset: Vec<f64>,
    map: DMatrix<f64>,
    fluxes: Vec<Flux>,
}

struct SystemBuilder {
    species: Vec<String>,
    eliminated: Vec<Option<usize>>,
    laws: Vec<(String, Vec<usize>, usize, f64)>,
    fluxes: Vec<Flux>,
}

impl SystemBuilder {
    fn new() -> Self {
        SystemBuilder {
            species: Vec::new(),
            eliminated: Vec::new(),
            laws: Vec::new(),
            fluxes: Vec::new(),
        }
    }

    fn species(&mut self, name: &str) -> usize {
        self.species.push(name.to_string());
        self.eliminated.push(None);
        self.species.len() - 1
    }

    /// `members` sum to `total`; the first member is eliminated.
    fn law(&mut self, name: &str, members: &[usize], total: f64) {
        self.eliminated[members[0]] = Some(self.laws.len());
        self.laws.push((name.to_string(), members.to_vec(), members[0], total));
    }

    fn flux(&mut self, k: f64, reactants: &[usize], lost: &[usize], gained: &[usize]) {
        let mut change: Vec<(usize, f64)> = lost.iter().map(|&s| (s, -1.0)).collect();
        change.extend(gained.iter().map(|&s| (s, 1.0)));
        self.fluxes.push(Flux {
            k,
            reactants: reactants.to_vec(),
            change,
        });
    }

    fn build(self, model: ModelKind, volume: f64) -> RateEquationSystem {
        let n = self.species.len();
        let state: Vec<usize> = (0..n).filter(|&s| self.eliminated[s].is_none()).collect();
        let mut offset = vec![0.0; n];
        let mut map = DMatrix::zeros(n, state.len());
        for (k, &s) in state.iter().enumerate() {
            map[(s, k)] = 1.0;
        }
        for (_, members, elim, total) in &self.laws {
            offset[*elim] = *total;
            for &m in members.iter().filter(|&&m| m != *elim) {
                let k = state.iter().position(|&s| s == m).expect("law members are free");
                map[(*elim, k)] -= 1.0;
            }
        }
        let laws = self
            .laws
            .into_iter()
            .map(|(name, members, _, total)| {
                let mut c = vec![0.0; n];
                for m in members {
                    c[m] = 1.0;
                }
                (name, c, total)
            })
            .collect();
        RateEquationSystem {
            model,
            species: self.species,
            state,
            laws,
            volume,
            offset,
            map,
            fluxes: self.fluxes,
        }
    }
}

impl RateEquationSystem {
    pub fn new(model: ModelKind, p: &LnaParams) -> Result<Self, LnaError> {
        p.validate(model)?;
        let r = &p.rates;
        let n = model.targets();
        let k3 = |j: usize| (r.k3p[j], r.k3m[j]);
        let mut b = SystemBuilder::new();
        match model {
            ModelKind::IsolatedSiso | ModelKind::SisoDownstream { .. } | ModelKind::MacTwoSiso { .. } => {
                let mac = matches!(model, ModelKind::MacTwoSiso { .. });
                let q = match model {
                    ModelKind::MacTwoSiso { q, .. } => q,
                    _ => n,
                };
                let i1 = b.species("I1");
                let z1 = b.species("Z1");
                let (i2, z2) = if mac {
                    (b.species("I2"), b.species("Z2"))
                } else {
                    (usize::MAX, usize::MAX)
                };
                let c: Vec<usize> = (1..=n).map(|j| b.species(&format!("C{j}"))).collect();
                let d: Vec<usize> = (1..=n).map(|j| b.species(&format!("D{j}"))).collect();
                b.flux(r.c1 * p.etot, &[i1], &[i1], &[z1]);
                b.flux(r.c2, &[z1], &[z1], &[i1]);
                if mac {
                    b.flux(r.c1 * p.etot2, &[i2], &[i2], &[z2]);
                    b.flux(r.c2, &[z2], &[z2], &[i2]);
                }
                for j in 0..n {
                    let z = if j < q { z1 } else { z2 };
                    let (kp, km) = k3(j);
                    b.flux(kp, &[z, d[j]], &[z, d[j]], &[c[j]]);
                    b.flux(km, &[c[j]], &[c[j]], &[z, d[j]]);
                }
                let mut m1 = vec![i1, z1];
                m1.extend(&c[..q]);
                b.law("Itot1", &m1, p.itot1);
                if mac {
                    let mut m2 = vec![i2, z2];
                    m2.extend(&c[q..]);
                    b.law("Itot2", &m2, p.itot2);
                }
                for j in 0..n {
                    b.law(&format!("Dtot{}", j + 1), &[d[j], c[j]], p.dtot[j]);
                }
            }
            ModelKind::IsolatedMimo | ModelKind::MimoDownstream { .. } => {
                let z1 = b.species("Z1");
                let m1 = b.species("M1");
                let z2 = b.species("Z2");
                let m2 = b.species("M2");
                let i1 = b.species("I1");
                let i2 = b.species("I2");
                let e = b.species("E");
                let c: Vec<usize> = (1..=n).map(|j| b.species(&format!("C{j}"))).collect();
                let d: Vec<usize> = (1..=n).map(|j| b.species(&format!("D{j}"))).collect();
                for (i, m, z) in [(i1, m1, z1), (i2, m2, z2)] {
                    b.flux(r.k0p, &[i, e], &[i, e], &[m]);
                    b.flux(r.k0m, &[m], &[m], &[i, e]);
                    b.flux(r.c1, &[m], &[m], &[e, z]);
                    b.flux(r.c2, &[z], &[z], &[i]);
                }
                for j in 0..n {
                    let (kp, km) = k3(j);
                    b.flux(kp, &[z1, d[j]], &[z1, d[j]], &[c[j]]);
                    b.flux(km, &[c[j]], &[c[j]], &[z1, d[j]]);
                }
                let mut l1 = vec![i1, m1, z1];
                l1.extend(&c);
                b.law("Itot1", &l1, p.itot1);
                b.law("Itot2", &[i2, m2, z2], p.itot2);
                b.law("Etot", &[e, m1, m2], p.etot);
                for j in 0..n {
                    b.law(&format!("Dtot{}", j + 1), &[d[j], c[j]], p.dtot[j]);
                }
            }
        }
        Ok(b.build(model, p.volume))
    }

    pub fn dimension(&self) -> usize {
        self.state.len()
    }

    pub fn state_names(&self) -> Vec<String> {
        self.state.iter().map(|&s| self.species[s].clone()).collect()
    }

    /// Position of `name` among the independent variables.
    pub fn position(&self, name: &str) -> Option<usize> {
        self.state.iter().position(|&s| self.species[s] == name)
    }

    /// All species concentrations implied by the independent variables.
    pub fn full_state(&self, x: &[f64]) -> Vec<f64> {
        let xv = DVector::from_column_slice(x);
        let y = &self.map * xv;
        y.iter().zip(&self.offset).map(|(a, b)| a + b).collect()
    }

    fn flux_values(&self, full: &[f64]) -> Vec<f64> {
        self.fluxes
            .iter()
            .map(|f| f.k * f.reactants.iter().map(|&s| full[s]).product::<f64>())
            .collect()
    }

    /// Net change of every species, ignoring conservation.
    pub fn full_rhs(&self, x: &[f64]) -> Vec<f64> {
        let full = self.full_state(x);
        let mut out = vec![0.0; self.species.len()];
        for (f, v) in self.fluxes.iter().zip(self.flux_values(&full)) {
            for &(s, nu) in &f.change {
                out[s] += nu * v;
            }
        }
        out
    }

    pub fn rhs(&self, x: &[f64]) -> Vec<f64> {
        let full = self.full_rhs(x);
        self.state.iter().map(|&s| full[s]).collect()
    }

    fn reduced_change(&self, f: &Flux) -> DVector<f64> {
        let mut v = DVector::zeros(self.dimension());
        for &(s, nu) in &f.change {
            if let Some(k) = self.state.iter().position(|&t| t == s) {
                v[k] += nu;
            }
        }
        v
    }

    /// Analytic Jacobian of [`Self::rhs`].
    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let full = self.full_state(x);
        let n = self.dimension();
        let mut j = DMatrix::zeros(n, n);
        for f in &self.fluxes {
            let mut grad = DVector::<f64>::zeros(n);
            for (a, &s) in f.reactants.iter().enumerate() {
                let others: f64 = f
                    .reactants
                    .iter()
                    .enumerate()
                    .filter(|(b, _)| *b != a)
                    .map(|(_, &t)| full[t])
                    .product();
                grad += self.map.row(s).transpose() * (f.k * others);
            }
            j += self.reduced_change(f) * grad.transpose();
        }
        j
    }

    /// `Σ_r ν_r ν_rᵀ · flux_r` on the independent variables.
    pub fn diffusion(&self, x: &[f64]) -> DMatrix<f64> {
        let full = self.full_state(x);
        let n = self.dimension();
        let mut d = DMatrix::zeros(n, n);
        for (f, v) in self.fluxes.iter().zip(self.flux_values(&full)) {
            let nu = self.reduced_change(f);
            d += &nu * nu.transpose() * v;
        }
        d
    }

    /// Every conserved total split evenly among the species of its law.
    pub fn initial_guess(&self) -> Vec<f64> {
        self.state
            .iter()
            .map(|&s| {
                self.laws
                    .iter()
                    .filter(|(_, c, _)| c[s] > 0.0)
                    .map(|(_, c, t)| t / c.iter().filter(|&&v| v > 0.0).count() as f64)
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    fn feasible(&self, x: &[f64]) -> bool {
        self.full_state(x).iter().all(|&v| v >= -1e-12)
    }

    fn flux_scale(&self, x: &[f64]) -> f64 {
        max_abs(&self.flux_values(&self.full_state(x))).max(1.0)
    }
}

/// Central finite-difference Jacobian with relative step `h`.
pub fn finite_difference_jacobian(sys: &RateEquationSystem, x: &[f64], h: f64) -> DMatrix<f64> {
    let n = x.len();
    let mut j = DMatrix::zeros(n, n);
    for k in 0..n {
        let step = h * x[k].abs().max(1.0);
        let mut up = x.to_vec();
        let mut dn = x.to_vec();
        up[k] += step;
        dn[k] -= step;
        let (fu, fd) = (sys.rhs(&up), sys.rhs(&dn));
        for i in 0..n {
            j[(i, k)] = (fu[i] - fd[i]) / (2.0 * step);
        }
    }
    j
}

/// Nonnegative root of the rate equations by damped Newton from
/// [`RateEquationSystem::initial_guess`]; one-dimensional systems fall back to bisection.
pub fn rre_steady_state(sys: &RateEquationSystem) -> Result<Vec<f64>, LnaError> {
    let mut x = sys.initial_guess();
    let mut res = max_abs(&sys.rhs(&x));
    for _ in 0..NEWTON_MAX_ITERATIONS {
        if res <= RESIDUAL_TOLERANCE * sys.flux_scale(&x) {
            return Ok(x);
        }
        let f = DVector::from_vec(sys.rhs(&x));
        let Some(dx) = solve_dense(sys.jacobian(&x), -f) else {
            break;
        };
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..=MAX_STEP_HALVINGS {
            let trial: Vec<f64> = x.iter().zip(dx.iter()).map(|(a, d)| a + t * d).collect();
            if sys.feasible(&trial) {
                let r = max_abs(&sys.rhs(&trial));
                if r < res || r <= RESIDUAL_TOLERANCE * sys.flux_scale(&trial) {
                    x = trial;
                    res = r;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if res <= RESIDUAL_TOLERANCE * sys.flux_scale(&x) {
        return Ok(x);
    }
    if sys.dimension() == 1 {
        return bisect_scalar(sys);
    }
    Err(LnaError::NoConvergence(res))
}

fn bisect_scalar(sys: &RateEquationSystem) -> Result<Vec<f64>, LnaError> {
    let s = sys.state[0];
    let hi_bound = sys
        .laws
        .iter()
        .filter(|(_, c, _)| c[s] > 0.0)
        .map(|(_, _, t)| *t)
        .fold(f64::INFINITY, f64::min);
    let f = |v: f64| sys.rhs(&[v])[0];
    let (mut lo, mut hi) = (0.0, hi_bound);
    if f(lo) * f(hi) > 0.0 {
        return Err(LnaError::NoConvergence(f(lo).abs().min(f(hi).abs())));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(lo) * f(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(vec![0.5 * (lo + hi)])
}

/// Steady-state complex concentration `z1·Dtot/(k3 + z1)`.
pub fn downstream_occupancy(z1: f64, k3: f64, dtot: f64) -> f64 {
    if z1 == 0.0 {
        0.0
    } else {
        z1 * dtot / (k3 + z1)
    }
}

/// `μ0 = c1·E·Itot / (c2 + c1·E)`.
pub fn mu0(c1: f64, e: f64, itot: f64, c2: f64) -> f64 {
    c1 * e * itot / (c2 + c1 * e)
}

/// `σ0² = c1·E·Itot·c2 / (Ω (c1·E + c2)²)`.
pub fn sigma0_sq(c1: f64, e: f64, itot: f64, c2: f64, volume: f64) -> f64 {
    c1 * e * itot * c2 / (volume * (c1 * e + c2).powi(2))
}

/// Solves `J Σ + Σ Jᵀ + D/Ω = 0` through its Kronecker-vectorized form.
pub fn lyapunov_covariance(
    jacobian: &DMatrix<f64>,
    diffusion: &DMatrix<f64>,
    volume: f64,
) -> Result<DMatrix<f64>, LnaError> {
    let n = jacobian.nrows();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let max_re = jacobian
        .clone()
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    if max_re >= 0.0 {
        return Err(LnaError::NotHurwitz(max_re));
    }
    let eye = DMatrix::<f64>::identity(n, n);
    let a = eye.kronecker(jacobian) + jacobian.kronecker(&eye);
    let rhs = -DVector::from_column_slice((diffusion / volume).as_slice());
    let v = solve_dense(a, rhs).ok_or(LnaError::SingularSolve)?;
    let s = DMatrix::from_column_slice(n, n, v.as_slice());
    Ok((&s + s.transpose()) * 0.5)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LnaResult {
    pub system: RateEquationSystem,
    /// Independent-variable means.
    pub mean: Vec<f64>,
    pub covariance: DMatrix<f64>,
    pub z1_variance: f64,
    pub capacity: f64,
}

impl LnaResult {
    pub fn z1_mean(&self) -> f64 {
        self.mean[self.system.position("Z1").expect("every model tracks Z1")]
    }
}

pub fn lna_analyze(model: ModelKind, params: &LnaParams) -> Result<LnaResult, LnaError> {
    let system = RateEquationSystem::new(model, params)?;
    let mean = rre_steady_state(&system)?;
    let j = system.jacobian(&mean);
    let d = system.diffusion(&mean);
    let covariance = lyapunov_covariance(&j, &d, params.volume)?;
    let z = system.position("Z1").expect("every model tracks Z1");
    let z1_variance = covariance[(z, z)];
    let capacity = awgn_capacity(z1_variance.max(0.0), params.noise_variance)?;
    Ok(LnaResult {
        system,
        mean,
        covariance,
        z1_variance,
        capacity,
    })
}

/// Closed-form reference for the one-step upstream system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormCheck {
    pub mu0: f64,
    pub mu_numeric: f64,
    pub mu_rel_diff: f64,
    pub sigma0_sq: f64,
    /// Present only for the isolated system, where the closed form applies.
    pub sigma_numeric: Option<f64>,
    pub sigma_rel_diff: Option<f64>,
    pub mean_equal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LnaReport {
    pub model: ModelKind,
    pub params: LnaParams,
    pub species: Vec<String>,
    pub means: Vec<f64>,
    /// Row-major.
    pub covariance: Vec<f64>,
    pub z1_variance: f64,
    pub capacity_nats: f64,
    pub signal_species: String,
    pub closed_form: Option<ClosedFormCheck>,
}

/// Relative tolerance of the closed-form comparison.
pub const CLOSED_FORM_TOLERANCE: f64 = 1e-10;

fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

impl LnaReport {
    pub fn new(model: ModelKind, params: &LnaParams, result: &LnaResult) -> Self {
        let n = result.covariance.nrows();
        let covariance = (0..n)
            .flat_map(|i| (0..n).map(move |k| (i, k)))
            .map(|(i, k)| result.covariance[(i, k)])
            .collect();
        let one_step = matches!(
            model,
            ModelKind::IsolatedSiso | ModelKind::SisoDownstream { .. } | ModelKind::MacTwoSiso { .. }
        );
        let closed_form = one_step.then(|| {
            let r = &params.rates;
            let mu = mu0(r.c1, params.etot, params.itot1, r.c2);
            let s0 = sigma0_sq(r.c1, params.etot, params.itot1, r.c2, params.volume);
            let mu_numeric = result.z1_mean();
            let isolated = model == ModelKind::IsolatedSiso;
            let mu_rel_diff = rel_diff(mu, mu_numeric);
            ClosedFormCheck {
                mu0: mu,
                mu_numeric,
                mu_rel_diff,
                sigma0_sq: s0,
                sigma_numeric: isolated.then_some(result.z1_variance),
                sigma_rel_diff: isolated.then(|| rel_diff(s0, result.z1_variance)),
                mean_equal: mu_rel_diff <= CLOSED_FORM_TOLERANCE,
            }
        });
        LnaReport {
            model,
            params: params.clone(),
            species: result.system.state_names(),
            means: result.mean.clone(),
            covariance,
            z1_variance: result.z1_variance,
            capacity_nats: result.capacity,
            signal_species: "Z1".into(),
            closed_form,
        }
    }
}
