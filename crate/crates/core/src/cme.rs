//! Chemical master equation over an enumerated state space.
//!
//! Propensities follow mass action in counts: `k·n_X` for unimolecular steps,
//! `(k/Ω)·n_X·n_Y` for bimolecular steps between distinct species, and `k·Ω`
//! for zero-order inflow.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::crn::{CrnError, ReactionNetwork};
use crate::linalg::max_abs;
use crate::state_space::{
    closed_classes, enumerate_microstates, reachable_component, Microstate, StateSpace,
    StateSpaceError,
};

/// Success threshold on the max-norm residual, relative to the largest exit rate.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;
/// Negative round-off below this magnitude is clamped to zero.
pub const CLAMP_TOLERANCE: f64 = 1e-14;
/// Iterative-refinement passes applied after the LU solve.
pub const REFINEMENT_STEPS: usize = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CmeError {
    #[error("reaction {reaction} maps state {state:?} outside the state space")]
    TransitionLeavesSpace { state: Vec<u64>, reaction: usize },
    #[error("component holds {0} closed communicating classes; the stationary pmf is not unique")]
    NotIrreducible(usize),
    #[error("steady-state solve failed: {0}")]
    SolverFailure(String),
    #[error(transparent)]
    StateSpace(#[from] StateSpaceError),
    #[error(transparent)]
    Network(#[from] CrnError),
}

/// Mass-action propensity of `reaction` in a state with the given counts.
pub fn propensity(network: &ReactionNetwork, reaction: usize, counts: &[u64]) -> f64 {
    let r = &network.reactions[reaction];
    let k = network.rate_value(reaction);
    let omega = network.volume;
    match r.reactant_molecules() {
        0 => k * omega,
        1 => k * counts[r.reactants[0].species] as f64,
        2 => {
            let a = counts[r.reactants[0].species] as f64;
            let b = counts[r.reactants[1].species] as f64;
            (k / omega) * a * b
        }
        _ => unreachable!("networks are validated to at most two reactant molecules"),
    }
}

/// Sparse CTMC generator: off-diagonal `(from, to, rate)` entries plus the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix {
    dimension: usize,
    entries: Vec<(usize, usize, f64)>,
    diagonal: Vec<f64>,
}

impl GeneratorMatrix {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    /// Largest total exit rate.
    pub fn max_exit_rate(&self) -> f64 {
        self.diagonal.iter().fold(0.0f64, |m, d| m.max(-d))
    }

    /// Row convention: `q[i][j]` is the rate from state i to state j.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut q = DMatrix::zeros(self.dimension, self.dimension);
        for &(i, j, r) in &self.entries {
            q[(i, j)] += r;
        }
        for (i, d) in self.diagonal.iter().enumerate() {
            q[(i, i)] = *d;
        }
        q
    }

    /// The matrix `M` of `dP/dt = M·P` (the transpose of [`Self::to_dense`]).
    pub fn master_equation_matrix(&self) -> DMatrix<f64> {
        self.to_dense().transpose()
    }

    /// `dP/dt` evaluated at `p`.
    pub fn probability_flow(&self, p: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = self.diagonal.iter().zip(p).map(|(d, x)| d * x).collect();
        for &(i, j, r) in &self.entries {
            out[j] += r * p[i];
        }
        out
    }
}

/// Builds the generator over `space`. Reactions with zero propensity contribute nothing.
pub fn build_generator(
    space: &StateSpace,
    network: &ReactionNetwork,
) -> Result<GeneratorMatrix, CmeError> {
    let n = space.len();
    let mut entries = Vec::new();
    let mut diagonal = vec![0.0; n];
    for (i, state) in space.states().iter().enumerate() {
        for r in 0..network.reactions.len() {
            let a = propensity(network, r, state.counts());
            if a <= 0.0 {
                continue;
            }
            let next = network
                .fire(r, state.counts())
                .expect("positive propensity implies reactants are present");
            let j = space
                .index_of_counts(&next)
                .ok_or_else(|| CmeError::TransitionLeavesSpace {
                    state: state.counts().to_vec(),
                    reaction: r,
                })?;
            if j == i {
                continue;
            }
            entries.push((i, j, a));
            diagonal[i] -= a;
        }
    }
    Ok(GeneratorMatrix {
        dimension: n,
        entries,
        diagonal,
    })
}

/// Stationary distribution over a [`StateSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStatePmf {
    pub probabilities: Vec<f64>,
    /// Max-norm of `M·p`.
    pub residual: f64,
}

impl SteadyStatePmf {
    /// Probability of the event `pred(counts)`.
    pub fn mass_where(&self, space: &StateSpace, pred: impl Fn(&[u64]) -> bool) -> f64 {
        space
            .states()
            .iter()
            .zip(&self.probabilities)
            .filter(|(s, _)| pred(s.counts()))
            .map(|(_, p)| p)
            .sum()
    }

    /// `index,<species...>,probability` rows.
    pub fn to_csv(&self, space: &StateSpace, network: &ReactionNetwork) -> String {
        let mut out = String::from("index");
        for s in &network.species {
            out.push(',');
            out.push_str(&s.name);
        }
        out.push_str(",probability\n");
        for (i, (st, p)) in space.states().iter().zip(&self.probabilities).enumerate() {
            let _ = write!(out, "{i}");
            for c in st.counts() {
                let _ = write!(out, ",{c}");
            }
            let _ = writeln!(out, ",{p}");
        }
        out
    }
}

/// Stationary pmf of the chain restricted to `component`; states outside the
/// component's closed class get probability zero.
pub fn steady_state(
    generator: &GeneratorMatrix,
    space: &StateSpace,
    component: &StateSpace,
) -> Result<SteadyStatePmf, CmeError> {
    let n = generator.dimension();
    let members: Vec<usize> = component
        .states()
        .iter()
        .map(|s| {
            space
                .index_of(s)
                .ok_or_else(|| CmeError::StateSpace(StateSpaceError::UnknownState(s.counts().to_vec())))
        })
        .collect::<Result<_, _>>()?;
    let mut succ: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for &(i, j, _) in generator.entries() {
        succ[i].push((j, 0));
    }
    let classes = closed_classes(&succ, &members);
    if classes.len() != 1 {
        return Err(CmeError::NotIrreducible(classes.len()));
    }
    let class = &classes[0];
    let m = class.len();
    let mut probabilities = vec![0.0; n];

    if m == 1 {
        probabilities[class[0]] = 1.0;
    } else {
        // Uniformize for conditioning: the stationary vector of Q/λ equals that of Q.
        let scale = generator.max_exit_rate();
        let local: std::collections::HashMap<usize, usize> =
            class.iter().enumerate().map(|(k, &i)| (i, k)).collect();
        let mut a = DMatrix::<f64>::zeros(m, m);
        for &(i, j, r) in generator.entries() {
            if let (Some(&li), Some(&lj)) = (local.get(&i), local.get(&j)) {
                a[(lj, li)] += r / scale;
            }
        }
        for (k, &i) in class.iter().enumerate() {
            a[(k, k)] = generator.diagonal()[i] / scale;
        }
        for c in 0..m {
            a[(m - 1, c)] = 1.0;
        }
        let mut b = DVector::zeros(m);
        b[m - 1] = 1.0;
        let lu = a.clone().lu();
        let mut x = lu
            .solve(&b)
            .ok_or_else(|| CmeError::SolverFailure("singular normalized generator".into()))?;
        for _ in 0..REFINEMENT_STEPS {
            let r = &b - &a * &x;
            match lu.solve(&r) {
                Some(dx) => x += dx,
                None => break,
            }
        }
        for (k, &i) in class.iter().enumerate() {
            let v = x[k];
            if v < -CLAMP_TOLERANCE {
                return Err(CmeError::SolverFailure(format!(
                    "negative probability {v:e} at state {i}"
                )));
            }
            probabilities[i] = v.max(0.0);
        }
        let total: f64 = probabilities.iter().sum();
        probabilities.iter_mut().for_each(|p| *p /= total);
    }

    let residual = max_abs(&generator.probability_flow(&probabilities));
    if residual > RESIDUAL_TOLERANCE * generator.max_exit_rate().max(1.0) {
        return Err(CmeError::SolverFailure(format!("residual {residual:e}")));
    }
    Ok(SteadyStatePmf {
        probabilities,
        residual,
    })
}

/// Enumerates the space implied by `initial`, finds the component reached from
/// it and returns the stationary pmf over that space.
pub fn stationary_from_initial(
    network: &ReactionNetwork,
    initial: &[u64],
) -> Result<(StateSpace, SteadyStatePmf), CmeError> {
    let totals = network.totals_of(initial);
    let space = enumerate_microstates(network, &totals)?;
    let generator = build_generator(&space, network)?;
    let component = reachable_component(&space, network, &Microstate(initial.to_vec()))?;
    let pmf = steady_state(&generator, &space, &component)?;
    Ok((space, pmf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crn::{ModelKind, ModelPreset, PresetRates};

    fn siso(k0p: f64, k0m: f64, c1: f64, c2: f64) -> ReactionNetwork {
        ModelPreset::new(
            ModelKind::IsolatedSiso,
            PresetRates::uniform(k0p, k0m, c1, c2, 0.0, 0.0, 0),
        )
        .build()
        .unwrap()
    }

    #[test]
    fn binding_and_unbinding_propensities() {
        let net = siso(2.0, 3.0, 1.0, 1.0);
        // Species order M1, I1, Z1, E; reactions: bind, unbind, c1, c2.
        let q2 = [0, 1, 0, 1];
        let q3 = [1, 0, 0, 0];
        assert_eq!(propensity(&net, 0, &q2), 2.0);
        assert_eq!(propensity(&net, 1, &q3), 3.0);
        assert_eq!(propensity(&net, 0, &q3), 0.0);
        let mut big = net.clone();
        big.volume = 4.0;
        assert_eq!(propensity(&big, 0, &q2), 0.5);
    }

    #[test]
    fn appendix_generator() {
        let (k0p, k0m, c1, c2) = (2.0, 3.0, 5.0, 7.0);
        let net = siso(k0p, k0m, c1, c2);
        let space = enumerate_microstates(&net, &[1, 1]).unwrap();
        let m = build_generator(&space, &net).unwrap().master_equation_matrix();
        let expected = DMatrix::from_row_slice(
            3,
            3,
            &[-c2, 0.0, c1, c2, -k0p, k0m, 0.0, k0p, -k0m - c1],
        );
        assert_eq!(m, expected);
    }

    #[test]
    fn single_state_generator_is_zero() {
        let net = siso(1.0, 1.0, 1.0, 1.0);
        let space = enumerate_microstates(&net, &[1, 0]).unwrap();
        let g = build_generator(&space, &net).unwrap();
        assert_eq!(g.to_dense(), DMatrix::zeros(1, 1));
        let pmf = steady_state(&g, &space, &space).unwrap();
        assert_eq!(pmf.probabilities, vec![1.0]);
    }

    #[test]
    fn unit_rates_quarter_half_quarter() {
        let net = siso(1.0, 1.0, 1.0, 1.0);
        let (_, pmf) = stationary_from_initial(&net, &net.initial_counts().unwrap()).unwrap();
        for (p, e) in pmf.probabilities.iter().zip([0.25, 0.5, 0.25]) {
            assert!((p - e).abs() < 1e-14);
        }
    }

    #[test]
    fn leaving_the_space_is_reported() {
        let net = siso(1.0, 1.0, 1.0, 1.0);
        // Only the two states with I1 + Z1 = 1 and E = 1, missing M1.
        let partial = StateSpace::from_states(vec![
            Microstate(vec![0, 0, 1, 1]),
            Microstate(vec![0, 1, 0, 1]),
        ]);
        assert!(matches!(
            build_generator(&partial, &net),
            Err(CmeError::TransitionLeavesSpace { .. })
        ));
    }

    #[test]
    fn two_closed_classes_rejected() {
        let net = siso(1.0, 1.0, 1.0, 0.0);
        // I1+E <-> M1 with c1 = 0 as well: {q2,q3} and {q1} are both closed.
        let net = net.with_rate("c1", 0.0).unwrap();
        let space = enumerate_microstates(&net, &[1, 1]).unwrap();
        let g = build_generator(&space, &net).unwrap();
        assert_eq!(
            steady_state(&g, &space, &space),
            Err(CmeError::NotIrreducible(2))
        );
    }

    #[test]
    fn absorbing_output_when_not_cyclic() {
        let net = siso(1.0, 1.0, 1.0, 0.0);
        let (space, pmf) = stationary_from_initial(&net, &net.initial_counts().unwrap()).unwrap();
        let z1 = net.species_index("Z1").unwrap();
        assert_eq!(pmf.mass_where(&space, |c| c[z1] == 1), 1.0);
    }

    #[test]
    fn probability_is_conserved_by_construction() {
        let net = siso(1.3, 0.7, 2.0, 0.4);
        let space = enumerate_microstates(&net, &[1, 1]).unwrap();
        let q = build_generator(&space, &net).unwrap().to_dense();
        for i in 0..q.nrows() {
            assert!(q.row(i).sum().abs() < 1e-14);
        }
    }
}
