//! Microstate enumeration under conservation totals, with canonical indexing.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;

use thiserror::Error;

use crate::crn::ReactionNetwork;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateSpaceError {
    #[error("species `{0}` is constrained by no conservation law; enumeration would not terminate")]
    Unbounded(String),
    #[error("expected {expected} totals, got {got}")]
    TotalsMismatch { expected: usize, got: usize },
    #[error("state {0:?} is not in the state space")]
    UnknownState(Vec<u64>),
}

/// Molecule counts, one entry per species.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Microstate(pub Vec<u64>);

impl Microstate {
    pub fn counts(&self) -> &[u64] {
        &self.0
    }
}

/// Ordered, duplicate-free list of microstates.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    states: Vec<Microstate>,
    index: HashMap<Microstate, usize>,
}

impl StateSpace {
    /// Sorts and deduplicates `states` into canonical order.
    pub fn from_states(mut states: Vec<Microstate>) -> Self {
        states.sort();
        states.dedup();
        let index = states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        StateSpace { states, index }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[Microstate] {
        &self.states
    }

    pub fn get(&self, i: usize) -> &Microstate {
        &self.states[i]
    }

    pub fn index_of(&self, state: &Microstate) -> Option<usize> {
        self.index.get(state).copied()
    }

    pub fn index_of_counts(&self, counts: &[u64]) -> Option<usize> {
        self.index.get(&Microstate(counts.to_vec())).copied()
    }

    pub fn contains(&self, state: &Microstate) -> bool {
        self.index.contains_key(state)
    }

    /// One state per row, columns named after the species.
    pub fn to_csv(&self, network: &ReactionNetwork) -> String {
        let mut out = String::from("index");
        for s in &network.species {
            out.push(',');
            out.push_str(&s.name);
        }
        out.push('\n');
        for (i, st) in self.states.iter().enumerate() {
            let _ = write!(out, "{i}");
            for c in &st.0 {
                let _ = write!(out, ",{c}");
            }
            out.push('\n');
        }
        out
    }
}

/// All nonnegative count vectors satisfying every law `law_k · n = totals[k]`,
/// in lexicographic order.
pub fn enumerate_microstates(
    network: &ReactionNetwork,
    totals: &[u64],
) -> Result<StateSpace, StateSpaceError> {
    let laws = &network.laws;
    if totals.len() != laws.len() {
        return Err(StateSpaceError::TotalsMismatch {
            expected: laws.len(),
            got: totals.len(),
        });
    }
    let n = network.species.len();
    let dense: Vec<Vec<u64>> = laws
        .iter()
        .map(|l| l.dense(n).into_iter().map(|c| c as u64).collect())
        .collect();
    for (i, s) in network.species.iter().enumerate() {
        if !dense.iter().any(|d| d[i] > 0) {
            return Err(StateSpaceError::Unbounded(s.name.clone()));
        }
    }
    // last[k]: the last species index with a positive coefficient in law k.
    let last: Vec<usize> = dense
        .iter()
        .map(|d| d.iter().rposition(|&c| c > 0).unwrap_or(0))
        .collect();

    let mut out = Vec::new();
    let mut counts = vec![0u64; n];
    let mut remaining = totals.to_vec();
    descend(0, &dense, &last, &mut counts, &mut remaining, &mut out);
    Ok(StateSpace::from_states(out))
}

fn descend(
    i: usize,
    dense: &[Vec<u64>],
    last: &[usize],
    counts: &mut Vec<u64>,
    remaining: &mut Vec<u64>,
    out: &mut Vec<Microstate>,
) {
    if i == counts.len() {
        if remaining.iter().all(|&r| r == 0) {
            out.push(Microstate(counts.clone()));
        }
        return;
    }
    let bound = dense
        .iter()
        .zip(remaining.iter())
        .filter(|(d, _)| d[i] > 0)
        .map(|(d, r)| r / d[i])
        .min()
        .unwrap_or(0);
    for v in 0..=bound {
        for (k, d) in dense.iter().enumerate() {
            remaining[k] -= d[i] * v;
        }
        // A law whose last species has been assigned must be exactly met.
        let feasible = dense
            .iter()
            .enumerate()
            .all(|(k, _)| last[k] != i || remaining[k] == 0);
        if feasible {
            counts[i] = v;
            descend(i + 1, dense, last, counts, remaining, out);
        }
        for (k, d) in dense.iter().enumerate() {
            remaining[k] += d[i] * v;
        }
    }
    counts[i] = 0;
}

/// Successor lists: `(target index, reaction index)` for every in-space transition.
pub(crate) fn transitions(space: &StateSpace, network: &ReactionNetwork) -> Vec<Vec<(usize, usize)>> {
    space
        .states()
        .iter()
        .map(|s| {
            (0..network.reactions.len())
                .filter(|&r| network.rate_value(r) > 0.0)
                .filter_map(|r| {
                    let next = network.fire(r, &s.0)?;
                    space.index_of_counts(&next).map(|j| (j, r))
                })
                .collect()
        })
        .collect()
}

/// States reachable from `start` through reactions with positive rate.
///
/// When the reachable set contains a single closed communicating class, that
/// class is what the chain occupies at steady state and is returned; otherwise
/// the whole reachable set is returned so the steady-state solve can report
/// the ambiguity.
pub fn reachable_component(
    space: &StateSpace,
    network: &ReactionNetwork,
    start: &Microstate,
) -> Result<StateSpace, StateSpaceError> {
    let s0 = space
        .index_of(start)
        .ok_or_else(|| StateSpaceError::UnknownState(start.0.clone()))?;
    let succ = transitions(space, network);
    let reached = bfs(&succ, s0);
    let sub: Vec<usize> = (0..space.len()).filter(|&i| reached[i]).collect();
    let classes = closed_classes(&succ, &sub);
    let keep: Vec<usize> = if classes.len() == 1 {
        classes.into_iter().next().unwrap()
    } else {
        sub
    };
    Ok(StateSpace::from_states(
        keep.into_iter().map(|i| space.get(i).clone()).collect(),
    ))
}

fn bfs(succ: &[Vec<(usize, usize)>], start: usize) -> Vec<bool> {
    let mut seen = vec![false; succ.len()];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    while let Some(i) = queue.pop_front() {
        for &(j, _) in &succ[i] {
            if !seen[j] {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    seen
}

/// Closed communicating classes of the subgraph induced by `subset`.
pub(crate) fn closed_classes(succ: &[Vec<(usize, usize)>], subset: &[usize]) -> Vec<Vec<usize>> {
    use petgraph::algo::tarjan_scc;
    use petgraph::graph::DiGraph;

    let local: HashMap<usize, usize> = subset.iter().enumerate().map(|(k, &i)| (i, k)).collect();
    let mut g = DiGraph::<usize, ()>::new();
    let nodes: Vec<_> = subset.iter().map(|&i| g.add_node(i)).collect();
    for &i in subset {
        for &(j, _) in &succ[i] {
            if let Some(&k) = local.get(&j) {
                if i != j {
                    g.add_edge(nodes[local[&i]], nodes[k], ());
                }
            }
        }
    }
    let mut classes = Vec::new();
    for scc in tarjan_scc(&g) {
        let members: Vec<usize> = scc.iter().map(|n| g[*n]).collect();
        let closed = members
            .iter()
            .all(|&i| succ[i].iter().all(|(j, _)| members.contains(j)));
        if closed {
            let mut m = members;
            m.sort_unstable();
            classes.push(m);
        }
    }
    classes.sort();
    classes
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crn::{parse_network, ModelKind, ModelPreset, PresetRates};

    fn siso() -> ReactionNetwork {
        ModelPreset::new(ModelKind::IsolatedSiso, PresetRates::separated(1.0, 1.0, 0))
            .build()
            .unwrap()
    }

    #[test]
    fn isolated_siso_counts() {
        let net = siso();
        // laws: Etot, Itot1
        assert_eq!(enumerate_microstates(&net, &[1, 1]).unwrap().len(), 3);
        assert_eq!(enumerate_microstates(&net, &[1, 0]).unwrap().len(), 1);
    }

    #[test]
    fn all_zero_totals_give_single_zero_state() {
        let net = siso();
        let space = enumerate_microstates(&net, &[0, 0]).unwrap();
        assert_eq!(space.len(), 1);
        assert!(space.get(0).0.iter().all(|&c| c == 0));
    }

    #[test]
    fn unbounded_species_is_an_error() {
        let net = parse_network("species A B C\nrate k = 1\nA -> B @ k\nconserved t: A + B = 2\n").unwrap();
        assert_eq!(
            enumerate_microstates(&net, &[2]),
            Err(StateSpaceError::Unbounded("C".into()))
        );
    }

    #[test]
    fn siso_chain_is_irreducible() {
        let net = siso();
        let space = enumerate_microstates(&net, &[1, 1]).unwrap();
        let start = Microstate(net.initial_counts().unwrap());
        let comp = reachable_component(&space, &net, &start).unwrap();
        assert_eq!(comp.len(), 3);
    }

    #[test]
    fn single_state_component_is_itself() {
        let net = siso();
        let space = enumerate_microstates(&net, &[1, 0]).unwrap();
        let comp = reachable_component(&space, &net, space.get(0)).unwrap();
        assert_eq!(comp, space);
    }

    #[test]
    fn disabled_reaction_excludes_states() {
        // With c2 = 0 the free output is absorbing.
        let net = siso().with_rate("c2", 0.0).unwrap();
        let space = enumerate_microstates(&net, &[1, 1]).unwrap();
        let start = Microstate(net.initial_counts().unwrap());
        let comp = reachable_component(&space, &net, &start).unwrap();
        assert_eq!(comp.len(), 1);
        let z1 = net.species_index("Z1").unwrap();
        assert_eq!(comp.get(0).0[z1], 1);
    }

    #[test]
    fn unreachable_from_start_excluded() {
        // B <-> C never reaches A.
        let net = parse_network(
            "species A B=1 C\nrate k = 1\nA -> B @ k\nB <-> C @ k, k\nconserved t: A + B + C = 1\n",
        )
        .unwrap();
        let space = enumerate_microstates(&net, &[1]).unwrap();
        assert_eq!(space.len(), 3);
        let comp = reachable_component(&space, &net, &Microstate(vec![0, 1, 0])).unwrap();
        assert_eq!(comp.len(), 2);
        assert!(!comp.contains(&Microstate(vec![1, 0, 0])));
    }

    #[test]
    fn csv_dump_has_header_and_rows() {
        let net = siso();
        let space = enumerate_microstates(&net, &[1, 1]).unwrap();
        let csv = space.to_csv(&net);
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.starts_with("index,M1,I1,Z1,E\n"));
    }
}
