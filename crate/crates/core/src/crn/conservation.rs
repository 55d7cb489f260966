//! Conservation laws as semipositive left-null vectors of the stoichiometry matrix.

use super::{ConservationLaw, ReactionNetwork, Term};
use crate::linalg::{exact_rank, primitive};

/// Species × reactions net-change matrix.
pub fn stoichiometry_matrix(network: &ReactionNetwork) -> Vec<Vec<i64>> {
    let n = network.species.len();
    let mut m = vec![vec![0i64; network.reactions.len()]; n];
    for (j, r) in network.reactions.iter().enumerate() {
        for (i, d) in r.net_change(n).into_iter().enumerate() {
            m[i][j] = d;
        }
    }
    m
}

/// `#species − rank(S)`.
pub fn left_null_dimension(network: &ReactionNetwork) -> usize {
    let s = stoichiometry_matrix(network);
    network.species.len() - exact_rank(&s)
}

fn support(y: &[i64]) -> Vec<usize> {
    y.iter()
        .enumerate()
        .filter(|(_, v)| **v != 0)
        .map(|(i, _)| i)
        .collect()
}

fn is_subset(a: &[usize], b: &[usize]) -> bool {
    a.iter().all(|x| b.binary_search(x).is_ok())
}

/// Minimal semipositive left-null vectors (P-semiflows), by Farkas elimination.
fn minimal_semiflows(s: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let n = s.len();
    let m = s.first().map_or(0, Vec::len);
    // Each row: (residual stoichiometry, species combination).
    let mut rows: Vec<(Vec<i64>, Vec<i64>)> = (0..n)
        .map(|i| {
            let mut y = vec![0; n];
            y[i] = 1;
            (s[i].clone(), y)
        })
        .collect();
    for col in 0..m {
        let (zero, nonzero): (Vec<_>, Vec<_>) = rows.into_iter().partition(|(c, _)| c[col] == 0);
        let mut next = zero;
        let pos: Vec<_> = nonzero.iter().filter(|(c, _)| c[col] > 0).collect();
        let neg: Vec<_> = nonzero.iter().filter(|(c, _)| c[col] < 0).collect();
        for (cp, yp) in &pos {
            for (cq, yq) in &neg {
                let (a, b) = (-cq[col], cp[col]);
                let mut c: Vec<i64> = cp.iter().zip(cq).map(|(x, y)| a * x + b * y).collect();
                let mut y: Vec<i64> = yp.iter().zip(yq).map(|(x, z)| a * x + b * z).collect();
                let mut joined = c.clone();
                joined.extend_from_slice(&y);
                primitive(&mut joined);
                c.copy_from_slice(&joined[..m]);
                y.copy_from_slice(&joined[m..]);
                next.push((c, y));
            }
        }
        // Keep only rows with minimal support.
        let supports: Vec<Vec<usize>> = next.iter().map(|(_, y)| support(y)).collect();
        let mut keep = vec![true; next.len()];
        for i in 0..next.len() {
            for j in 0..next.len() {
                if i == j || !keep[j] {
                    continue;
                }
                let strict = supports[j].len() < supports[i].len();
                let dup = supports[j] == supports[i] && j < i;
                if (strict || dup) && is_subset(&supports[j], &supports[i]) {
                    keep[i] = false;
                    break;
                }
            }
        }
        rows = next
            .into_iter()
            .zip(keep)
            .filter_map(|(r, k)| k.then_some(r))
            .collect();
    }
    rows.into_iter().map(|(_, y)| y).collect()
}

/// A linearly independent set of nonnegative-integer conservation laws.
///
/// Totals are evaluated on the network's initial amounts. Returns an empty list
/// when no semipositive invariant exists.
pub fn derive_conservation_laws(network: &ReactionNetwork) -> Vec<ConservationLaw> {
    let s = stoichiometry_matrix(network);
    let mut flows = minimal_semiflows(&s);
    flows.sort_by(|a, b| {
        let (sa, sb) = (support(a), support(b));
        sa.len().cmp(&sb.len()).then(sa.cmp(&sb))
    });
    let mut basis: Vec<Vec<i64>> = Vec::new();
    for f in flows {
        basis.push(f);
        if exact_rank(&basis) < basis.len() {
            basis.pop();
        }
    }
    basis
        .into_iter()
        .enumerate()
        .map(|(k, y)| {
            let coefficients: Vec<Term> = y
                .iter()
                .enumerate()
                .filter(|(_, c)| **c > 0)
                .map(|(i, &c)| Term {
                    species: i,
                    coeff: c as u32,
                })
                .collect();
            let total = coefficients
                .iter()
                .map(|t| t.coeff as f64 * network.species[t.species].initial)
                .sum();
            ConservationLaw {
                name: format!("L{}", k + 1),
                coefficients,
                total,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crn::{parse_network, ModelKind, ModelPreset, PresetRates};

    fn laws_for(kind: ModelKind) -> (usize, usize) {
        let net = ModelPreset::new(kind, PresetRates::separated(1.0, 1.0, kind.targets()))
            .build()
            .unwrap();
        (derive_conservation_laws(&net).len(), left_null_dimension(&net))
    }

    #[test]
    fn isolated_siso_has_two_laws() {
        assert_eq!(laws_for(ModelKind::IsolatedSiso), (2, 2));
    }

    #[test]
    fn single_conversion_conserves_sum() {
        let net = parse_network("species A B\nrate k = 1\nA -> B @ k\n").unwrap();
        let laws = derive_conservation_laws(&net);
        assert_eq!(laws.len(), 1);
        assert_eq!(laws[0].dense(2), vec![1, 1]);
    }

    #[test]
    fn mimo_two_targets_rank_nullity() {
        // 11 species, stoichiometric rank 6.
        assert_eq!(laws_for(ModelKind::MimoDownstream { n: 2 }), (5, 5));
    }

    #[test]
    fn no_semipositive_invariant() {
        let net = parse_network("species A B\nrate k = 1\nA + B -> 0 @ k\n").unwrap();
        assert!(derive_conservation_laws(&net).is_empty());
        assert_eq!(left_null_dimension(&net), 1);
    }
}
