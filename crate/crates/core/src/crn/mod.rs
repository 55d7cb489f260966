//! Reaction-network data model.
//!
//! A [`ReactionNetwork`] holds species, irreversible mass-action reactions
//! whose rate constants are named symbols, declared conservation laws and the
//! reaction volume. Reversible reactions are stored as two irreversible halves
//! linked through [`Reaction::reverse`].

mod conservation;
mod parse;
mod preset;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use conservation::{derive_conservation_laws, left_null_dimension, stoichiometry_matrix};
pub use parse::parse_network;
pub use preset::{ModelKind, ModelPreset, PresetRates, PresetTotals};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CrnError {
    #[error("line {line}: undeclared species `{name}`")]
    UndeclaredSpecies { line: usize, name: String },
    #[error("line {line}: rate `{name}` must be positive, got {value}")]
    NonpositiveRate { line: usize, name: String, value: f64 },
    #[error("line {line}: malformed line: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("conservation law `{name}` is not conserved by the reaction stoichiometry")]
    InvalidConservationLaw { name: String },
    #[error("duplicate species `{0}`")]
    DuplicateSpecies(String),
    #[error("unknown rate symbol `{0}`")]
    UnknownRate(String),
    #[error("invalid rate `{name}` = {value}")]
    InvalidRate { name: String, value: f64 },
    #[error("reaction {0} has more than two reactant molecules")]
    TooManyReactants(String),
    #[error("reaction {0} is a homodimerization, which is not supported")]
    Homodimerization(String),
    #[error("invalid volume {0}")]
    InvalidVolume(f64),
    #[error("invalid preset: {0}")]
    InvalidPreset(String),
}

/// A chemical species and its initial amount.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Species {
    pub name: String,
    pub initial: f64,
}

/// A species index with its stoichiometric coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Term {
    pub species: usize,
    pub coeff: u32,
}

/// One irreversible mass-action step.
#[derive(Debug, Clone, PartialEq)]
pub struct Reaction {
    pub reactants: Vec<Term>,
    pub products: Vec<Term>,
    /// Name of the rate symbol in [`ReactionNetwork::rates`].
    pub rate: String,
    /// Index of the opposite half when declared as a reversible pair.
    pub reverse: Option<usize>,
}

impl Reaction {
    pub fn reactant_molecules(&self) -> u32 {
        self.reactants.iter().map(|t| t.coeff).sum()
    }

    /// Net change of each species when the reaction fires once.
    pub fn net_change(&self, n_species: usize) -> Vec<i64> {
        let mut delta = vec![0i64; n_species];
        for t in &self.reactants {
            delta[t.species] -= t.coeff as i64;
        }
        for t in &self.products {
            delta[t.species] += t.coeff as i64;
        }
        delta
    }
}

/// `Σ coeff·species = total`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConservationLaw {
    pub name: String,
    pub coefficients: Vec<Term>,
    pub total: f64,
}

impl ConservationLaw {
    pub fn dense(&self, n_species: usize) -> Vec<i64> {
        let mut v = vec![0i64; n_species];
        for t in &self.coefficients {
            v[t.species] += t.coeff as i64;
        }
        v
    }

    pub fn evaluate(&self, counts: &[u64]) -> u64 {
        self.coefficients
            .iter()
            .map(|t| t.coeff as u64 * counts[t.species])
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReactionNetwork {
    pub species: Vec<Species>,
    pub reactions: Vec<Reaction>,
    pub rates: BTreeMap<String, f64>,
    pub laws: Vec<ConservationLaw>,
    pub volume: f64,
}

impl ReactionNetwork {
    pub fn species_index(&self, name: &str) -> Option<usize> {
        self.species.iter().position(|s| s.name == name)
    }

    pub fn species_names(&self) -> Vec<&str> {
        self.species.iter().map(|s| s.name.as_str()).collect()
    }

    pub fn rate_value(&self, reaction: usize) -> f64 {
        self.rates[&self.reactions[reaction].rate]
    }

    /// Rebinds one rate symbol; every reaction referencing it picks up the new value.
    pub fn set_rate(&mut self, name: &str, value: f64) -> Result<(), CrnError> {
        if !value.is_finite() || value < 0.0 {
            return Err(CrnError::InvalidRate {
                name: name.to_string(),
                value,
            });
        }
        match self.rates.get_mut(name) {
            Some(v) => {
                *v = value;
                Ok(())
            }
            None => Err(CrnError::UnknownRate(name.to_string())),
        }
    }

    pub fn with_rate(mut self, name: &str, value: f64) -> Result<Self, CrnError> {
        self.set_rate(name, value)?;
        Ok(self)
    }

    /// Multiplies every rate constant by `factor`.
    pub fn scaled_rates(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for v in out.rates.values_mut() {
            *v *= factor;
        }
        out
    }

    /// Applies one firing of `reaction` to `counts`; `None` if a reactant is missing.
    pub fn fire(&self, reaction: usize, counts: &[u64]) -> Option<Vec<u64>> {
        let r = &self.reactions[reaction];
        let mut next = counts.to_vec();
        for t in &r.reactants {
            let have = next[t.species];
            if have < t.coeff as u64 {
                return None;
            }
            next[t.species] = have - t.coeff as u64;
        }
        for t in &r.products {
            next[t.species] += t.coeff as u64;
        }
        Some(next)
    }

    /// Initial amounts as integer counts; fails on non-integral values.
    pub fn initial_counts(&self) -> Option<Vec<u64>> {
        self.species
            .iter()
            .map(|s| {
                (s.initial >= 0.0 && s.initial.fract() == 0.0 && s.initial.is_finite())
                    .then_some(s.initial as u64)
            })
            .collect()
    }

    /// Conservation totals implied by a count vector.
    pub fn totals_of(&self, counts: &[u64]) -> Vec<u64> {
        self.laws.iter().map(|l| l.evaluate(counts)).collect()
    }

    /// Integer totals of the declared laws.
    pub fn declared_totals(&self) -> Option<Vec<u64>> {
        self.laws
            .iter()
            .map(|l| (l.total >= 0.0 && l.total.fract() == 0.0).then_some(l.total as u64))
            .collect()
    }

    /// Structural checks: volume, rates, reactant arity, and declared laws.
    pub fn validate(&self) -> Result<(), CrnError> {
        if !(self.volume.is_finite() && self.volume > 0.0) {
            return Err(CrnError::InvalidVolume(self.volume));
        }
        for (i, s) in self.species.iter().enumerate() {
            if self.species[..i].iter().any(|o| o.name == s.name) {
                return Err(CrnError::DuplicateSpecies(s.name.clone()));
            }
        }
        for (name, &value) in &self.rates {
            if !value.is_finite() || value < 0.0 {
                return Err(CrnError::InvalidRate {
                    name: name.clone(),
                    value,
                });
            }
        }
        for r in &self.reactions {
            if !self.rates.contains_key(&r.rate) {
                return Err(CrnError::UnknownRate(r.rate.clone()));
            }
            if r.reactant_molecules() > 2 {
                return Err(CrnError::TooManyReactants(self.format_reaction(r)));
            }
            if r.reactants.iter().any(|t| t.coeff > 1) {
                return Err(CrnError::Homodimerization(self.format_reaction(r)));
            }
        }
        let n = self.species.len();
        for law in &self.laws {
            let v = law.dense(n);
            let conserved = self
                .reactions
                .iter()
                .all(|r| r.net_change(n).iter().zip(&v).map(|(a, b)| a * b).sum::<i64>() == 0);
            if !conserved {
                return Err(CrnError::InvalidConservationLaw {
                    name: law.name.clone(),
                });
            }
        }
        Ok(())
    }

    fn format_side(&self, terms: &[Term]) -> String {
        if terms.is_empty() {
            return "0".to_string();
        }
        terms
            .iter()
            .map(|t| {
                let name = &self.species[t.species].name;
                if t.coeff == 1 {
                    name.clone()
                } else {
                    format!("{} {}", t.coeff, name)
                }
            })
            .collect::<Vec<_>>()
            .join(" + ")
    }

    pub fn format_reaction(&self, r: &Reaction) -> String {
        format!(
            "{} -> {} @ {}",
            self.format_side(&r.reactants),
            self.format_side(&r.products),
            r.rate
        )
    }

    /// Serializes to the line-oriented text format accepted by [`parse_network`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("volume {}\n", self.volume));
        let decl: Vec<String> = self
            .species
            .iter()
            .map(|s| format!("{}={}", s.name, s.initial))
            .collect();
        if !decl.is_empty() {
            out.push_str(&format!("species {}\n", decl.join(" ")));
        }
        for (name, value) in &self.rates {
            out.push_str(&format!("rate {name} = {value}\n"));
        }
        for (i, r) in self.reactions.iter().enumerate() {
            match r.reverse {
                Some(j) if j < i => continue,
                Some(j) => out.push_str(&format!(
                    "reaction {} <-> {} @ {}, {}\n",
                    self.format_side(&r.reactants),
                    self.format_side(&r.products),
                    r.rate,
                    self.reactions[j].rate
                )),
                None => out.push_str(&format!("reaction {}\n", self.format_reaction(r))),
            }
        }
        for law in &self.laws {
            out.push_str(&format!(
                "conserved {}: {} = {}\n",
                law.name,
                self.format_side(&law.coefficients),
                law.total
            ));
        }
        out
    }

    /// Canonical, order-independent JSON form (sorted species, reactions, laws).
    pub fn to_canonical(&self) -> CanonicalNetwork {
        let name = |i: usize| self.species[i].name.clone();
        let side = |terms: &[Term]| {
            let mut v: Vec<(String, u32)> = terms.iter().map(|t| (name(t.species), t.coeff)).collect();
            v.sort();
            v
        };
        let mut species: Vec<CanonicalSpecies> = self
            .species
            .iter()
            .map(|s| CanonicalSpecies {
                name: s.name.clone(),
                initial: s.initial,
            })
            .collect();
        species.sort_by(|a, b| a.name.cmp(&b.name));
        let mut reactions: Vec<CanonicalReaction> = self
            .reactions
            .iter()
            .map(|r| CanonicalReaction {
                reactants: side(&r.reactants),
                products: side(&r.products),
                rate: r.rate.clone(),
                rate_value: self.rates[&r.rate],
                reversible: r.reverse.is_some(),
            })
            .collect();
        reactions.sort_by(|a, b| {
            (&a.reactants, &a.products, &a.rate).cmp(&(&b.reactants, &b.products, &b.rate))
        });
        let mut laws: Vec<CanonicalLaw> = self
            .laws
            .iter()
            .map(|l| CanonicalLaw {
                name: l.name.clone(),
                coefficients: side(&l.coefficients),
                total: l.total,
            })
            .collect();
        laws.sort_by(|a, b| a.name.cmp(&b.name));
        CanonicalNetwork {
            volume: self.volume,
            species,
            rates: self.rates.clone(),
            reactions,
            laws,
        }
    }

    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_canonical()).expect("canonical network serializes")
    }
}

impl fmt::Display for ReactionNetwork {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalSpecies {
    pub name: String,
    pub initial: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalReaction {
    pub reactants: Vec<(String, u32)>,
    pub products: Vec<(String, u32)>,
    pub rate: String,
    pub rate_value: f64,
    pub reversible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalLaw {
    pub name: String,
    pub coefficients: Vec<(String, u32)>,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalNetwork {
    pub volume: f64,
    pub species: Vec<CanonicalSpecies>,
    pub rates: BTreeMap<String, f64>,
    pub reactions: Vec<CanonicalReaction>,
    pub laws: Vec<CanonicalLaw>,
}

/// Incremental construction used by the presets and the parser.
#[derive(Debug, Default)]
pub struct NetworkBuilder {
    species: Vec<Species>,
    reactions: Vec<Reaction>,
    rates: BTreeMap<String, f64>,
    laws: Vec<ConservationLaw>,
    volume: f64,
}

impl NetworkBuilder {
    pub fn new(volume: f64) -> Self {
        NetworkBuilder {
            volume,
            ..Default::default()
        }
    }

    pub fn species(&mut self, name: &str, initial: f64) -> usize {
        if let Some(i) = self.species.iter().position(|s| s.name == name) {
            self.species[i].initial = initial;
            return i;
        }
        self.species.push(Species {
            name: name.to_string(),
            initial,
        });
        self.species.len() - 1
    }

    pub fn rate(&mut self, name: &str, value: f64) {
        self.rates.insert(name.to_string(), value);
    }

    fn lookup(&self, name: &str) -> usize {
        self.species
            .iter()
            .position(|s| s.name == name)
            .unwrap_or_else(|| panic!("species {name} declared before use"))
    }

    fn terms(&self, names: &[&str]) -> Vec<Term> {
        let mut terms: Vec<Term> = Vec::new();
        for n in names {
            let i = self.lookup(n);
            match terms.iter_mut().find(|t| t.species == i) {
                Some(t) => t.coeff += 1,
                None => terms.push(Term { species: i, coeff: 1 }),
            }
        }
        terms
    }

    pub fn push_reaction(&mut self, reaction: Reaction) -> usize {
        self.reactions.push(reaction);
        self.reactions.len() - 1
    }

    pub fn irreversible(&mut self, lhs: &[&str], rhs: &[&str], rate: &str) {
        let r = Reaction {
            reactants: self.terms(lhs),
            products: self.terms(rhs),
            rate: rate.to_string(),
            reverse: None,
        };
        self.push_reaction(r);
    }

    pub fn reversible(&mut self, lhs: &[&str], rhs: &[&str], forward: &str, backward: &str) {
        let i = self.reactions.len();
        let f = Reaction {
            reactants: self.terms(lhs),
            products: self.terms(rhs),
            rate: forward.to_string(),
            reverse: Some(i + 1),
        };
        let b = Reaction {
            reactants: self.terms(rhs),
            products: self.terms(lhs),
            rate: backward.to_string(),
            reverse: Some(i),
        };
        self.reactions.push(f);
        self.reactions.push(b);
    }

    pub fn law(&mut self, name: &str, members: &[&str], total: f64) {
        let coefficients = self.terms(members);
        self.laws.push(ConservationLaw {
            name: name.to_string(),
            coefficients,
            total,
        });
    }

    pub fn push_law(&mut self, law: ConservationLaw) {
        self.laws.push(law);
    }

    pub fn volume(&mut self, volume: f64) {
        self.volume = volume;
    }

    pub fn build(self) -> Result<ReactionNetwork, CrnError> {
        let net = ReactionNetwork {
            species: self.species,
            reactions: self.reactions,
            rates: self.rates,
            laws: self.laws,
            volume: self.volume,
        };
        net.validate()?;
        Ok(net)
    }
}
