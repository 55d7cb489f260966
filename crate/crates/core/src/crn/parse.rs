//! Line-oriented CRN text format.
//!
//! ```text
//! # two-step enzymatic upstream system
//! volume 1
//! species I1=1 E=1 M1 Z1
//! rate k0p = 1
//! rate k0m = 1
//! rate c1 = 1
//! rate c2 = 1
//! reaction I1 + E <-> M1 @ k0p, k0m
//! reaction M1 -> E + Z1 @ c1
//! Z1 -> I1 @ c2
//! conserved Etot: E + M1 = 1
//! ```
//!
//! The `reaction` keyword is optional. `0` denotes an empty side. A rate
//! after `@` is either a declared symbol or a numeric literal.

use super::{ConservationLaw, CrnError, NetworkBuilder, Reaction, ReactionNetwork, Term};

struct Line<'a> {
    number: usize,
    text: &'a str,
}

fn malformed(line: usize, reason: impl Into<String>) -> CrnError {
    CrnError::MalformedLine {
        line,
        reason: reason.into(),
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn parse_number(line: usize, s: &str) -> Result<f64, CrnError> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| malformed(line, format!("expected a number, found `{}`", s.trim())))
}

fn keyword<'a>(text: &'a str, kw: &str) -> Option<&'a str> {
    let rest = text.strip_prefix(kw)?;
    (rest.is_empty() || rest.starts_with(char::is_whitespace)).then(|| rest.trim())
}

/// Parses a CRN source. Reversible reactions become two linked irreversible ones.
pub fn parse_network(text: &str) -> Result<ReactionNetwork, CrnError> {
    let lines: Vec<Line> = text
        .lines()
        .enumerate()
        .map(|(i, raw)| Line {
            number: i + 1,
            text: raw.split('#').next().unwrap_or("").trim(),
        })
        .filter(|l| !l.text.is_empty())
        .collect();

    let mut b = NetworkBuilder::new(1.0);
    let mut declared: Vec<String> = Vec::new();

    // Declarations first so reactions may reference symbols declared later.
    for l in &lines {
        if let Some(rest) = keyword(l.text, "volume") {
            let v = parse_number(l.number, rest)?;
            if !(v > 0.0 && v.is_finite()) {
                return Err(malformed(l.number, format!("volume must be positive, got {v}")));
            }
            b.volume(v);
        } else if let Some(rest) = keyword(l.text, "species") {
            for tok in rest.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()) {
                let (name, init) = match tok.split_once('=') {
                    Some((n, v)) => (n.trim(), parse_number(l.number, v)?),
                    None => (tok, 0.0),
                };
                if !is_identifier(name) {
                    return Err(malformed(l.number, format!("invalid species name `{name}`")));
                }
                if !(init >= 0.0 && init.is_finite()) {
                    return Err(malformed(l.number, format!("negative initial amount for `{name}`")));
                }
                if declared.iter().any(|d| d == name) {
                    return Err(CrnError::DuplicateSpecies(name.to_string()));
                }
                declared.push(name.to_string());
                b.species(name, init);
            }
        } else if let Some(rest) = keyword(l.text, "rate") {
            let (name, value) = match rest.split_once('=') {
                Some((n, v)) => (n.trim(), v.trim()),
                None => rest
                    .split_once(char::is_whitespace)
                    .map(|(n, v)| (n.trim(), v.trim()))
                    .ok_or_else(|| malformed(l.number, "expected `rate NAME = VALUE`"))?,
            };
            if !is_identifier(name) {
                return Err(malformed(l.number, format!("invalid rate name `{name}`")));
            }
            let value = parse_number(l.number, value)?;
            if !value.is_finite() || value <= 0.0 {
                return Err(CrnError::NonpositiveRate {
                    line: l.number,
                    name: name.to_string(),
                    value,
                });
            }
            b.rate(name, value);
        }
    }

    let mut literal_rates = 0usize;
    for l in &lines {
        let text = l.text;
        if keyword(text, "volume").is_some()
            || keyword(text, "species").is_some()
            || keyword(text, "rate").is_some()
        {
            continue;
        }
        if let Some(rest) = keyword(text, "conserved") {
            let law = parse_law(l.number, rest, &declared)?;
            b.push_law(law);
            continue;
        }
        let body = keyword(text, "reaction").unwrap_or(text);
        let (eq, rates) = body
            .split_once('@')
            .ok_or_else(|| malformed(l.number, "reaction needs `@ rate`"))?;
        let (lhs, rhs, reversible) = if let Some((lhs, rhs)) = eq.split_once("<->") {
            (lhs, rhs, true)
        } else if let Some((lhs, rhs)) = eq.split_once("->") {
            (lhs, rhs, false)
        } else {
            return Err(malformed(l.number, "missing `->` or `<->`"));
        };
        let reactants = parse_side(l.number, lhs, &declared)?;
        let products = parse_side(l.number, rhs, &declared)?;
        let rate_tokens: Vec<&str> = rates.split(',').map(str::trim).collect();
        let expected = if reversible { 2 } else { 1 };
        if rate_tokens.len() != expected || rate_tokens.iter().any(|t| t.is_empty()) {
            return Err(malformed(
                l.number,
                format!("expected {expected} rate(s) after `@`"),
            ));
        }
        let mut names = Vec::with_capacity(2);
        for tok in rate_tokens {
            if is_identifier(tok) {
                names.push(tok.to_string());
            } else {
                let value = parse_number(l.number, tok)?;
                if !value.is_finite() || value <= 0.0 {
                    return Err(CrnError::NonpositiveRate {
                        line: l.number,
                        name: tok.to_string(),
                        value,
                    });
                }
                let name = format!("_r{literal_rates}");
                literal_rates += 1;
                b.rate(&name, value);
                names.push(name);
            }
        }
        let first = b.push_reaction(Reaction {
            reactants: reactants.clone(),
            products: products.clone(),
            rate: names[0].clone(),
            reverse: reversible.then_some(usize::MAX),
        });
        if reversible {
            let second = b.push_reaction(Reaction {
                reactants: products,
                products: reactants,
                rate: names[1].clone(),
                reverse: Some(first),
            });
            b.reactions[first].reverse = Some(second);
        }
    }

    // Rate symbols are checked after all declarations have been seen.
    for r in &b.reactions {
        if !b.rates.contains_key(&r.rate) {
            return Err(CrnError::UnknownRate(r.rate.clone()));
        }
    }
    b.build()
}

fn parse_side(line: usize, side: &str, declared: &[String]) -> Result<Vec<Term>, CrnError> {
    let side = side.trim();
    if side == "0" || side == "∅" {
        return Ok(Vec::new());
    }
    if side.is_empty() {
        return Err(malformed(line, "empty reaction side (use `0`)"));
    }
    let mut terms: Vec<Term> = Vec::new();
    for raw in side.split('+') {
        let tok = raw.trim();
        if tok.is_empty() {
            return Err(malformed(line, "dangling `+`"));
        }
        let (coeff, name) = match tok.split_once(char::is_whitespace) {
            Some((c, n)) => (
                c.parse::<u32>()
                    .map_err(|_| malformed(line, format!("bad coefficient in `{tok}`")))?,
                n.trim(),
            ),
            None => {
                let digits = tok.chars().take_while(|c| c.is_ascii_digit()).count();
                if digits > 0 {
                    (tok[..digits].parse::<u32>().unwrap(), &tok[digits..])
                } else {
                    (1, tok)
                }
            }
        };
        if coeff == 0 || !is_identifier(name) {
            return Err(malformed(line, format!("bad term `{tok}`")));
        }
        let species = declared
            .iter()
            .position(|d| d == name)
            .ok_or_else(|| CrnError::UndeclaredSpecies {
                line,
                name: name.to_string(),
            })?;
        match terms.iter_mut().find(|t| t.species == species) {
            Some(t) => t.coeff += coeff,
            None => terms.push(Term { species, coeff }),
        }
    }
    Ok(terms)
}

fn parse_law(line: usize, rest: &str, declared: &[String]) -> Result<ConservationLaw, CrnError> {
    let (name, body) = match rest.split_once(':') {
        Some((n, b)) => (n.trim().to_string(), b),
        None => (String::new(), rest),
    };
    let (lhs, total) = body
        .split_once('=')
        .ok_or_else(|| malformed(line, "expected `conserved NAME: terms = total`"))?;
    let total = parse_number(line, total)?;
    if total.is_nan() || total < 0.0 {
        return Err(malformed(line, "conservation total must be nonnegative"));
    }
    let coefficients = parse_side(line, lhs, declared)?;
    let name = if name.is_empty() {
        format!("law{line}")
    } else {
        name
    };
    Ok(ConservationLaw {
        name,
        coefficients,
        total,
    })
}
