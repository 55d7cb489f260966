//! The five signaling-system models: isolated SISO, SISO with N downstream
//! targets, isolated MIMO, MIMO with N downstream targets, and two isolated
//! SISO upstream systems sharing N targets (MAC).

use serde::{Deserialize, Serialize};

use super::{CrnError, NetworkBuilder, ReactionNetwork};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelKind {
    IsolatedSiso,
    SisoDownstream { n: usize },
    IsolatedMimo,
    MimoDownstream { n: usize },
    MacTwoSiso { n: usize, q: usize },
}

impl ModelKind {
    pub fn targets(&self) -> usize {
        match *self {
            ModelKind::IsolatedSiso | ModelKind::IsolatedMimo => 0,
            ModelKind::SisoDownstream { n }
            | ModelKind::MimoDownstream { n }
            | ModelKind::MacTwoSiso { n, .. } => n,
        }
    }

    /// True when a second upstream system (input I2) is present.
    pub fn has_second_input(&self) -> bool {
        matches!(
            self,
            ModelKind::IsolatedMimo | ModelKind::MimoDownstream { .. } | ModelKind::MacTwoSiso { .. }
        )
    }

    pub fn label(&self) -> &'static str {
        match self {
            ModelKind::IsolatedSiso => "isolated-siso",
            ModelKind::SisoDownstream { .. } => "siso-downstream",
            ModelKind::IsolatedMimo => "isolated-mimo",
            ModelKind::MimoDownstream { .. } => "mimo-downstream",
            ModelKind::MacTwoSiso { .. } => "mac-two-siso",
        }
    }
}

/// Rate constants shared by both upstream replicas; downstream constants are per target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PresetRates {
    pub k0p: f64,
    pub k0m: f64,
    pub c1: f64,
    pub c2: f64,
    pub k3p: Vec<f64>,
    pub k3m: Vec<f64>,
}

impl PresetRates {
    pub fn uniform(k0p: f64, k0m: f64, c1: f64, c2: f64, k3p: f64, k3m: f64, n: usize) -> Self {
        PresetRates {
            k0p,
            k0m,
            c1,
            c2,
            k3p: vec![k3p; n],
            k3m: vec![k3m; n],
        }
    }

    /// All binding/unbinding constants `k`, all catalytic constants `c`.
    pub fn separated(k: f64, c: f64, n: usize) -> Self {
        Self::uniform(k, k, c, c, k, k, n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PresetTotals {
    pub itot1: u64,
    pub itot2: u64,
    pub etot: u64,
    /// Second enzyme pool, used by the MAC model only.
    pub etot2: u64,
    pub dtot: Vec<u64>,
}

impl PresetTotals {
    pub fn unit(n: usize) -> Self {
        PresetTotals {
            itot1: 1,
            itot2: 1,
            etot: 1,
            etot2: 1,
            dtot: vec![1; n],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelPreset {
    pub kind: ModelKind,
    pub rates: PresetRates,
    pub totals: PresetTotals,
    pub volume: f64,
}

impl ModelPreset {
    /// Unit totals, unit volume.
    pub fn new(kind: ModelKind, rates: PresetRates) -> Self {
        let n = kind.targets();
        ModelPreset {
            kind,
            rates,
            totals: PresetTotals::unit(n),
            volume: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), CrnError> {
        let n = self.kind.targets();
        if let ModelKind::MacTwoSiso { n, q } = self.kind {
            if q > n {
                return Err(CrnError::InvalidPreset(format!("Q = {q} exceeds N = {n}")));
            }
        }
        if self.rates.k3p.len() != n || self.rates.k3m.len() != n {
            return Err(CrnError::InvalidPreset(format!(
                "expected {n} downstream rate pairs, got {}/{}",
                self.rates.k3p.len(),
                self.rates.k3m.len()
            )));
        }
        if self.totals.dtot.len() != n {
            return Err(CrnError::InvalidPreset(format!(
                "expected {n} downstream totals, got {}",
                self.totals.dtot.len()
            )));
        }
        let r = &self.rates;
        let all = [r.k0p, r.k0m, r.c1, r.c2]
            .into_iter()
            .chain(r.k3p.iter().copied())
            .chain(r.k3m.iter().copied());
        for v in all {
            if !(v.is_finite() && v >= 0.0) {
                return Err(CrnError::InvalidPreset(format!("rate {v} is not a nonnegative number")));
            }
        }
        if !(self.volume.is_finite() && self.volume > 0.0) {
            return Err(CrnError::InvalidVolume(self.volume));
        }
        Ok(())
    }

    /// Builds the network with initial amounts at t0: only inputs, enzymes and
    /// free downstream DNA are present.
    pub fn build(&self) -> Result<ReactionNetwork, CrnError> {
        self.validate()?;
        let n = self.kind.targets();
        let t = &self.totals;
        let r = &self.rates;
        let two = self.kind.has_second_input();
        let mac = matches!(self.kind, ModelKind::MacTwoSiso { .. });
        let mimo = two && !mac;

        let mut b = NetworkBuilder::new(self.volume);
        // Column order of the microstate tables.
        b.species("M1", 0.0);
        b.species("I1", t.itot1 as f64);
        b.species("Z1", 0.0);
        let c_first: Vec<String> = (1..=n)
            .map(|j| if mac { format!("C{j}_1") } else { format!("C{j}") })
            .collect();
        for c in &c_first {
            b.species(c, 0.0);
        }
        let c_second: Vec<String> = (1..=n).map(|j| format!("C{j}_2")).collect();
        if two {
            b.species("M2", 0.0);
            b.species("I2", t.itot2 as f64);
            b.species("Z2", 0.0);
            if mac {
                for c in &c_second {
                    b.species(c, 0.0);
                }
            }
        }
        b.species("E", t.etot as f64);
        if mac {
            b.species("E2", t.etot2 as f64);
        }
        let d: Vec<String> = (1..=n).map(|j| format!("D{j}")).collect();
        for (j, name) in d.iter().enumerate() {
            b.species(name, t.dtot[j] as f64);
        }

        b.rate("k0p", r.k0p);
        b.rate("k0m", r.k0m);
        b.rate("c1", r.c1);
        b.rate("c2", r.c2);
        for j in 0..n {
            b.rate(&format!("k3p_{}", j + 1), r.k3p[j]);
            b.rate(&format!("k3m_{}", j + 1), r.k3m[j]);
        }

        b.reversible(&["I1", "E"], &["M1"], "k0p", "k0m");
        b.irreversible(&["M1"], &["E", "Z1"], "c1");
        b.irreversible(&["Z1"], &["I1"], "c2");
        if two {
            let e2 = if mac { "E2" } else { "E" };
            b.reversible(&["I2", e2], &["M2"], "k0p", "k0m");
            b.irreversible(&["M2"], &[e2, "Z2"], "c1");
            b.irreversible(&["Z2"], &["I2"], "c2");
        }
        for j in 0..n {
            let (kp, km) = (format!("k3p_{}", j + 1), format!("k3m_{}", j + 1));
            b.reversible(&["Z1", &d[j]], &[&c_first[j]], &kp, &km);
            if mac {
                b.reversible(&["Z2", &d[j]], &[&c_second[j]], &kp, &km);
            }
        }

        let mut itot1: Vec<&str> = vec!["I1", "M1", "Z1"];
        itot1.extend(c_first.iter().map(String::as_str));
        if mac {
            b.law("Etot1", &["E", "M1"], t.etot as f64);
            b.law("Etot2", &["E2", "M2"], t.etot2 as f64);
        } else if mimo {
            b.law("Etot", &["E", "M1", "M2"], t.etot as f64);
        } else {
            b.law("Etot", &["E", "M1"], t.etot as f64);
        }
        b.law("Itot1", &itot1, t.itot1 as f64);
        if two {
            let mut itot2: Vec<&str> = vec!["I2", "M2", "Z2"];
            if mac {
                itot2.extend(c_second.iter().map(String::as_str));
            }
            b.law("Itot2", &itot2, t.itot2 as f64);
        }
        for j in 0..n {
            let mut members: Vec<&str> = vec![&d[j], &c_first[j]];
            if mac {
                members.push(&c_second[j]);
            }
            b.law(&format!("Dtot{}", j + 1), &members, t.dtot[j] as f64);
        }
        b.build()
    }
}
