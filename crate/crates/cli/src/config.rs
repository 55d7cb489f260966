//! Run configuration: defaults < JSON config file < flags.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use retro_core::crn::{ModelKind, ModelPreset, PresetRates, PresetTotals};
use retro_core::lna::LnaParams;
use retro_core::validate::ValidateConfig;

use crate::error::CliError;

/// Every setting the commands read. `None` means "not given at this layer".
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Model preset: isolated-siso, siso-downstream, isolated-mimo, mimo-downstream, mac-two-siso.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    /// Reaction network file (parse and analyze).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    /// Number of downstream targets.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Targets bound by the first upstream system (MAC).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub volume: Option<f64>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k0p: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k0m: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
    /// Downstream binding rates, one per target or a single value for all.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k3p: Option<Vec<f64>>,
    /// Downstream unbinding rates, one per target or a single value for all.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k3m: Option<Vec<f64>>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub itot1: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub itot2: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub etot: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub etot2: Option<f64>,
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dtot: Option<Vec<f64>>,

    /// P(I1 = 0).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p0: Option<f64>,
    /// P(I2 = 0).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p02: Option<f64>,

    /// Points of the A grid on [0, 1].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_points: Option<usize>,
    /// Points of the p0 grid on [0, 1].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p0_points: Option<usize>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_variance: Option<f64>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_interval: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tv_threshold: Option<f64>,
    /// Binding-to-catalysis ratio of the closed-form rate set.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub separation: Option<f64>,

    /// Output file for JSON commands; stdout when absent.
    #[arg(long, short)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Output directory for sweep files.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    /// Also write the enumerated state space as CSV (parse).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub states: Option<PathBuf>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($f:ident),* $(,)?) => {
        RunConfig { $($f: $top.$f.or($base.$f)),* }
    };
}

impl RunConfig {
    /// Fields set in `top` win.
    pub fn overlay(self, top: RunConfig) -> RunConfig {
        let base = self;
        overlay!(base, top;
            preset, file, n, q, volume, k0p, k0m, c1, c2, k3p, k3m, itot1, itot2, etot,
            etot2, dtot, p0, p02, a_points, p0_points, noise_variance, seed, samples,
            burn_in, sample_interval, tv_threshold, separation, output, out_dir, states,
        )
    }

    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("config {}: {e}", path.display())))
    }

    /// Parsed preset, or `None` when a network file is used instead.
    pub fn model(&self) -> Result<Option<ModelKind>, CliError> {
        match (&self.preset, &self.file) {
            (Some(_), Some(_)) => Err(CliError::config("give exactly one of --preset and --file")),
            (None, None) => Err(CliError::config("one of --preset or --file is required")),
            (None, Some(_)) => Ok(None),
            (Some(name), None) => self.kind(name).map(Some),
        }
    }

    fn kind(&self, name: &str) -> Result<ModelKind, CliError> {
        let n = self.n.unwrap_or(1);
        let kind = match name {
            "isolated-siso" => ModelKind::IsolatedSiso,
            "siso-downstream" => ModelKind::SisoDownstream { n },
            "isolated-mimo" => ModelKind::IsolatedMimo,
            "mimo-downstream" => ModelKind::MimoDownstream { n },
            "mac-two-siso" => {
                let q = self.q.unwrap_or(n / 2);
                if q > n {
                    return Err(CliError::config(format!("--q {q} exceeds --n {n}")));
                }
                ModelKind::MacTwoSiso { n, q }
            }
            other => return Err(CliError::config(format!("--preset: unknown preset `{other}`"))),
        };
        if kind.targets() == 0 && self.n.is_some() {
            return Err(CliError::config(format!("--n: preset `{name}` has no downstream targets")));
        }
        Ok(kind)
    }

    /// Upstream rates default to 1; downstream rates must be given.
    pub fn rates(&self, kind: ModelKind) -> Result<PresetRates, CliError> {
        let n = kind.targets();
        let mut rates = PresetRates::separated(1.0, 1.0, n);
        for (flag, given, slot) in [
            ("--k0p", self.k0p, &mut rates.k0p),
            ("--k0m", self.k0m, &mut rates.k0m),
            ("--c1", self.c1, &mut rates.c1),
            ("--c2", self.c2, &mut rates.c2),
        ] {
            if let Some(v) = given {
                *slot = nonnegative(flag, v)?;
            }
        }
        if n > 0 {
            rates.k3p = per_target("--k3p", self.k3p.as_deref(), n)?;
            rates.k3m = per_target("--k3m", self.k3m.as_deref(), n)?;
        } else if self.k3p.is_some() || self.k3m.is_some() {
            return Err(CliError::config(format!(
                "--k3p/--k3m: preset `{}` has no downstream targets",
                kind.label()
            )));
        }
        Ok(rates)
    }

    pub fn volume_or(&self, default: f64) -> Result<f64, CliError> {
        let v = self.volume.unwrap_or(default);
        if v.is_finite() && v > 0.0 {
            Ok(v)
        } else {
            Err(CliError::config(format!("--volume: must be positive, got {v}")))
        }
    }

    /// Molecule-count preset for the CME pipeline.
    pub fn preset(&self, kind: ModelKind) -> Result<ModelPreset, CliError> {
        let n = kind.targets();
        let mut p = ModelPreset::new(kind, self.rates(kind)?);
        p.volume = self.volume_or(1.0)?;
        let u = PresetTotals::unit(n);
        p.totals = PresetTotals {
            itot1: count("--itot1", self.itot1, u.itot1)?,
            itot2: count("--itot2", self.itot2, u.itot2)?,
            etot: count("--etot", self.etot, u.etot)?,
            etot2: count("--etot2", self.etot2, u.etot2)?,
            dtot: match &self.dtot {
                None => u.dtot,
                Some(d) => broadcast("--dtot", d, n)?
                    .into_iter()
                    .map(|v| count("--dtot", Some(v), 0))
                    .collect::<Result<_, _>>()?,
            },
        };
        Ok(p)
    }

    /// Concentration-level parameters for the LNA pipeline.
    pub fn lna_params(&self, kind: ModelKind) -> Result<LnaParams, CliError> {
        let n = kind.targets();
        let mut p = LnaParams::defaults(kind);
        p.rates = self.rates(kind)?;
        p.volume = self.volume_or(p.volume)?;
        for (flag, given, slot) in [
            ("--itot1", self.itot1, &mut p.itot1),
            ("--itot2", self.itot2, &mut p.itot2),
            ("--etot", self.etot, &mut p.etot),
            ("--etot2", self.etot2, &mut p.etot2),
        ] {
            if let Some(v) = given {
                *slot = nonnegative(flag, v)?;
            }
        }
        if let Some(d) = &self.dtot {
            p.dtot = broadcast("--dtot", d, n)?
                .into_iter()
                .map(|v| nonnegative("--dtot", v))
                .collect::<Result<_, _>>()?;
        }
        if let Some(v) = self.noise_variance {
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::config(format!("--noise-variance: must be positive, got {v}")));
            }
            p.noise_variance = v;
        }
        Ok(p)
    }

    pub fn validate_config(&self) -> Result<ValidateConfig, CliError> {
        let mut c = ValidateConfig::default();
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.samples {
            c.ssa_samples = v;
        }
        if let Some(v) = self.burn_in {
            c.burn_in = nonnegative("--burn-in", v)?;
        }
        if let Some(v) = self.sample_interval {
            c.sample_interval = positive("--sample-interval", v)?;
        }
        if let Some(v) = self.tv_threshold {
            c.tv_threshold = nonnegative("--tv-threshold", v)?;
        }
        if let Some(v) = self.separation {
            c.separation = positive("--separation", v)?;
        }
        if let Some(v) = self.p02 {
            c.p0_second = probability("--p02", v)?;
        }
        if let Some(v) = self.n {
            c.targets = v;
        }
        if let Some(v) = self.q {
            c.mac_q = v;
        }
        if c.mac_q > c.targets {
            return Err(CliError::config(format!("--q {} exceeds --n {}", c.mac_q, c.targets)));
        }
        Ok(c)
    }
}

pub fn probability(flag: &str, v: f64) -> Result<f64, CliError> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(CliError::config(format!("{flag}: {v} is outside [0, 1]")))
    }
}

fn nonnegative(flag: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(CliError::config(format!("{flag}: must be a nonnegative number, got {v}")))
    }
}

fn positive(flag: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::config(format!("{flag}: must be positive, got {v}")))
    }
}

fn count(flag: &str, v: Option<f64>, default: u64) -> Result<u64, CliError> {
    match v {
        None => Ok(default),
        Some(x) if x.is_finite() && x >= 0.0 && x.fract() == 0.0 => Ok(x as u64),
        Some(x) => Err(CliError::config(format!("{flag}: molecule count must be a nonnegative integer, got {x}"))),
    }
}

fn broadcast(flag: &str, values: &[f64], n: usize) -> Result<Vec<f64>, CliError> {
    match values.len() {
        1 => Ok(vec![values[0]; n]),
        len if len == n => Ok(values.to_vec()),
        len => Err(CliError::config(format!("{flag}: expected 1 or {n} values, got {len}"))),
    }
}

fn per_target(flag: &str, values: Option<&[f64]>, n: usize) -> Result<Vec<f64>, CliError> {
    let values = values.ok_or_else(|| {
        CliError::config(format!("{flag} is required for models with downstream targets"))
    })?;
    broadcast(flag, values, n)?
        .into_iter()
        .map(|v| nonnegative(flag, v))
        .collect()
}
