use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use retro_core::channel::{
    capacity_bounds, capacity_via_optimization, extract_a, joint_io_pmf, mi_closed_form,
    mutual_information, sweep_bounds, unit_grid, InputEnsemble,
};
use retro_core::cme::stationary_from_initial;
use retro_core::crn::{derive_conservation_laws, left_null_dimension, parse_network, ModelKind, ReactionNetwork};
use retro_core::lna::{lna_analyze, LnaReport};
use retro_core::retro::{a0, a0_exact, a0_mimo, a_mac, a_n, an_mimo_numeric, b_constant, RateSet};
use retro_core::state_space::enumerate_microstates;
use retro_core::validate::validation_report;

use crate::config::{probability, RunConfig};
use crate::error::CliError;

pub const TOOL: &str = "retro";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn meta(command: &str, config: &RunConfig) -> Value {
    json!({ "tool": TOOL, "version": VERSION, "command": command, "config": config })
}

fn csv_header(command: &str, config: &RunConfig) -> String {
    let cfg = serde_json::to_string(config).expect("config serializes");
    format!("# {TOOL} {VERSION} {command} config={cfg}\n")
}

fn document(command: &str, config: &RunConfig, body: impl Serialize) -> Result<String, CliError> {
    let mut doc = json!({ "meta": meta(command, config) });
    let body = serde_json::to_value(body).map_err(|e| CliError::solver(e.to_string()))?;
    match body {
        Value::Object(map) => doc.as_object_mut().expect("object").extend(map),
        other => {
            doc["result"] = other;
        }
    }
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::solver(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))
}

/// Writes to `--output` or returns the text for stdout.
fn emit(config: &RunConfig, text: String) -> Result<Option<String>, CliError> {
    match &config.output {
        Some(path) => write_file(path, &text).map(|_| None),
        None => Ok(Some(text)),
    }
}

fn read_network(path: &Path) -> Result<ReactionNetwork, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("--file: cannot read {}: {e}", path.display())))?;
    parse_network(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

pub fn analyze(mut cfg: RunConfig) -> Result<Option<String>, CliError> {
    let Some(kind) = cfg.model()? else {
        return analyze_file(cfg);
    };
    let preset = cfg.preset(kind)?;
    let p0 = probability("--p0", cfg.p0.unwrap_or(0.5))?;
    cfg.p0 = Some(p0);
    let mut inputs = InputEnsemble::new(p0)?;
    let p02 = if kind.has_second_input() {
        let q = probability("--p02", cfg.p02.unwrap_or(0.5))?;
        cfg.p02 = Some(q);
        inputs = inputs.with_second(q)?;
        Some(q)
    } else if cfg.p02.is_some() {
        return Err(CliError::config(format!("--p02: preset `{}` has a single input", kind.label())));
    } else {
        None
    };

    let joint = joint_io_pmf(&preset, inputs)?;
    let a = extract_a(&joint)?.a;
    let rs = RateSet::from_preset(&preset);
    let mut warnings = rs.assumption_warnings();

    let mut closed = json!({
        "a0": a0(&rs).value,
        "a0_exact": a0_exact(&rs).value,
    });
    let n = kind.targets();
    if n > 0 {
        closed["a_n"] = json!(a_n(&rs, n)?.value);
    }
    match kind {
        ModelKind::IsolatedMimo | ModelKind::MimoDownstream { .. } => {
            let q = p02.expect("MIMO has a second input");
            match b_constant(&rs) {
                Ok(b) => {
                    closed["b"] = json!(b);
                    closed["a0_mimo"] = json!(a0_mimo(&rs, q)?.value);
                }
                Err(e) => warnings.push(e.to_string()),
            }
            let m = an_mimo_numeric(&preset, q)?;
            closed["mimo_numeric"] = json!({ "mixture": m.mixture.value, "an": m.an, "g": m.g });
        }
        ModelKind::MacTwoSiso { q, .. } => {
            closed["a_mac"] = json!(a_mac(&rs, q)?.value);
        }
        _ => {}
    }

    let (capacity, p0_star) = capacity_via_optimization(a);
    let body = json!({
        "model": kind,
        "preset": preset,
        "joint": joint.0,
        "a_exact": a,
        "closed_form": closed,
        "mi_nats": mutual_information(&joint.rows()),
        "mi_closed_form_nats": mi_closed_form(a, p0),
        "bounds": capacity_bounds(a, p0),
        "capacity": { "nats": capacity, "p0_star": p0_star },
        "separation_ratio": rs.separation_ratio(),
        "warnings": warnings,
    });
    emit(&cfg, document("analyze", &cfg, body)?)
}

fn analyze_file(cfg: RunConfig) -> Result<Option<String>, CliError> {
    let path = cfg.file.clone().expect("file mode");
    let net = read_network(&path)?;
    let init = net
        .initial_counts()
        .ok_or_else(|| CliError::config("initial amounts must be nonnegative integers for the CME"))?;
    let (space, pmf) = stationary_from_initial(&net, &init)?;
    let names: Vec<&str> = net.species_names();
    let mut means = vec![0.0; names.len()];
    for (s, p) in space.states().iter().zip(&pmf.probabilities) {
        for (m, &c) in means.iter_mut().zip(s.counts()) {
            *m += p * c as f64;
        }
    }
    let states: Vec<Value> = space
        .states()
        .iter()
        .zip(&pmf.probabilities)
        .map(|(s, p)| json!({ "counts": s.counts(), "probability": p }))
        .collect();
    let body = json!({
        "network": net.to_canonical(),
        "species": names,
        "state_count": space.len(),
        "residual": pmf.residual,
        "means": means,
        "pmf": states,
    });
    emit(&cfg, document("analyze", &cfg, body)?)
}

pub fn sweep(mut cfg: RunConfig) -> Result<Option<String>, CliError> {
    let a_points = cfg.a_points.unwrap_or(101);
    let p0_points = cfg.p0_points.unwrap_or(101);
    if a_points == 0 || p0_points == 0 {
        return Err(CliError::config("--a-points/--p0-points: grids need at least one point"));
    }
    cfg.a_points = Some(a_points);
    cfg.p0_points = Some(p0_points);
    let dir = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    cfg.out_dir = Some(dir.clone());
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::config(format!("--out-dir: cannot create {}: {e}", dir.display())))?;

    let table = sweep_bounds(&unit_grid(a_points), &unit_grid(p0_points))?;
    let header = csv_header("sweep", &cfg);
    let surface = dir.join("surface.csv");
    let reduction = dir.join("reduction.csv");
    let script = dir.join("bounds.gp");
    write_file(&surface, &format!("{header}{}", table.surface_csv()))?;
    write_file(&reduction, &format!("{header}{}", table.reduction_csv()))?;
    write_file(&script, &format!("{header}{}", gnuplot_script()))?;

    let body = json!({
        "files": [surface, reduction, script],
        "surface_rows": table.rows.len(),
        "reduction_rows": table.reductions.len(),
    });
    let text = document("sweep", &cfg, body)?;
    match &cfg.output {
        Some(path) => write_file(path, &text).map(|_| None),
        None => Ok(Some(text)),
    }
}

fn gnuplot_script() -> &'static str {
    r#"set datafile separator ','
set datafile commentschars '#'
set key autotitle columnhead
set terminal pngcairo size 900,700

set output 'bounds_surface.png'
set xlabel 'A'
set ylabel 'P(I=0)'
set zlabel 'nats'
set view 60,30
splot 'surface.csv' using 1:2:3 with points pt 7 ps 0.3 title 'lower bound', \
      'surface.csv' using 1:2:4 with points pt 7 ps 0.3 title 'upper bound'

set output 'bounds_reduction.png'
set ylabel 'nats'
plot 'reduction.csv' using 1:2 with lines lw 2 title 'max lower bound', \
     'reduction.csv' using 1:3 with lines lw 2 dt 2 title 'min upper bound', \
     'reduction.csv' using 1:4 with lines lw 1 lc rgb 'red' title 'Z-channel capacity'
"#
}

pub fn lna(mut cfg: RunConfig) -> Result<Option<String>, CliError> {
    let kind = cfg
        .model()?
        .ok_or_else(|| CliError::config("--file: lna runs on presets only"))?;
    let params = cfg.lna_params(kind)?;
    cfg.noise_variance = Some(params.noise_variance);
    let result = lna_analyze(kind, &params)?;
    let report = LnaReport::new(kind, &params, &result);
    emit(&cfg, document("lna", &cfg, report)?)
}

pub fn validate(cfg: RunConfig) -> Result<Option<String>, CliError> {
    let vc = cfg.validate_config()?;
    let report = validation_report(&vc)?;
    emit(&cfg, document("validate", &cfg, report)?)
}

pub fn parse(cfg: RunConfig) -> Result<Option<String>, CliError> {
    if cfg.preset.is_some() {
        return Err(CliError::config("--preset: parse reads a network file"));
    }
    let path = cfg.file.clone().ok_or_else(|| CliError::config("--file is required"))?;
    let net = read_network(&path)?;
    let derived: Vec<Value> = derive_conservation_laws(&net)
        .iter()
        .map(|l| {
            let terms: Vec<(String, u32)> = l
                .coefficients
                .iter()
                .map(|t| (net.species[t.species].name.clone(), t.coeff))
                .collect();
            json!({ "name": l.name, "coefficients": terms, "total": l.total })
        })
        .collect();
    let mut body = json!({
        "network": net.to_canonical(),
        "left_null_dimension": left_null_dimension(&net),
        "derived_laws": derived,
    });
    if let Some(totals) = net.declared_totals() {
        let space = enumerate_microstates(&net, &totals)?;
        body["state_count"] = json!(space.len());
        if let Some(out) = &cfg.states {
            write_file(out, &format!("{}{}", csv_header("parse", &cfg), space.to_csv(&net)))?;
        }
    } else if cfg.states.is_some() {
        return Err(CliError::config("--states: law totals must be nonnegative integers"));
    }
    emit(&cfg, document("parse", &cfg, body)?)
}
