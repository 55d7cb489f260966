use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use retro_core::channel::{sweep_bounds, unit_grid};
use retro_core::cme::stationary_from_initial;
use retro_core::crn::{ModelKind, ModelPreset, PresetRates};
use retro_core::lna::{lna_analyze, LnaParams};
use retro_core::ssa::{empirical_steady_pmf, SsaConfig};
use retro_core::state_space::Microstate;

fn preset(kind: ModelKind) -> ModelPreset {
    ModelPreset::new(kind, PresetRates::separated(1.0, 1.0, kind.targets()))
}

fn steady_state(c: &mut Criterion) {
    let mut group = c.benchmark_group("cme_steady_state");
    for kind in [
        ModelKind::IsolatedSiso,
        ModelKind::MimoDownstream { n: 2 },
        ModelKind::MacTwoSiso { n: 2, q: 1 },
    ] {
        let net = preset(kind).build().unwrap();
        let init = net.initial_counts().unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(kind.label()), &init, |b, init| {
            b.iter(|| stationary_from_initial(black_box(&net), init).unwrap())
        });
    }
    group.finish();
}

fn sweep(c: &mut Criterion) {
    let grid = unit_grid(101);
    c.bench_function("sweep_101x101", |b| b.iter(|| sweep_bounds(black_box(&grid), &grid).unwrap()));
}

fn ssa(c: &mut Criterion) {
    let net = preset(ModelKind::SisoDownstream { n: 1 }).build().unwrap();
    let init = net.initial_counts().unwrap();
    let (space, _) = stationary_from_initial(&net, &init).unwrap();
    let cfg = SsaConfig::with_samples(1, 10_000, 10.0, 1.0);
    c.bench_function("ssa_siso_downstream_1e4", |b| {
        b.iter(|| empirical_steady_pmf(&net, &space, &Microstate(init.clone()), black_box(&cfg)).unwrap())
    });
}

fn lna(c: &mut Criterion) {
    let kind = ModelKind::MimoDownstream { n: 2 };
    let params = LnaParams::defaults(kind);
    c.bench_function("lna_mimo_downstream_2", |b| b.iter(|| lna_analyze(kind, black_box(&params)).unwrap()));
}

criterion_group!(benches, steady_state, sweep, ssa, lna);
criterion_main!(benches);
