//! Criterion benchmarks for retro-core; see `benches/`.
