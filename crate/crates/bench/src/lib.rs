//! Criterion benchmarks for corrlab; see `benches/`.
