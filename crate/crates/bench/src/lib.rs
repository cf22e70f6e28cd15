//! Criterion benchmarks for cvqkd-core live under `benches/`.
