//! Criterion benchmarks for `txcap-core` live under `benches/`.
