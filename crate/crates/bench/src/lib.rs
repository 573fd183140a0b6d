//! Criterion benchmarks for the wclab pipeline live under `benches/`.
