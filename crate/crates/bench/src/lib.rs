//! Criterion benchmarks for the roughshe hot paths; see `benches/`.
