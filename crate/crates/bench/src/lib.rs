//! Criterion benchmarks for the solver and simulator live in `benches/`.
