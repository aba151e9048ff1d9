//! Criterion benchmarks for the wignerkit crates; see `benches/`.
