//! Criterion benchmarks for the closed-loop hot paths; see `benches/`.
