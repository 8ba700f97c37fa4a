//! Criterion benchmarks for `hens-core`; see `benches/core.rs`.
