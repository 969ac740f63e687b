//! Criterion benchmarks; see `benches/`. Run with `cargo bench -p deconv-bench`.
