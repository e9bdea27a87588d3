//! Criterion benchmarks for the simulator live in `benches/`; run them with
//! `cargo bench -p musicmarket-bench`.
