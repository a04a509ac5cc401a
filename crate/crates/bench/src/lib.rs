//! Criterion benchmarks live in `benches/decode.rs`; run them with
//! `cargo bench -p saffron-bench`.
