//! Benchmark-only crate. The measurements live in
//! `benches/factorizations.rs`; run them with `cargo bench -p defectkit-bench`.
