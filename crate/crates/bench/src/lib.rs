//! Empty by design: this crate exists to host the criterion benchmarks in
//! `benches/`; everything they measure lives in `entrec-core`.
