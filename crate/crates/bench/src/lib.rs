//! Benchmark-only crate; the measurements live in `benches/kernels.rs`.
//! There is no library surface here — the crate exists so the criterion
//! targets get their own dependency set and compile profile.
