//! Criterion benchmarks for the signal and model kernels of `tempora-core`; run with `cargo bench -p tempora-bench`.
