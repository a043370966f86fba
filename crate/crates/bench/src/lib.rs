//! Criterion benchmarks for kernel construction, verification, sampling and
//! Fredholm determinants. Run with `cargo bench -p detpp-bench`.
