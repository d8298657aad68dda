//! Shared fixtures for the criterion benches.

use strucrank::bench::BenchSize;

/// Scalar Hankel sizes with `MN = 2.5·10³, 10⁴, 4·10⁴`, small enough for
/// criterion's repeated sampling.
pub fn sizes() -> Vec<BenchSize> {
    vec![
        BenchSize::new(1, 1, 25, 100),
        BenchSize::new(1, 1, 50, 200),
        BenchSize::new(1, 1, 100, 400),
    ]
}
