//! Application harnesses: data generation and problem assembly.

pub mod scs;
pub mod ssr;

pub use scs::{recovery_metrics, scs_generate, scs_problem, RecoveryMetrics, ScsConfig, ScsData};
pub use ssr::{ssr_generate, ssr_problem, SsrConfig, SsrData, SsrSystem};
