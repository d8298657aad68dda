//! Structured low-rank approximation via a penalized nuclear-norm objective.
//!
//! A structured matrix `Q(y)` is encoded by a [`StructureSpec`]: each parameter
//! `y_k` owns a set of positions of an `M × N` matrix, and some positions may be
//! forced to zero. The solvers minimize
//!
//! ```text
//! φ(X) = ½‖S C vec(X) − b‖² + (λ/2)‖B vec(X)‖² + μ‖X‖_*
//! ```
//!
//! where `B vec(X) = 0` exactly when `X` has the required structure and `C`
//! recovers the parameters from `X`. [`gcg::solve`] keeps `X = U V` in factored
//! form; [`baseline::solve_apg`] is a dense proximal-gradient reference.

pub mod apps;
pub mod baseline;
pub mod bench;
pub mod error;
pub mod gcg;
pub mod linalg;
pub mod objective;
pub mod rng;
pub mod selftest;
pub mod structure;
pub mod trace;

pub use apps::{ScsConfig, ScsData, SsrConfig, SsrData};
pub use baseline::{solve_apg, svt, ApgConfig};
pub use error::{Error, Result};
pub use gcg::{local_search, recover_y, solve, GcgConfig, LocalSearchBudget};
pub use linalg::SparseMatrix;
pub use objective::{FactorPair, PenaltyProblem, RankOne};
pub use structure::{RecoveryMode, StructureSpec};
pub use trace::{IterRecord, SolveTrace, StopReason, Summary};
