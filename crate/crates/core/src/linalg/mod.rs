//! Sparse storage, operator abstractions, dense factorizations and the
//! Lanczos top singular pair routine.

mod dense;
mod lanczos;
mod operator;
mod sparse;

pub use dense::{dense_svd, factor_singular_values, nuclear_norm_of_factors, thin_qr, DenseSvd};
pub use lanczos::{top_eigenvalue, top_singular_pair, SingularPair, DEFAULT_MAX_ITER, DEFAULT_TOL};
pub use operator::{FnOperator, LinearOperator, NegatedOperator};
pub use sparse::SparseMatrix;

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}
