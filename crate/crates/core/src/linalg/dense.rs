use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Thin singular value decomposition `A = U diag(s) Vᵀ` with `s` sorted
/// in non-increasing order.
#[derive(Clone, Debug)]
pub struct DenseSvd {
    pub u: DMatrix<f64>,
    pub s: Vec<f64>,
    pub v: DMatrix<f64>,
}

impl DenseSvd {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut us = self.u.clone();
        for (j, &s) in self.s.iter().enumerate() {
            us.column_mut(j).scale_mut(s);
        }
        us * self.v.transpose()
    }
}

/// Full (thin) SVD of a dense matrix, computed with faer.
pub fn dense_svd(a: &DMatrix<f64>) -> Result<DenseSvd> {
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(
            "dense_svd: matrix has non-finite entries".into(),
        ));
    }
    let (m, n) = a.shape();
    let p = m.min(n);
    if p == 0 {
        return Ok(DenseSvd {
            u: DMatrix::zeros(m, 0),
            s: Vec::new(),
            v: DMatrix::zeros(n, 0),
        });
    }
    let fa = faer::Mat::<f64>::from_fn(m, n, |i, j| a[(i, j)]);
    let svd = fa
        .thin_svd()
        .map_err(|e| Error::NotConverged(format!("dense_svd: {e:?}")))?;
    let sv = svd.S().column_vector();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]));
    let s = order.iter().map(|&i| sv[i].max(0.0)).collect();
    let (fu, fv) = (svd.U(), svd.V());
    let u = DMatrix::from_fn(m, p, |r, c| fu[(r, order[c])]);
    let v = DMatrix::from_fn(n, p, |r, c| fv[(r, order[c])]);
    Ok(DenseSvd { u, s, v })
}

/// Thin QR factorization `A = Q R` with `Q` having `min(m, n)` orthonormal columns.
pub fn thin_qr(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return (DMatrix::zeros(m, 0), DMatrix::zeros(0, n));
    }
    let qr = nalgebra::QR::new(a.clone());
    (qr.q(), qr.r())
}

/// Singular values of `U V` computed from an `r × r` core, without forming the product.
///
/// Returns the values in non-increasing order.
pub fn factor_singular_values(u: &DMatrix<f64>, v: &DMatrix<f64>) -> Vec<f64> {
    if u.ncols() == 0 || u.nrows() == 0 || v.ncols() == 0 {
        return Vec::new();
    }
    let (_, ru) = thin_qr(u);
    let (_, rv) = thin_qr(&v.transpose());
    let core = ru * rv.transpose();
    dense_svd(&core).map(|svd| svd.s).unwrap_or_default()
}

/// `‖U V‖_*` via thin factorizations of the factors.
pub fn nuclear_norm_of_factors(u: &DMatrix<f64>, v: &DMatrix<f64>) -> f64 {
    factor_singular_values(u, v).iter().sum()
}
