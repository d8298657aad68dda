use crate::error::{check_len, Error, Result};

/// Compressed sparse row matrix with `f64` entries.
///
/// Column indices are strictly increasing within each row.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from raw CSR arrays, validating every invariant.
    pub fn from_csr(
        n_rows: usize,
        n_cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        check_len("csr row_offsets", n_rows + 1, row_offsets.len())?;
        check_len("csr values", col_indices.len(), values.len())?;
        if row_offsets[0] != 0 || row_offsets[n_rows] != col_indices.len() {
            return Err(Error::InvalidArgument(
                "row_offsets must start at 0 and end at nnz".into(),
            ));
        }
        for r in 0..n_rows {
            let (lo, hi) = (row_offsets[r], row_offsets[r + 1]);
            if lo > hi {
                return Err(Error::InvalidArgument(format!(
                    "row_offsets decrease at row {r}"
                )));
            }
            let cols = &col_indices[lo..hi];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidArgument(format!(
                    "column indices not strictly increasing in row {r}"
                )));
            }
            if cols.last().is_some_and(|&c| c >= n_cols) {
                return Err(Error::InvalidArgument(format!(
                    "column index out of range in row {r}"
                )));
            }
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Builds a matrix from `(row, col, value)` triplets. Duplicates are summed.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut sorted = triplets.to_vec();
        for &(r, c, _) in &sorted {
            if r >= n_rows || c >= n_cols {
                return Err(Error::InvalidArgument(format!(
                    "triplet ({r}, {c}) outside {n_rows}x{n_cols}"
                )));
            }
        }
        sorted.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_offsets = vec![0usize; n_rows + 1];
        let mut col_indices = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            row_offsets[r + 1] += 1;
            col_indices.push(c);
            values.push(v);
            last = Some((r, c));
        }
        for r in 0..n_rows {
            row_offsets[r + 1] += row_offsets[r];
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Matrix with no stored entries.
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            row_offsets: vec![0; n_rows + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of one row.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.row_offsets[r], self.row_offsets[r + 1]);
        (&self.col_indices[lo..hi], &self.values[lo..hi])
    }

    /// `y = A v`
    pub fn spmv(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len("spmv input", self.n_cols, v.len())?;
        let mut out = vec![0.0; self.n_rows];
        self.spmv_into(v, &mut out);
        Ok(out)
    }

    /// `y = Aᵀ u`
    pub fn spmv_t(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_len("spmv_t input", self.n_rows, u.len())?;
        let mut out = vec![0.0; self.n_cols];
        self.spmv_t_acc(u, 1.0, &mut out);
        Ok(out)
    }

    /// Unchecked `out = A v`; lengths are the caller's responsibility.
    pub(crate) fn spmv_into(&self, v: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            *o = cols.iter().zip(vals).map(|(&c, &a)| a * v[c]).sum();
        }
    }

    /// Unchecked `out += alpha · Aᵀ u`.
    pub(crate) fn spmv_t_acc(&self, u: &[f64], alpha: f64, out: &mut [f64]) {
        for (r, &ur) in u.iter().enumerate() {
            if ur == 0.0 {
                continue;
            }
            let s = alpha * ur;
            let (cols, vals) = self.row(r);
            for (&c, &a) in cols.iter().zip(vals) {
                out[c] += s * a;
            }
        }
    }

    /// Sparse product `self · rhs`.
    pub fn matmul(&self, rhs: &SparseMatrix) -> Result<SparseMatrix> {
        check_len("sparse matmul inner dimension", self.n_cols, rhs.n_rows)?;
        let mut row_offsets = Vec::with_capacity(self.n_rows + 1);
        row_offsets.push(0);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        // dense accumulator with a touched list
        let mut acc = vec![0.0; rhs.n_cols];
        let mut mark = vec![false; rhs.n_cols];
        let mut touched: Vec<usize> = Vec::new();
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            for (&k, &a) in cols.iter().zip(vals) {
                let (rc, rv) = rhs.row(k);
                for (&c, &b) in rc.iter().zip(rv) {
                    if !mark[c] {
                        mark[c] = true;
                        touched.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                col_indices.push(c);
                values.push(acc[c]);
                acc[c] = 0.0;
                mark[c] = false;
            }
            touched.clear();
            row_offsets.push(col_indices.len());
        }
        Ok(SparseMatrix {
            n_rows: self.n_rows,
            n_cols: rhs.n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &c in &self.col_indices {
            counts[c + 1] += 1;
        }
        for c in 0..self.n_cols {
            counts[c + 1] += counts[c];
        }
        let mut next = counts.clone();
        let mut col_indices = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                let slot = next[c];
                col_indices[slot] = r;
                values[slot] = v;
                next[c] += 1;
            }
        }
        SparseMatrix {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_offsets: counts,
            col_indices,
            values,
        }
    }

    /// Row-major dense copy, mainly for tests and small diagnostics.
    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut out = nalgebra::DMatrix::zeros(self.n_rows, self.n_cols);
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                out[(r, c)] = v;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand::Rng;

    #[test]
    fn identity_is_neutral() {
        let id = SparseMatrix::identity(5);
        let v = vec![1.0, -2.0, 3.5, 0.0, 7.0];
        assert_eq!(id.spmv(&v).unwrap(), v);
        assert_eq!(id.spmv_t(&v).unwrap(), v);
    }

    #[test]
    fn zero_row_matrix_gives_empty_vector() {
        let a = SparseMatrix::zeros(0, 4);
        assert!(a.spmv(&[1.0, 2.0, 3.0, 4.0]).unwrap().is_empty());
        assert_eq!(a.spmv_t(&[]).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let a = SparseMatrix::identity(3);
        assert!(matches!(
            a.spmv(&[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(a.spmv_t(&[1.0; 4]).is_err());
    }

    #[test]
    fn agrees_with_dense_product() {
        let mut rng = stream_rng(11, 0);
        let mut trip = Vec::new();
        for r in 0..10 {
            for c in 0..7 {
                if rng.random::<f64>() < 0.35 {
                    trip.push((r, c, rng.random::<f64>() * 2.0 - 1.0));
                }
            }
        }
        let a = SparseMatrix::from_triplets(10, 7, &trip).unwrap();
        let dense = a.to_dense();
        let v: Vec<f64> = (0..7).map(|_| rng.random::<f64>()).collect();
        let u: Vec<f64> = (0..10).map(|_| rng.random::<f64>()).collect();
        let got = a.spmv(&v).unwrap();
        let want = &dense * nalgebra::DVector::from_column_slice(&v);
        for i in 0..10 {
            assert!((got[i] - want[i]).abs() <= 1e-14);
        }
        let got_t = a.spmv_t(&u).unwrap();
        let want_t = dense.transpose() * nalgebra::DVector::from_column_slice(&u);
        for i in 0..7 {
            assert!((got_t[i] - want_t[i]).abs() <= 1e-14);
        }
    }

    #[test]
    fn triplet_duplicates_are_summed() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (0, 1, 2.0), (1, 0, -1.0)])
            .unwrap();
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.to_dense()[(0, 1)], 3.0);
    }

    #[test]
    fn matmul_and_transpose_match_dense() {
        let a = SparseMatrix::from_triplets(3, 4, &[(0, 0, 1.0), (0, 3, 2.0), (2, 1, -1.0)])
            .unwrap();
        let b = SparseMatrix::from_triplets(4, 2, &[(0, 1, 3.0), (3, 0, 1.0), (1, 1, 4.0)])
            .unwrap();
        let prod = a.matmul(&b).unwrap();
        assert_eq!(prod.to_dense(), a.to_dense() * b.to_dense());
        assert_eq!(a.transpose().to_dense(), a.to_dense().transpose());
    }

    #[test]
    fn malformed_csr_is_rejected() {
        assert!(SparseMatrix::from_csr(1, 3, vec![0, 2], vec![2, 1], vec![1.0, 1.0]).is_err());
        assert!(SparseMatrix::from_csr(1, 3, vec![0, 1], vec![3], vec![1.0]).is_err());
        assert!(SparseMatrix::from_csr(1, 3, vec![0, 1], vec![2], vec![1.0]).is_ok());
    }
}
