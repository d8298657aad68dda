use nalgebra::DMatrix;

use super::SparseMatrix;

/// A linear map given only through its action and the action of its adjoint.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;

    /// `out = A v`, with `v.len() == ncols()` and `out.len() == nrows()`.
    fn apply(&self, v: &[f64], out: &mut [f64]);

    /// `out = Aᵀ u`, with `u.len() == nrows()` and `out.len() == ncols()`.
    fn apply_adjoint(&self, u: &[f64], out: &mut [f64]);
}

impl LinearOperator for DMatrix<f64> {
    fn nrows(&self) -> usize {
        self.nrows()
    }

    fn ncols(&self) -> usize {
        self.ncols()
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        // column-major: accumulate column by column
        out.iter_mut().for_each(|o| *o = 0.0);
        let m = self.nrows();
        let data = self.as_slice();
        for (j, &vj) in v.iter().enumerate() {
            if vj == 0.0 {
                continue;
            }
            let col = &data[j * m..(j + 1) * m];
            for (o, &a) in out.iter_mut().zip(col) {
                *o += a * vj;
            }
        }
    }

    fn apply_adjoint(&self, u: &[f64], out: &mut [f64]) {
        let m = self.nrows();
        let data = self.as_slice();
        for (j, o) in out.iter_mut().enumerate() {
            *o = super::dot(&data[j * m..(j + 1) * m], u);
        }
    }
}

impl LinearOperator for SparseMatrix {
    fn nrows(&self) -> usize {
        self.n_rows()
    }

    fn ncols(&self) -> usize {
        self.n_cols()
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        self.spmv_into(v, out);
    }

    fn apply_adjoint(&self, u: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        self.spmv_t_acc(u, 1.0, out);
    }
}

/// `-A` for any operator `A`.
pub struct NegatedOperator<'a, A: ?Sized>(pub &'a A);

impl<A: LinearOperator + ?Sized> LinearOperator for NegatedOperator<'_, A> {
    fn nrows(&self) -> usize {
        self.0.nrows()
    }

    fn ncols(&self) -> usize {
        self.0.ncols()
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        self.0.apply(v, out);
        out.iter_mut().for_each(|o| *o = -*o);
    }

    fn apply_adjoint(&self, u: &[f64], out: &mut [f64]) {
        self.0.apply_adjoint(u, out);
        out.iter_mut().for_each(|o| *o = -*o);
    }
}

/// Operator assembled from a pair of closures.
pub struct FnOperator<F, G> {
    rows: usize,
    cols: usize,
    forward: F,
    adjoint: G,
}

impl<F, G> FnOperator<F, G>
where
    F: Fn(&[f64], &mut [f64]),
    G: Fn(&[f64], &mut [f64]),
{
    pub fn new(rows: usize, cols: usize, forward: F, adjoint: G) -> Self {
        Self {
            rows,
            cols,
            forward,
            adjoint,
        }
    }
}

impl<F, G> LinearOperator for FnOperator<F, G>
where
    F: Fn(&[f64], &mut [f64]),
    G: Fn(&[f64], &mut [f64]),
{
    fn nrows(&self) -> usize {
        self.rows
    }

    fn ncols(&self) -> usize {
        self.cols
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        (self.forward)(v, out)
    }

    fn apply_adjoint(&self, u: &[f64], out: &mut [f64]) {
        (self.adjoint)(u, out)
    }
}
