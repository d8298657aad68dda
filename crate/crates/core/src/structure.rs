//! Linear matrix structures and their constraint / recovery matrices.
//!
//! A structure maps a parameter vector `y` to an `M × N` matrix `Q(y)` in which
//! every entry is either one parameter or zero. It is encoded by the list of
//! column-major vectorization positions each parameter occupies. From that
//! encoding we build
//!
//! * `B`, with one `+1/−1` row per pair of consecutive positions sharing a
//!   parameter and one `+1` row per forced zero, so that `B vec(X) = 0` exactly
//!   when `X` lies in the image of `Q`;
//! * `C`, a left inverse of `y ↦ vec(Q(y))`. The projection variant averages
//!   all occurrences of a parameter and so realizes the orthogonal projection
//!   onto the image; the sparse variant reads the first occurrence only.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linalg::SparseMatrix;

/// How the recovery matrix `C` reads parameters back out of a matrix.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecoveryMode {
    /// Average over every occurrence (`1/|Q_k|` weights).
    #[default]
    Projection,
    /// Single `1` at the first occurrence.
    Sparse,
}

/// Support-set encoding of a linear structure.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct StructureSpec {
    rows: usize,
    cols: usize,
    supports: Vec<Vec<usize>>,
    zero_positions: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct RawSpec {
    rows: usize,
    cols: usize,
    supports: Vec<Vec<usize>>,
    #[serde(default)]
    zero_positions: Vec<usize>,
}

impl TryFrom<RawSpec> for StructureSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        StructureSpec::new(raw.rows, raw.cols, raw.supports, raw.zero_positions)
    }
}

impl From<StructureSpec> for RawSpec {
    fn from(spec: StructureSpec) -> Self {
        RawSpec {
            rows: spec.rows,
            cols: spec.cols,
            supports: spec.supports,
            zero_positions: spec.zero_positions,
        }
    }
}

fn positive(name: &str, value: usize) -> Result<()> {
    if value == 0 {
        return Err(Error::InvalidArgument(format!("{name} must be at least 1")));
    }
    Ok(())
}

impl StructureSpec {
    /// Validates and builds a spec. Support lists and zero positions are sorted.
    pub fn new(
        rows: usize,
        cols: usize,
        mut supports: Vec<Vec<usize>>,
        mut zero_positions: Vec<usize>,
    ) -> Result<Self> {
        positive("rows", rows)?;
        positive("cols", cols)?;
        if supports.is_empty() {
            return Err(Error::InvalidArgument("structure has no parameters".into()));
        }
        let size = rows * cols;
        let mut seen = vec![false; size];
        let mut claim = |pos: usize, what: &str| -> Result<()> {
            if pos >= size {
                return Err(Error::InvalidArgument(format!(
                    "{what} position {pos} outside a {rows}x{cols} matrix"
                )));
            }
            if std::mem::replace(&mut seen[pos], true) {
                return Err(Error::InvalidArgument(format!(
                    "position {pos} is claimed more than once"
                )));
            }
            Ok(())
        };
        for (k, support) in supports.iter_mut().enumerate() {
            if support.is_empty() {
                return Err(Error::InvalidArgument(format!("parameter {k} has empty support")));
            }
            support.sort_unstable();
            for &pos in support.iter() {
                claim(pos, "support")?;
            }
        }
        zero_positions.sort_unstable();
        for &pos in &zero_positions {
            claim(pos, "zero")?;
        }
        Ok(Self {
            rows,
            cols,
            supports,
            zero_positions,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// `M · N`, the length of `vec(X)`.
    pub fn size(&self) -> usize {
        self.rows * self.cols
    }

    pub fn n_params(&self) -> usize {
        self.supports.len()
    }

    pub fn supports(&self) -> &[Vec<usize>] {
        &self.supports
    }

    pub fn zero_positions(&self) -> &[usize] {
        &self.zero_positions
    }

    /// Parameter index stored at each vectorization position, if any.
    pub fn owners(&self) -> Vec<Option<usize>> {
        let mut owner = vec![None; self.size()];
        for (k, support) in self.supports.iter().enumerate() {
            for &pos in support {
                owner[pos] = Some(k);
            }
        }
        owner
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Scalar Hankel structure `H_{j,k}(y)` with `y ∈ R^{j+k−1}`.
pub fn hankel_spec(j: usize, k: usize) -> Result<StructureSpec> {
    block_hankel_spec(1, 1, j, k)
}

/// Block-Hankel structure `H_{m,n,j,k}(y)` with `j + k − 1` blocks of size `m × n`.
///
/// Parameters are flattened block by block, each block in column-major order,
/// so block `t` owns parameters `t·m·n .. (t+1)·m·n`.
pub fn block_hankel_spec(m: usize, n: usize, j: usize, k: usize) -> Result<StructureSpec> {
    for (name, v) in [("m", m), ("n", n), ("j", j), ("k", k)] {
        positive(name, v)?;
    }
    let rows = m * j;
    let cols = n * k;
    let block = m * n;
    let mut supports = vec![Vec::new(); block * (j + k - 1)];
    // visiting positions in column-major order keeps every support sorted
    for c in 0..cols {
        let (bc, b) = (c / n, c % n);
        for r in 0..rows {
            let (br, a) = (r / m, r % m);
            let param = (br + bc) * block + a + b * m;
            supports[param].push(r + c * rows);
        }
    }
    StructureSpec::new(rows, cols, supports, Vec::new())
}

/// Two-fold (enhanced) Hankel structure of an `n1 × n2` signal with pencil
/// parameters `k1`, `k2`.
///
/// The result has `k1 · k2` rows and `(n1 − k1 + 1)(n2 − k2 + 1)` columns; it is
/// a `k1 × (n1 − k1 + 1)` block-Hankel matrix whose block `l` is the
/// `k2 × (n2 − k2 + 1)` Hankel matrix of signal row `l`. Parameters follow
/// the column-major vectorization of the signal.
pub fn two_fold_hankel_spec(n1: usize, n2: usize, k1: usize, k2: usize) -> Result<StructureSpec> {
    for (name, v) in [("n1", n1), ("n2", n2), ("k1", k1), ("k2", k2)] {
        positive(name, v)?;
    }
    if k1 > n1 || k2 > n2 {
        return Err(Error::InvalidArgument(format!(
            "pencil ({k1}, {k2}) exceeds signal size ({n1}, {n2})"
        )));
    }
    let outer_cols = n1 - k1 + 1;
    let inner_cols = n2 - k2 + 1;
    let rows = k1 * k2;
    let cols = outer_cols * inner_cols;
    let mut supports = vec![Vec::new(); n1 * n2];
    for col in 0..cols {
        let (b, d) = (col / inner_cols, col % inner_cols);
        for row in 0..rows {
            let (a, c) = (row / k2, row % k2);
            let param = (a + b) + (c + d) * n1;
            supports[param].push(row + col * rows);
        }
    }
    StructureSpec::new(rows, cols, supports, Vec::new())
}

/// Structure preserving matrix `B`.
///
/// Rows are ordered by parameter, then by position within the support; forced
/// zeros come last.
pub fn build_b(spec: &StructureSpec) -> SparseMatrix {
    let pairs: usize = spec.supports.iter().map(|s| s.len() - 1).sum();
    let n_rows = pairs + spec.zero_positions.len();
    let mut row_offsets = Vec::with_capacity(n_rows + 1);
    let mut col_indices = Vec::with_capacity(2 * pairs + spec.zero_positions.len());
    let mut values = Vec::with_capacity(col_indices.capacity());
    row_offsets.push(0);
    for support in &spec.supports {
        for w in support.windows(2) {
            col_indices.extend_from_slice(&[w[0], w[1]]);
            values.extend_from_slice(&[1.0, -1.0]);
            row_offsets.push(col_indices.len());
        }
    }
    for &z in &spec.zero_positions {
        col_indices.push(z);
        values.push(1.0);
        row_offsets.push(col_indices.len());
    }
    SparseMatrix::from_csr(n_rows, spec.size(), row_offsets, col_indices, values)
        .expect("validated spec yields well-formed B")
}

/// Recovery matrix `C` with `C vec(Q(y)) = y`.
pub fn build_c(spec: &StructureSpec, mode: RecoveryMode) -> SparseMatrix {
    let n = spec.n_params();
    let mut row_offsets = Vec::with_capacity(n + 1);
    let mut col_indices = Vec::new();
    let mut values = Vec::new();
    row_offsets.push(0);
    for support in &spec.supports {
        match mode {
            RecoveryMode::Projection => {
                let w = 1.0 / support.len() as f64;
                col_indices.extend_from_slice(support);
                values.extend(std::iter::repeat_n(w, support.len()));
            }
            RecoveryMode::Sparse => {
                col_indices.push(support[0]);
                values.push(1.0);
            }
        }
        row_offsets.push(col_indices.len());
    }
    SparseMatrix::from_csr(n, spec.size(), row_offsets, col_indices, values)
        .expect("validated spec yields well-formed C")
}

/// `Q(y)` as a dense matrix.
pub fn apply_structure(spec: &StructureSpec, y: &[f64]) -> Result<DMatrix<f64>> {
    check_len("apply_structure parameters", spec.n_params(), y.len())?;
    let mut x = DMatrix::zeros(spec.rows, spec.cols);
    let data = x.as_mut_slice();
    for (support, &value) in spec.supports.iter().zip(y) {
        for &pos in support {
            data[pos] = value;
        }
    }
    Ok(x)
}

/// Projection-mode recovery `C_proj vec(X)` without building `C`.
pub fn average_supports(spec: &StructureSpec, x: &[f64]) -> Result<Vec<f64>> {
    check_len("average_supports input", spec.size(), x.len())?;
    Ok(spec
        .supports
        .iter()
        .map(|s| s.iter().map(|&p| x[p]).sum::<f64>() / s.len() as f64)
        .collect())
}

/// Frobenius-nearest member of the image of `Q`, i.e. `Q(C_proj vec(X))`.
pub fn project_to_image(spec: &StructureSpec, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if x.shape() != (spec.rows, spec.cols) {
        return Err(Error::InvalidArgument(format!(
            "project_to_image: expected {}x{}, got {}x{}",
            spec.rows,
            spec.cols,
            x.nrows(),
            x.ncols()
        )));
    }
    let y = average_supports(spec, x.as_slice())?;
    apply_structure(spec, &y)
}
