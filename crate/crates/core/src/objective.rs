//! The penalized objective
//!
//! ```text
//! φ(X) = f(X) + μ‖X‖_*,   f(X) = ½‖AC·vec(X) − b‖² + (λ/2)‖B·vec(X)‖²
//! ```
//!
//! where `AC` composes the observation operator with the recovery matrix. The
//! iterate is always held as a factor pair `X = U V`; the auxiliary function
//! `ψ(U, V) = f(UV) + (μ/2)(‖U‖² + ‖V‖²)` upper-bounds `φ(UV)`.

use nalgebra::DMatrix;

use crate::error::{check_len, Error, Result};
use crate::linalg::{dot, norm_sq, nuclear_norm_of_factors, LinearOperator, SparseMatrix};
use crate::rng::{gaussian_vec, stream_rng};
use crate::structure::{build_b, build_c, RecoveryMode, StructureSpec};

/// Low-rank factors `U` (`M × r`) and `V` (`r × N`) of the iterate `X = U V`.
#[derive(Clone, Debug, PartialEq)]
pub struct FactorPair {
    pub u: DMatrix<f64>,
    pub v: DMatrix<f64>,
}

impl FactorPair {
    pub fn new(u: DMatrix<f64>, v: DMatrix<f64>) -> Result<Self> {
        check_len("factor inner dimension", u.ncols(), v.nrows())?;
        if u.iter().chain(v.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("factors must be finite".into()));
        }
        Ok(Self { u, v })
    }

    /// Rank-zero factors encoding `X = 0`.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            u: DMatrix::zeros(rows, 0),
            v: DMatrix::zeros(0, cols),
        }
    }

    /// Balanced rank-one factors of the all-ones matrix.
    pub fn ones(rows: usize, cols: usize) -> Self {
        // ‖U‖² = ‖V‖² = sqrt(MN) = ‖1 1ᵀ‖_*
        let a = (cols as f64 / rows as f64).powf(0.25);
        Self {
            u: DMatrix::from_element(rows, 1, a),
            v: DMatrix::from_element(1, cols, 1.0 / a),
        }
    }

    /// Balanced factors of `σ · u vᵀ`.
    pub fn rank_one(sigma: f64, u: &[f64], v: &[f64]) -> Self {
        let s = sigma.max(0.0).sqrt();
        Self {
            u: DMatrix::from_iterator(u.len(), 1, u.iter().map(|x| x * s)),
            v: DMatrix::from_iterator(1, v.len(), v.iter().map(|x| x * s)),
        }
    }

    pub fn rows(&self) -> usize {
        self.u.nrows()
    }

    pub fn cols(&self) -> usize {
        self.v.ncols()
    }

    pub fn rank(&self) -> usize {
        self.u.ncols()
    }

    /// `U V` as a dense matrix.
    pub fn product(&self) -> DMatrix<f64> {
        if self.rank() == 0 {
            return DMatrix::zeros(self.rows(), self.cols());
        }
        &self.u * &self.v
    }

    /// `½(‖U‖²_F + ‖V‖²_F)`, an upper bound on `‖U V‖_*`.
    pub fn surrogate(&self) -> f64 {
        0.5 * (self.u.norm_squared() + self.v.norm_squared())
    }

    pub fn nuclear_norm(&self) -> f64 {
        nuclear_norm_of_factors(&self.u, &self.v)
    }

    /// Multiplies both factors by `s`, scaling the product by `s²`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            u: &self.u * s,
            v: &self.v * s,
        }
    }

    /// Appends the column `col` to `U` and the row `row` to `V`.
    pub fn augmented(&self, col: &[f64], row: &[f64]) -> Self {
        let r = self.rank();
        let mut u = self.u.clone().resize_horizontally(r + 1, 0.0);
        u.column_mut(r).copy_from_slice(col);
        let mut v = self.v.clone().resize_vertically(r + 1, 0.0);
        for (j, &x) in row.iter().enumerate() {
            v[(r, j)] = x;
        }
        Self { u, v }
    }

    /// `‖U V − other.U other.V‖_F` from Gram matrices, without forming either product.
    pub fn distance(&self, other: &FactorPair) -> f64 {
        let uu = self.u.transpose() * &self.u;
        let vv = &self.v * self.v.transpose();
        let ou = other.u.transpose() * &other.u;
        let ov = &other.v * other.v.transpose();
        let cu = self.u.transpose() * &other.u;
        let cv = &self.v * other.v.transpose();
        let a = uu.component_mul(&vv).sum();
        let b = ou.component_mul(&ov).sum();
        let c = cu.component_mul(&cv).sum();
        (a + b - 2.0 * c).max(0.0).sqrt()
    }

    /// Re-expresses the product in balanced SVD form, dropping singular values
    /// at or below `drop_below`. The surrogate never increases.
    pub fn recompressed(&self, drop_below: f64) -> Self {
        let (m, n) = (self.rows(), self.cols());
        if self.rank() == 0 {
            return self.clone();
        }
        let (qu, ru) = crate::linalg::thin_qr(&self.u);
        let (qv, rv) = crate::linalg::thin_qr(&self.v.transpose());
        let core = ru * rv.transpose();
        let Ok(svd) = crate::linalg::dense_svd(&core) else {
            return self.clone();
        };
        let keep: Vec<usize> = (0..svd.s.len()).filter(|&i| svd.s[i] > drop_below).collect();
        let mut u = DMatrix::zeros(m, keep.len());
        let mut vt = DMatrix::zeros(n, keep.len());
        for (c, &i) in keep.iter().enumerate() {
            let s = svd.s[i].sqrt();
            u.column_mut(c).copy_from(&(&qu * svd.u.column(i) * s));
            vt.column_mut(c).copy_from(&(&qv * svd.v.column(i) * s));
        }
        Self {
            u,
            v: vt.transpose(),
        }
    }
}

/// Unit-nuclear-norm direction `Z = u vᵀ` with unit vectors `u`, `v`.
#[derive(Clone, Debug)]
pub struct RankOne {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl RankOne {
    /// Column-major `vec(u vᵀ)`.
    pub fn vec(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.u.len() * self.v.len());
        for &vj in &self.v {
            out.extend(self.u.iter().map(|ui| ui * vj));
        }
        out
    }
}

/// Quantities that determine the closed-form step along `Z`.
#[derive(Clone, Copy, Debug)]
pub struct LineSearchInputs {
    pub eta: f64,
    /// `⟨Z, ∇f(X̃)⟩` at the shrunk iterate `X̃ = (1 − η) X`.
    pub slope: f64,
    /// `‖AC vec(Z)‖² + λ‖B vec(Z)‖²`.
    pub curvature: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct LineSearchResult {
    pub theta: f64,
    /// Value of the upper model `h` at `theta`.
    pub h_min: f64,
    pub inputs: LineSearchInputs,
}

/// Cached products at one point `x = vec(X)`.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub x: Vec<f64>,
    pub ac_x: Vec<f64>,
    pub b_x: Vec<f64>,
    /// `½‖AC x − b‖²`
    pub square_loss: f64,
    /// `f(x)`
    pub f: f64,
}

/// Assembled penalized problem. Immutable after assembly.
#[derive(Clone, Debug)]
pub struct PenaltyProblem {
    spec: StructureSpec,
    recovery: RecoveryMode,
    observation: SparseMatrix,
    target: Vec<f64>,
    b: SparseMatrix,
    c: SparseMatrix,
    ac: SparseMatrix,
    /// `ACᵀ b`, reused by every gradient.
    ac_t_target: Vec<f64>,
    lambda: f64,
    mu: f64,
}

impl PenaltyProblem {
    /// Assembles the problem with the projection recovery matrix.
    pub fn assemble(
        spec: &StructureSpec,
        observation: SparseMatrix,
        target: Vec<f64>,
        lambda: f64,
        mu: f64,
    ) -> Result<Self> {
        Self::assemble_with(spec, observation, target, lambda, mu, RecoveryMode::Projection)
    }

    pub fn assemble_with(
        spec: &StructureSpec,
        observation: SparseMatrix,
        target: Vec<f64>,
        lambda: f64,
        mu: f64,
        recovery: RecoveryMode,
    ) -> Result<Self> {
        check_len("observation columns vs parameters", spec.n_params(), observation.n_cols())?;
        check_len("target length vs observation rows", observation.n_rows(), target.len())?;
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("lambda must be >= 0, got {lambda}")));
        }
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidArgument(format!("mu must be > 0, got {mu}")));
        }
        if target.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidArgument("target has non-finite entries".into()));
        }
        let b = build_b(spec);
        let c = build_c(spec, recovery);
        let ac = observation.matmul(&c)?;

        let mut rng = stream_rng(0x5eed, 0);
        for _ in 0..5 {
            let probe = gaussian_vec(&mut rng, spec.size());
            let direct = ac.spmv(&probe)?;
            let composed = observation.spmv(&c.spmv(&probe)?)?;
            let scale = 1.0 + composed.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if direct.iter().zip(&composed).any(|(a, b)| (a - b).abs() > 1e-12 * scale) {
                return Err(Error::InvalidArgument(
                    "composed observation operator failed the probe check".into(),
                ));
            }
        }
        let ac_t_target = ac.spmv_t(&target)?;
        Ok(Self {
            spec: spec.clone(),
            recovery,
            observation,
            target,
            b,
            c,
            ac,
            ac_t_target,
            lambda,
            mu,
        })
    }

    /// Same problem with a different penalty weight.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("lambda must be >= 0, got {lambda}")));
        }
        Ok(Self {
            lambda,
            ..self.clone()
        })
    }

    pub fn spec(&self) -> &StructureSpec {
        &self.spec
    }

    pub fn recovery(&self) -> RecoveryMode {
        self.recovery
    }

    pub fn rows(&self) -> usize {
        self.spec.rows()
    }

    pub fn cols(&self) -> usize {
        self.spec.cols()
    }

    /// `M · N`
    pub fn size(&self) -> usize {
        self.spec.size()
    }

    pub fn observation(&self) -> &SparseMatrix {
        &self.observation
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn b(&self) -> &SparseMatrix {
        &self.b
    }

    pub fn c(&self) -> &SparseMatrix {
        &self.c
    }

    pub fn ac(&self) -> &SparseMatrix {
        &self.ac
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    fn check_factors(&self, factors: &FactorPair) -> Result<()> {
        check_len("factor rows", self.rows(), factors.rows())?;
        check_len("factor cols", self.cols(), factors.cols())
    }

    /// Evaluates and caches the products needed by `f` and its gradient.
    pub fn evaluate(&self, x: Vec<f64>) -> Result<Evaluation> {
        check_len("iterate length", self.size(), x.len())?;
        let mut ac_x = vec![0.0; self.ac.n_rows()];
        self.ac.spmv_into(&x, &mut ac_x);
        let mut b_x = vec![0.0; self.b.n_rows()];
        self.b.spmv_into(&x, &mut b_x);
        let square_loss = 0.5
            * ac_x
                .iter()
                .zip(&self.target)
                .map(|(a, t)| (a - t).powi(2))
                .sum::<f64>();
        let f = square_loss + 0.5 * self.lambda * norm_sq(&b_x);
        Ok(Evaluation {
            x,
            ac_x,
            b_x,
            square_loss,
            f,
        })
    }

    pub fn evaluate_factors(&self, factors: &FactorPair) -> Result<Evaluation> {
        self.check_factors(factors)?;
        self.evaluate(factors.product().as_slice().to_vec())
    }

    /// `∇f` from cached products, as a dense `M × N` matrix.
    pub fn gradient(&self, eval: &Evaluation) -> DMatrix<f64> {
        let residual: Vec<f64> = eval.ac_x.iter().zip(&self.target).map(|(a, t)| a - t).collect();
        let mut g = vec![0.0; self.size()];
        self.ac.spmv_t_acc(&residual, 1.0, &mut g);
        if self.lambda != 0.0 {
            self.b.spmv_t_acc(&eval.b_x, self.lambda, &mut g);
        }
        DMatrix::from_vec(self.rows(), self.cols(), g)
    }

    /// `f(x) = ½‖AC x − b‖² + (λ/2)‖B x‖²`
    pub fn f_value(&self, x: &[f64]) -> Result<f64> {
        Ok(self.evaluate(x.to_vec())?.f)
    }

    /// `½‖AC x − b‖²`
    pub fn square_loss(&self, x: &[f64]) -> Result<f64> {
        Ok(self.evaluate(x.to_vec())?.square_loss)
    }

    /// `∇f(U V) = mat(ACᵀ(AC x − b) + λ BᵀB x)`
    pub fn grad_f(&self, factors: &FactorPair) -> Result<DMatrix<f64>> {
        let eval = self.evaluate_factors(factors)?;
        Ok(self.gradient(&eval))
    }

    /// `ψ(U, V) = f(UV) + (μ/2)(‖U‖² + ‖V‖²)`
    pub fn psi_value(&self, factors: &FactorPair) -> Result<f64> {
        Ok(self.evaluate_factors(factors)?.f + self.mu * factors.surrogate())
    }

    /// `φ(UV) = f(UV) + μ‖UV‖_*`, with the nuclear norm taken from a small core SVD.
    pub fn phi_value(&self, factors: &FactorPair) -> Result<f64> {
        Ok(self.evaluate_factors(factors)?.f + self.mu * factors.nuclear_norm())
    }

    /// `φ` of a dense iterate (baseline and tests).
    pub fn phi_dense(&self, x: &DMatrix<f64>) -> Result<f64> {
        let nuc: f64 = crate::linalg::dense_svd(x)?.s.iter().sum();
        Ok(self.f_value(x.as_slice())? + self.mu * nuc)
    }

    /// `AC vec(Z)` and `B vec(Z)` for a rank-one direction.
    fn direction_products(&self, z: &RankOne) -> (Vec<f64>, Vec<f64>) {
        let zv = z.vec();
        let mut ac_z = vec![0.0; self.ac.n_rows()];
        self.ac.spmv_into(&zv, &mut ac_z);
        let mut b_z = vec![0.0; self.b.n_rows()];
        self.b.spmv_into(&zv, &mut b_z);
        (ac_z, b_z)
    }

    /// Step along `Z` from `(1 − η) X`, given the evaluation at `X` itself.
    ///
    /// Uses linearity: `AC((1−η)x) = (1−η)AC x` and likewise for `B`, so no new
    /// product of the factors is formed.
    pub(crate) fn line_search_from(
        &self,
        eval: &Evaluation,
        surrogate: f64,
        z: &RankOne,
        eta: f64,
    ) -> Result<LineSearchResult> {
        let keep = 1.0 - eta;
        let (ac_z, b_z) = self.direction_products(z);
        let shrunk_residual: Vec<f64> = eval
            .ac_x
            .iter()
            .zip(&self.target)
            .map(|(a, t)| keep * a - t)
            .collect();
        let slope = dot(&ac_z, &shrunk_residual) + self.lambda * keep * dot(&b_z, &eval.b_x);
        let curvature = norm_sq(&ac_z) + self.lambda * norm_sq(&b_z);
        let f_shrunk =
            0.5 * norm_sq(&shrunk_residual) + 0.5 * self.lambda * keep * keep * norm_sq(&eval.b_x);
        closed_form_step(
            LineSearchInputs {
                eta,
                slope,
                curvature,
            },
            f_shrunk,
            keep * surrogate,
            self.mu,
        )
    }

    /// Minimizes the upper model
    /// `h(θ) = f(X̃ + θZ) + μ·½(‖Ũ‖² + ‖Ṽ‖²) + μθ` over `θ ≥ 0`,
    /// where `(Ũ, Ṽ)` are the already shrunk factors `√(1−η)(U, V)` so that
    /// `X̃ = (1 − η) X` and the middle term equals `μ(1 − η)τ`.
    pub fn line_search_theta(
        &self,
        shrunk: &FactorPair,
        z: &RankOne,
        eta: f64,
    ) -> Result<LineSearchResult> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::InvalidArgument(format!("eta must lie in (0, 1], got {eta}")));
        }
        check_len("direction rows", self.rows(), z.u.len())?;
        check_len("direction cols", self.cols(), z.v.len())?;
        let eval = self.evaluate_factors(shrunk)?;
        // evaluate at the shrunk point itself (eta = 0 relative to it)
        let mut result = self.line_search_from(&eval, shrunk.surrogate(), z, 0.0)?;
        result.inputs.eta = eta;
        Ok(result)
    }

    /// `h(θ)` for given inputs, for checking the model directly.
    pub fn h_value(&self, shrunk: &FactorPair, z: &RankOne, theta: f64) -> Result<f64> {
        self.check_factors(shrunk)?;
        let x: Vec<f64> = shrunk
            .product()
            .iter()
            .zip(z.vec())
            .map(|(a, b)| a + theta * b)
            .collect();
        Ok(self.f_value(&x)? + self.mu * shrunk.surrogate() + self.mu * theta)
    }

    /// Hessian of `f` as an operator on `vec(X)`: `ACᵀAC + λ BᵀB`.
    pub fn hessian(&self) -> SmoothHessian<'_> {
        SmoothHessian { prob: self }
    }

    /// Smallest `μ` for which `X = 0` is optimal: `‖mat(ACᵀ b)‖₂`.
    pub fn zero_solution_threshold(&self) -> Result<f64> {
        let g = DMatrix::from_column_slice(self.rows(), self.cols(), &self.ac_t_target);
        Ok(crate::linalg::top_singular_pair(&g, 1e-10, 1000, 0)?.sigma)
    }
}

fn closed_form_step(
    inputs: LineSearchInputs,
    f_shrunk: f64,
    surrogate_shrunk: f64,
    mu: f64,
) -> Result<LineSearchResult> {
    let LineSearchInputs {
        slope, curvature, ..
    } = inputs;
    let pull = slope + mu;
    let theta = if pull >= 0.0 {
        0.0
    } else if curvature > 0.0 {
        -pull / curvature
    } else {
        return Err(Error::UnboundedDirection { slope, curvature });
    };
    let h_min = f_shrunk + theta * slope + 0.5 * theta * theta * curvature + mu * surrogate_shrunk + mu * theta;
    Ok(LineSearchResult {
        theta,
        h_min,
        inputs,
    })
}

/// Operator form of `ACᵀAC + λ BᵀB`.
pub struct SmoothHessian<'a> {
    prob: &'a PenaltyProblem,
}

impl LinearOperator for SmoothHessian<'_> {
    fn nrows(&self) -> usize {
        self.prob.size()
    }

    fn ncols(&self) -> usize {
        self.prob.size()
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let p = self.prob;
        let mut t = vec![0.0; p.ac.n_rows()];
        p.ac.spmv_into(v, &mut t);
        out.iter_mut().for_each(|o| *o = 0.0);
        p.ac.spmv_t_acc(&t, 1.0, out);
        if p.lambda != 0.0 {
            let mut s = vec![0.0; p.b.n_rows()];
            p.b.spmv_into(v, &mut s);
            p.b.spmv_t_acc(&s, p.lambda, out);
        }
    }

    fn apply_adjoint(&self, u: &[f64], out: &mut [f64]) {
        self.apply(u, out)
    }
}
