//! Accelerated proximal gradient with singular value thresholding.
//!
//! Works on the dense `M × N` iterate and takes a full SVD every iteration,
//! which is exactly the cost the factored solver avoids. It doubles as a
//! high-precision reference optimum in tests.

use std::time::Instant;

use nalgebra::DMatrix;

use crate::error::{check_len, Error, Result};
use crate::gcg::{rank_estimate, rank_estimate_relative};
use crate::linalg::{dense_svd, top_eigenvalue};
use crate::objective::PenaltyProblem;
use crate::structure::apply_structure;
use crate::trace::{IterRecord, SolveTrace, StopReason};

#[derive(Clone, Debug, PartialEq)]
pub struct ApgConfig {
    pub max_iter: usize,
    /// Stop when `‖X_k − X_{k−1}‖_F ≤ tol · max(1, ‖X_k‖_F)`.
    pub tol: f64,
    /// Multiplier applied to the estimated Lipschitz constant.
    pub lipschitz_margin: f64,
    pub eig_tol: f64,
    pub eig_max_iter: usize,
    pub seed: u64,
    pub track_rank: bool,
    pub rank_threshold: f64,
    pub relative_rank: bool,
}

impl Default for ApgConfig {
    fn default() -> Self {
        Self::oracle()
    }
}

impl ApgConfig {
    /// Long run used as a reference optimum.
    pub fn oracle() -> Self {
        Self {
            max_iter: 5000,
            tol: 1e-12,
            lipschitz_margin: 1.05,
            eig_tol: 1e-10,
            eig_max_iter: 2000,
            seed: 0,
            track_rank: false,
            rank_threshold: 1e-3,
            relative_rank: false,
        }
    }

    /// Short run for side-by-side comparison with the factored solver.
    pub fn comparison() -> Self {
        Self {
            max_iter: 100,
            tol: 1e-6,
            track_rank: true,
            ..Self::oracle()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        if !(self.tol >= 0.0) || !(self.eig_tol > 0.0) || !(self.rank_threshold > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if !(self.lipschitz_margin >= 1.0) {
            return Err(Error::Config(format!(
                "lipschitz_margin must be at least 1, got {}",
                self.lipschitz_margin
            )));
        }
        Ok(())
    }
}

/// Proximal map of `τ‖·‖_*`: soft-thresholds the singular values.
pub fn svt(x: &DMatrix<f64>, tau: f64) -> Result<DMatrix<f64>> {
    Ok(svt_with_rank(x, tau)?.0)
}

fn svt_with_rank(x: &DMatrix<f64>, tau: f64) -> Result<(DMatrix<f64>, usize, f64)> {
    if !(tau >= 0.0) {
        return Err(Error::InvalidArgument(format!("svt threshold must be >= 0, got {tau}")));
    }
    let svd = dense_svd(x)?;
    let mut out = DMatrix::zeros(x.nrows(), x.ncols());
    let mut rank = 0;
    let mut nuclear = 0.0;
    for (i, &s) in svd.s.iter().enumerate() {
        let shrunk = s - tau;
        if shrunk <= 0.0 {
            break;
        }
        rank += 1;
        nuclear += shrunk;
        out += svd.u.column(i) * svd.v.column(i).transpose() * shrunk;
    }
    Ok((out, rank, nuclear))
}

/// Lipschitz constant of `∇f`, the top eigenvalue of `(SC)ᵀSC + λBᵀB`.
pub fn lipschitz_constant(prob: &PenaltyProblem, config: &ApgConfig) -> Result<f64> {
    let hess = prob.hessian();
    let l = top_eigenvalue(&hess, config.eig_tol, config.eig_max_iter, config.seed)
        .map_err(|e| Error::Config(format!("Lipschitz estimate failed: {e}")))?;
    Ok(l * config.lipschitz_margin)
}

/// FISTA on `φ`, starting from `init` (zero when absent).
pub fn solve_apg(
    prob: &PenaltyProblem,
    config: &ApgConfig,
    init: Option<&DMatrix<f64>>,
) -> Result<(DMatrix<f64>, SolveTrace)> {
    config.validate()?;
    let (m, n) = (prob.rows(), prob.cols());
    let mut x = match init {
        Some(x0) => {
            check_len("init rows", m, x0.nrows())?;
            check_len("init cols", n, x0.ncols())?;
            x0.clone()
        }
        None => DMatrix::zeros(m, n),
    };
    let start = Instant::now();
    let lip = lipschitz_constant(prob, config)?;
    if !(lip > 0.0) {
        return Err(Error::Config("smooth part has a zero Hessian".into()));
    }
    let step = 1.0 / lip;
    let tau = prob.mu() * step;
    let mut trace = SolveTrace::new();
    let mut y = x.clone();
    let mut t = 1.0f64;

    for k in 1..=config.max_iter {
        let eval_y = prob.evaluate(y.as_slice().to_vec())?;
        let grad = prob.gradient(&eval_y);
        let (x_next, rank, nuclear) = svt_with_rank(&(&y - grad * step), tau)?;
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let diff = &x_next - &x;
        y = &x_next + &diff * ((t - 1.0) / t_next);
        t = t_next;
        let change = diff.norm();
        x = x_next;

        let eval_x = prob.evaluate(x.as_slice().to_vec())?;
        let phi = eval_x.f + prob.mu() * nuclear;
        let rank_est = if config.track_rank {
            let cx = prob.c().spmv(x.as_slice())?;
            let s = dense_svd(&apply_structure(prob.spec(), &cx)?)?.s;
            Some(if config.relative_rank {
                rank_estimate_relative(&s, config.rank_threshold)
            } else {
                rank_estimate(&s, config.rank_threshold)
            })
        } else {
            None
        };
        trace.records.push(IterRecord {
            iter: k,
            wall_time: start.elapsed().as_secs_f64(),
            phi,
            f_smooth: eval_x.f,
            square_loss: eval_x.square_loss,
            psi: None,
            theta: None,
            sigma_top: None,
            rank_estimate: rank_est,
            factor_rank: rank,
        });
        if !phi.is_finite() {
            trace.stop_reason = StopReason::Aborted;
            trace.wall_time = start.elapsed().as_secs_f64();
            return Err(Error::Diverged {
                iter: k,
                reason: "non-finite objective".into(),
                trace: Box::new(trace),
            });
        }
        if change <= config.tol * x.norm().max(1.0) {
            trace.stop_reason = StopReason::IterateChange;
            break;
        }
    }
    trace.wall_time = start.elapsed().as_secs_f64();
    Ok((x, trace))
}
