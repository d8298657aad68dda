//! Generalized conditional gradient with low-rank local search.
//!
//! Each iteration takes the top singular pair `(u, v)` of `−∇f(U V)`, scales
//! the current factors by `√(1 − η_k)` with `η_k = 2/(k+1)`, appends the atom
//! `√θ_k (u, v)` where `θ_k` minimizes the quadratic upper model, and then
//! improves `ψ(U, V)` by gradient descent on the factors. The iterate is never
//! stored as a dense matrix.

use std::borrow::Cow;
use std::time::Instant;

use nalgebra::DMatrix;

use crate::error::{check_len, Error, Result};
use crate::linalg::{dense_svd, top_singular_pair, NegatedOperator};
use crate::objective::{Evaluation, FactorPair, PenaltyProblem, RankOne};
use crate::structure::apply_structure;
use crate::trace::{IterRecord, SolveTrace, StopReason};

/// Geometric increase of the penalty weight during a solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Homotopy {
    pub factor: f64,
    pub every: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GcgConfig {
    pub max_iter: usize,
    /// Stop when `‖x_k − x_{k−1}‖_F` drops below this; zero disables the test.
    pub tol_x: f64,
    /// Stop when `|φ_k − φ_{k−1}| / |min(φ_k, φ_{k−1})|` drops below this;
    /// zero disables the test.
    pub tol_obj: f64,
    /// Gradient steps per local search; zero disables it.
    pub local_search_max_steps: usize,
    /// Local search stops once a step gains less than this fraction of the
    /// total decrease it has achieved so far.
    pub local_search_rel_improvement_floor: f64,
    pub local_search_grad_floor: f64,
    pub enforce_monotone_psi: bool,
    pub lanczos_tol: f64,
    pub lanczos_max_iter: usize,
    pub seed: u64,
    /// Rebalance and truncate the factors every this many iterations.
    pub recompress_every: Option<usize>,
    /// Record the numerical rank of `Q(C vec(X))` each iteration (dense SVD).
    pub track_rank: bool,
    pub rank_threshold: f64,
    /// Interpret `rank_threshold` relative to the largest singular value.
    pub relative_rank: bool,
    pub homotopy: Option<Homotopy>,
}

impl Default for GcgConfig {
    fn default() -> Self {
        Self {
            max_iter: 100,
            tol_x: 1e-3,
            tol_obj: 1e-3,
            local_search_max_steps: 30,
            local_search_rel_improvement_floor: 1e-4,
            local_search_grad_floor: 1e-10,
            enforce_monotone_psi: true,
            lanczos_tol: crate::linalg::DEFAULT_TOL,
            lanczos_max_iter: crate::linalg::DEFAULT_MAX_ITER,
            seed: 0,
            recompress_every: Some(10),
            track_rank: true,
            rank_threshold: 1e-3,
            relative_rank: false,
            homotopy: None,
        }
    }
}

impl GcgConfig {
    /// Plain conditional gradient, no local search.
    pub fn gcg() -> Self {
        Self {
            local_search_max_steps: 0,
            ..Self::default()
        }
    }

    /// Conditional gradient with local search.
    pub fn gcgls() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("tol_x", self.tol_x), ("tol_obj", self.tol_obj)] {
            if !(v >= 0.0) {
                return Err(Error::Config(format!("{name} must be non-negative, got {v}")));
            }
        }
        for (name, v) in [("lanczos_tol", self.lanczos_tol), ("rank_threshold", self.rank_threshold)] {
            if !(v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        if self.local_search_rel_improvement_floor < 0.0 || self.local_search_grad_floor < 0.0 {
            return Err(Error::Config("local search floors must be non-negative".into()));
        }
        if let Some(h) = self.homotopy {
            if !(h.factor >= 1.0) || h.every == 0 {
                return Err(Error::Config("homotopy needs factor >= 1 and every >= 1".into()));
            }
        }
        Ok(())
    }

    fn budget(&self) -> LocalSearchBudget {
        LocalSearchBudget {
            max_steps: self.local_search_max_steps,
            rel_improvement_floor: self.local_search_rel_improvement_floor,
            grad_norm_floor: self.local_search_grad_floor,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalSearchBudget {
    pub max_steps: usize,
    pub rel_improvement_floor: f64,
    pub grad_norm_floor: f64,
}

impl Default for LocalSearchBudget {
    fn default() -> Self {
        GcgConfig::default().budget()
    }
}

#[derive(Clone, Debug)]
pub struct LocalSearchOutcome {
    pub factors: FactorPair,
    /// `ψ` at the initializer followed by `ψ` after each accepted step.
    pub psi_history: Vec<f64>,
}

impl LocalSearchOutcome {
    pub fn psi(&self) -> f64 {
        *self.psi_history.last().expect("history holds the initial value")
    }
}

const ARMIJO_C: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 50;

/// Descends `ψ(U, V)` from the initializer with Armijo backtracking.
///
/// The result never has a larger `ψ` than the initializer.
pub fn local_search(
    prob: &PenaltyProblem,
    init: FactorPair,
    budget: &LocalSearchBudget,
) -> Result<LocalSearchOutcome> {
    let eval = prob.evaluate_factors(&init)?;
    Ok(descend(prob, init, eval, budget).0)
}

fn descend(
    prob: &PenaltyProblem,
    init: FactorPair,
    init_eval: Evaluation,
    budget: &LocalSearchBudget,
) -> (LocalSearchOutcome, Evaluation) {
    let mu = prob.mu();
    let mut factors = init;
    let mut eval = init_eval;
    let mut psi = eval.f + mu * factors.surrogate();
    let mut history = vec![psi];
    if factors.rank() == 0 {
        return (
            LocalSearchOutcome {
                factors,
                psi_history: history,
            },
            eval,
        );
    }
    let mut step = 1.0;
    for _ in 0..budget.max_steps {
        let grad = prob.gradient(&eval);
        let g_u = &grad * factors.v.transpose() + &factors.u * mu;
        let g_v = factors.u.transpose() * &grad + &factors.v * mu;
        let g_sq = g_u.norm_squared() + g_v.norm_squared();
        if g_sq.sqrt() <= budget.grad_norm_floor || !g_sq.is_finite() {
            break;
        }
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let cand = FactorPair {
                u: &factors.u - &g_u * step,
                v: &factors.v - &g_v * step,
            };
            let Ok(cand_eval) = prob.evaluate_factors(&cand) else {
                break;
            };
            let cand_psi = cand_eval.f + mu * cand.surrogate();
            if cand_psi.is_finite() && cand_psi <= psi - ARMIJO_C * step * g_sq {
                accepted = Some((cand, cand_eval, cand_psi));
                break;
            }
            step *= 0.5;
        }
        let Some((cand, cand_eval, cand_psi)) = accepted else {
            break;
        };
        let gain = psi - cand_psi;
        factors = cand;
        eval = cand_eval;
        psi = cand_psi;
        history.push(psi);
        step *= 2.0;
        if gain < budget.rel_improvement_floor * (history[0] - psi) {
            break;
        }
    }
    (
        LocalSearchOutcome {
            factors,
            psi_history: history,
        },
        eval,
    )
}

/// `y = C vec(U V)` from factor inner products, without forming `U V`.
pub fn recover_y(prob: &PenaltyProblem, factors: &FactorPair) -> Result<Vec<f64>> {
    check_len("factor rows", prob.rows(), factors.rows())?;
    check_len("factor cols", prob.cols(), factors.cols())?;
    let m = prob.rows();
    let r = factors.rank();
    let c = prob.c();
    let ut = factors.u.transpose(); // r × M, columns are rows of U
    Ok((0..c.n_rows())
        .map(|k| {
            let (cols, vals) = c.row(k);
            cols.iter()
                .zip(vals)
                .map(|(&pos, &w)| {
                    let (i, j) = (pos % m, pos / m);
                    let urow = &ut.as_slice()[i * r..(i + 1) * r];
                    let vcol = &factors.v.as_slice()[j * r..(j + 1) * r];
                    w * crate::linalg::dot(urow, vcol)
                })
                .sum()
        })
        .collect())
}

/// Number of singular values strictly above `threshold`.
pub fn rank_estimate(singular_values: &[f64], threshold: f64) -> usize {
    singular_values.iter().filter(|&&s| s > threshold).count()
}

/// Number of singular values above `threshold · σ_max`.
pub fn rank_estimate_relative(singular_values: &[f64], threshold: f64) -> usize {
    let top = singular_values.iter().copied().fold(0.0, f64::max);
    rank_estimate(singular_values, threshold * top)
}

/// Singular values of the structured matrix `Q(C vec(U V))`.
pub fn structured_singular_values(prob: &PenaltyProblem, factors: &FactorPair) -> Result<Vec<f64>> {
    let y = recover_y(prob, factors)?;
    let q: DMatrix<f64> = apply_structure(prob.spec(), &y)?;
    Ok(dense_svd(&q)?.s)
}

fn lanczos_seed(seed: u64, iter: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(crate::rng::streams::LANCZOS_BASE + iter as u64)
}

fn relative_change(a: f64, b: f64) -> f64 {
    let diff = (a - b).abs();
    if diff == 0.0 {
        return 0.0;
    }
    diff / a.min(b).abs()
}

/// Runs the solver from `init` and returns the final factors with the full trace.
pub fn solve(
    prob: &PenaltyProblem,
    config: &GcgConfig,
    init: FactorPair,
) -> Result<(FactorPair, SolveTrace)> {
    config.validate()?;
    check_len("init rows", prob.rows(), init.rows())?;
    check_len("init cols", prob.cols(), init.cols())?;
    let start = Instant::now();
    let budget = config.budget();
    let mut problem: Cow<'_, PenaltyProblem> = Cow::Borrowed(prob);
    let mut trace = SolveTrace::new();

    let mut factors = init;
    let mut eval = problem.evaluate_factors(&factors)?;
    let mut psi = eval.f + problem.mu() * factors.surrogate();
    let mut phi_prev = eval.f + problem.mu() * factors.nuclear_norm();

    for k in 1..=config.max_iter {
        if let Some(h) = config.homotopy {
            if k > 1 && (k - 1) % h.every == 0 {
                problem = Cow::Owned(problem.with_lambda(problem.lambda() * h.factor)?);
                eval = problem.evaluate(eval.x)?;
                psi = eval.f + problem.mu() * factors.surrogate();
                phi_prev = eval.f + problem.mu() * factors.nuclear_norm();
            }
        }
        let prob = problem.as_ref();
        let mu = prob.mu();
        let grad = prob.gradient(&eval);
        let pair = top_singular_pair(
            &NegatedOperator(&grad),
            config.lanczos_tol,
            config.lanczos_max_iter,
            lanczos_seed(config.seed, k),
        )?;
        let sigma_top = pair.sigma;
        let z = RankOne {
            u: pair.u,
            v: pair.v,
        };

        let previous = factors.clone();
        let mut eta = 2.0 / (k as f64 + 1.0);
        let mut step: Option<(FactorPair, Evaluation, f64, f64)> = None;
        for _ in 0..=4 {
            let ls = prob.line_search_from(&eval, factors.surrogate(), &z, eta)?;
            let mut cand = factors.scaled((1.0 - eta).sqrt());
            if ls.theta > 0.0 {
                let s = ls.theta.sqrt();
                let col: Vec<f64> = z.u.iter().map(|x| x * s).collect();
                let row: Vec<f64> = z.v.iter().map(|x| x * s).collect();
                cand = cand.augmented(&col, &row);
            }
            let cand_eval = prob.evaluate_factors(&cand)?;
            let (outcome, cand_eval) = descend(prob, cand, cand_eval, &budget);
            let cand_psi = outcome.psi();
            if !config.enforce_monotone_psi || cand_psi <= psi {
                step = Some((outcome.factors, cand_eval, cand_psi, ls.theta));
                break;
            }
            eta *= 0.5;
        }
        let theta = match step {
            Some((f, e, p, theta)) => {
                factors = f;
                eval = e;
                psi = p;
                theta
            }
            None => 0.0,
        };

        if config.recompress_every.is_some_and(|n| k % n == 0) && factors.rank() > 0 {
            let packed = factors.recompressed(1e-10);
            let packed_eval = prob.evaluate_factors(&packed)?;
            let packed_psi = packed_eval.f + mu * packed.surrogate();
            if packed_psi <= psi {
                factors = packed;
                eval = packed_eval;
                psi = packed_psi;
            }
        }

        let phi = eval.f + mu * factors.nuclear_norm();
        let rank = if config.track_rank {
            let s = structured_singular_values(prob, &factors)?;
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
            f_smooth: eval.f,
            square_loss: eval.square_loss,
            psi: Some(psi),
            theta: Some(theta),
            sigma_top: Some(sigma_top),
            rank_estimate: rank,
            factor_rank: factors.rank(),
        });
        if !phi.is_finite() || !psi.is_finite() {
            trace.stop_reason = StopReason::Aborted;
            trace.wall_time = start.elapsed().as_secs_f64();
            return Err(Error::Diverged {
                iter: k,
                reason: "non-finite objective".into(),
                trace: Box::new(trace),
            });
        }

        if factors.distance(&previous) < config.tol_x {
            trace.stop_reason = StopReason::IterateChange;
            break;
        }
        if relative_change(phi, phi_prev) < config.tol_obj {
            trace.stop_reason = StopReason::ObjectiveChange;
            break;
        }
        phi_prev = phi;
    }
    trace.wall_time = start.elapsed().as_secs_f64();
    Ok((factors, trace))
}
