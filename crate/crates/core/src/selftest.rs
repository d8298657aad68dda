//! Fast in-process invariant checks, also exposed through the command line.

use nalgebra::DMatrix;
use rand::Rng;

use crate::baseline::{solve_apg, ApgConfig};
use crate::error::Result;
use crate::gcg::{solve, GcgConfig};
use crate::linalg::{dense_svd, top_singular_pair, SparseMatrix};
use crate::objective::{FactorPair, PenaltyProblem, RankOne};
use crate::rng::{gaussian_vec, stream_rng};
use crate::structure::{
    apply_structure, block_hankel_spec, build_b, build_c, hankel_spec, project_to_image,
    two_fold_hankel_spec, RecoveryMode, StructureSpec,
};

#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// A random Hankel, block-Hankel or two-fold Hankel spec with `M·N ≤ max_size`.
pub fn random_spec(seed: u64, max_size: usize) -> Result<StructureSpec> {
    let mut rng = stream_rng(seed, 100);
    loop {
        let spec = match rng.random_range(0..3) {
            0 => hankel_spec(rng.random_range(1..=12), rng.random_range(1..=12))?,
            1 => block_hankel_spec(
                rng.random_range(1..=3),
                rng.random_range(1..=3),
                rng.random_range(1..=5),
                rng.random_range(1..=5),
            )?,
            _ => {
                let (n1, n2) = (rng.random_range(1..=8), rng.random_range(1..=8));
                two_fold_hankel_spec(n1, n2, rng.random_range(1..=n1), rng.random_range(1..=n2))?
            }
        };
        if spec.size() <= max_size {
            return Ok(spec);
        }
    }
}

/// Random penalized problem: random spec, a random subset of observed
/// parameters with random weights, random data and weights `λ`, `μ`.
pub fn random_problem(seed: u64, max_size: usize) -> Result<PenaltyProblem> {
    let spec = random_spec(seed, max_size)?;
    let mut rng = stream_rng(seed, 101);
    let p = spec.n_params();
    let mut triplets = Vec::new();
    for param in 0..p {
        if rng.random::<f64>() < 0.7 {
            triplets.push((triplets.len(), param, 0.5 + rng.random::<f64>()));
        }
    }
    let s = SparseMatrix::from_triplets(triplets.len(), p, &triplets)?;
    let target = gaussian_vec(&mut rng, triplets.len());
    let lambda = 0.5 + 4.5 * rng.random::<f64>();
    let mu = 0.01 + 0.5 * rng.random::<f64>();
    let mode = if rng.random::<bool>() {
        RecoveryMode::Projection
    } else {
        RecoveryMode::Sparse
    };
    PenaltyProblem::assemble_with(&spec, s, target, lambda, mu, mode)
}

/// Random factors of the given rank.
pub fn random_factors(rows: usize, cols: usize, rank: usize, seed: u64) -> FactorPair {
    let mut rng = stream_rng(seed, 102);
    FactorPair {
        u: DMatrix::from_vec(rows, rank, gaussian_vec(&mut rng, rows * rank)),
        v: DMatrix::from_vec(rank, cols, gaussian_vec(&mut rng, rank * cols)),
    }
}

/// Random unit rank-one direction.
pub fn random_direction(rows: usize, cols: usize, seed: u64) -> RankOne {
    let mut rng = stream_rng(seed, 103);
    let unit = |mut v: Vec<f64>| {
        let n = crate::linalg::norm(&v);
        v.iter_mut().for_each(|x| *x /= n);
        v
    };
    RankOne {
        u: unit(gaussian_vec(&mut rng, rows)),
        v: unit(gaussian_vec(&mut rng, cols)),
    }
}

fn check(name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> CheckResult {
    match f() {
        Ok((passed, detail)) => CheckResult {
            name,
            passed,
            detail,
        },
        Err(e) => CheckResult {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn structure_roundtrip() -> Result<(bool, String)> {
    let mut worst_b = 0.0f64;
    let mut worst_c = 0.0f64;
    for seed in 0..40 {
        let spec = random_spec(seed, 400)?;
        let y = gaussian_vec(&mut stream_rng(seed, 104), spec.n_params());
        let q = apply_structure(&spec, &y)?;
        let bq = build_b(&spec).spmv(q.as_slice())?;
        worst_b = bq.iter().fold(worst_b, |m, v| m.max(v.abs()));
        for mode in [RecoveryMode::Projection, RecoveryMode::Sparse] {
            let cq = build_c(&spec, mode).spmv(q.as_slice())?;
            worst_c = cq.iter().zip(&y).fold(worst_c, |m, (a, b)| m.max((a - b).abs()));
        }
    }
    Ok((
        worst_b == 0.0 && worst_c <= 1e-12,
        format!("max |B vec Q(y)| = {worst_b:e}, max |C vec Q(y) - y| = {worst_c:e}"),
    ))
}

fn projection_idempotent() -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let spec = random_spec(seed, 200)?;
        let x = DMatrix::from_vec(
            spec.rows(),
            spec.cols(),
            gaussian_vec(&mut stream_rng(seed, 105), spec.size()),
        );
        let p1 = project_to_image(&spec, &x)?;
        let p2 = project_to_image(&spec, &p1)?;
        worst = worst.max((p2 - &p1).norm());
    }
    Ok((worst <= 1e-12, format!("max ‖P(P(X)) − P(X)‖ = {worst:e}")))
}

fn lanczos_matches_dense() -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for (i, (m, n)) in [(30, 45), (45, 30), (7, 50)].into_iter().enumerate() {
        let a = DMatrix::from_vec(m, n, gaussian_vec(&mut stream_rng(i as u64, 106), m * n));
        let p = top_singular_pair(&a, 1e-10, 500, i as u64)?;
        let s = dense_svd(&a)?.s[0];
        worst = worst.max((p.sigma - s).abs() / s);
    }
    Ok((worst <= 1e-8, format!("max relative error {worst:e}")))
}

fn gradient_finite_difference() -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for seed in 0..10 {
        let prob = random_problem(seed, 100)?;
        let x = gaussian_vec(&mut stream_rng(seed, 107), prob.size());
        let g = prob.gradient(&prob.evaluate(x.clone())?);
        let h = 1e-5;
        let mut fd = vec![0.0; x.len()];
        for i in 0..x.len() {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[i] += h;
            xm[i] -= h;
            fd[i] = (prob.f_value(&xp)? - prob.f_value(&xm)?) / (2.0 * h);
        }
        let diff: f64 = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        worst = worst.max(diff / g.norm().max(1e-12));
    }
    Ok((worst <= 1e-5, format!("max relative error {worst:e}")))
}

fn line_search_upper_bound() -> Result<(bool, String)> {
    let mut worst = f64::NEG_INFINITY;
    for seed in 0..10 {
        let prob = random_problem(seed, 100)?;
        let factors = random_factors(prob.rows(), prob.cols(), 2, seed);
        let eta = 2.0 / (seed as f64 + 3.0);
        let shrunk = factors.scaled((1.0 - eta).sqrt());
        let z = random_direction(prob.rows(), prob.cols(), seed);
        let ls = prob.line_search_theta(&shrunk, &z, eta)?;
        for t in 0..10 {
            let theta = (2.0 * ls.theta + 1.0) * t as f64 / 9.0;
            let x = shrunk.product() + DMatrix::from_vec(prob.rows(), prob.cols(), z.vec()) * theta;
            let gap = prob.phi_dense(&x)? - prob.h_value(&shrunk, &z, theta)?;
            worst = worst.max(gap);
        }
    }
    Ok((worst <= 1e-10, format!("max φ − h = {worst:e}")))
}

fn gcg_agrees_with_apg() -> Result<(bool, String)> {
    let spec = hankel_spec(5, 6)?;
    let p = spec.n_params();
    let y: Vec<f64> = (0..p).map(|i| 0.9f64.powi(i as i32) * (0.7 * i as f64).cos()).collect();
    let prob = PenaltyProblem::assemble(&spec, SparseMatrix::identity(p), y, 1.0, 0.05)?;
    let (_, apg) = solve_apg(&prob, &ApgConfig::oracle(), None)?;
    let (_, gcg) = solve(&prob, &GcgConfig::gcgls(), FactorPair::ones(prob.rows(), prob.cols()))?;
    let (a, g) = (apg.records.last().map_or(f64::NAN, |r| r.phi), gcg.records.last().map_or(f64::NAN, |r| r.phi));
    let rel = (g - a).abs() / a;
    Ok((rel <= 1e-2 && g >= a - 1e-9, format!("gcgls φ = {g:.8}, apg φ = {a:.8}")))
}

/// Runs every check and reports each outcome.
pub fn run_selftest() -> Vec<CheckResult> {
    vec![
        check("structure roundtrip", structure_roundtrip),
        check("projection idempotent", projection_idempotent),
        check("lanczos vs dense svd", lanczos_matches_dense),
        check("gradient finite difference", gradient_finite_difference),
        check("line search upper bound", line_search_upper_bound),
        check("gcgls agrees with apg", gcg_agrees_with_apg),
    ]
}
