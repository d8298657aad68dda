//! Top singular triplet by Golub–Kahan–Lanczos bidiagonalization.
//!
//! Each cycle builds a Krylov basis of at most `MAX_KRYLOV` vectors with full
//! reorthogonalization, takes the leading Ritz triplet of the small
//! bidiagonal matrix, and restarts from the leading right Ritz vector until
//! both residuals `‖A v − σ u‖` and `‖Aᵀ u − σ v‖` fall below `tol · σ`.

use nalgebra::DMatrix;

use super::{dense_svd, dot, norm, LinearOperator};
use crate::error::{Error, Result};
use crate::rng::{gaussian_vec, stream_rng};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 500;

const MAX_KRYLOV: usize = 40;
const START_RETRIES: usize = 3;

/// Leading singular triplet `A v ≈ σ u`.
#[derive(Clone, Debug)]
pub struct SingularPair {
    pub sigma: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// Both residuals met the requested tolerance.
    pub converged: bool,
    /// The operator annihilated every start vector; `sigma` is zero and the
    /// vectors are arbitrary unit vectors.
    pub degenerate: bool,
    /// Number of Lanczos steps (pairs of operator applications) used.
    pub steps: usize,
}

fn orthogonalize(w: &mut [f64], basis: &[Vec<f64>]) {
    // two passes of classical Gram-Schmidt
    for _ in 0..2 {
        for b in basis {
            let h = dot(b, w);
            if h != 0.0 {
                w.iter_mut().zip(b).for_each(|(x, &bi)| *x -= h * bi);
            }
        }
    }
}

fn unit(len: usize) -> Vec<f64> {
    let mut e = vec![0.0; len];
    if len > 0 {
        e[0] = 1.0;
    }
    e
}

pub fn top_singular_pair<A: LinearOperator + ?Sized>(
    a: &A,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<SingularPair> {
    let (m, n) = (a.nrows(), a.ncols());
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument(format!(
            "top_singular_pair needs nonzero dimensions, got {m}x{n}"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol must be positive, got {tol}")));
    }
    let kmax = m.min(n).min(MAX_KRYLOV);
    let mut rng = stream_rng(seed, 0);

    // Find a start vector not annihilated by A.
    let mut start = None;
    for _ in 0..START_RETRIES {
        let mut q = gaussian_vec(&mut rng, n);
        let nq = norm(&q);
        q.iter_mut().for_each(|x| *x /= nq);
        let mut p = vec![0.0; m];
        a.apply(&q, &mut p);
        if norm(&p) > 0.0 {
            start = Some(q);
            break;
        }
    }
    let Some(mut q0) = start else {
        return Ok(SingularPair {
            sigma: 0.0,
            u: unit(m),
            v: unit(n),
            converged: true,
            degenerate: true,
            steps: 0,
        });
    };

    let mut steps = 0usize;
    let mut best: Option<SingularPair> = None;
    let mut av = vec![0.0; m];
    let mut atu = vec![0.0; n];

    while steps < max_iter.max(1) {
        let mut right: Vec<Vec<f64>> = Vec::with_capacity(kmax);
        let mut left: Vec<Vec<f64>> = Vec::with_capacity(kmax);
        let mut alphas: Vec<f64> = Vec::with_capacity(kmax);
        let mut betas: Vec<f64> = Vec::with_capacity(kmax);
        let mut q = q0.clone();
        let mut scale = 0.0f64;

        for j in 0..kmax {
            right.push(q.clone());
            let mut p = vec![0.0; m];
            a.apply(&q, &mut p);
            if j > 0 {
                let b = betas[j - 1];
                p.iter_mut().zip(&left[j - 1]).for_each(|(x, &l)| *x -= b * l);
            }
            orthogonalize(&mut p, &left);
            let alpha = norm(&p);
            steps += 1;
            if alpha <= 1e-14 * scale || alpha == 0.0 {
                // A q_j lies in span(left), so keeping q_j in the right basis
                // with the extra column β_{j-1} still gives an exact relation.
                if j == 0 {
                    right.pop();
                }
                break;
            }
            scale = scale.max(alpha);
            p.iter_mut().for_each(|x| *x /= alpha);
            alphas.push(alpha);

            let mut w = vec![0.0; n];
            a.apply_adjoint(&p, &mut w);
            left.push(p);
            w.iter_mut().zip(&q).for_each(|(x, &qi)| *x -= alpha * qi);
            orthogonalize(&mut w, &right);
            let beta = norm(&w);
            if j + 1 == kmax || beta <= 1e-14 * scale {
                break;
            }
            scale = scale.max(beta);
            betas.push(beta);
            w.iter_mut().for_each(|x| *x /= beta);
            q = w;
            if steps >= max_iter {
                break;
            }
        }

        let k = alphas.len();
        if k == 0 {
            break;
        }
        let cols = right.len();
        let mut bidiag = DMatrix::zeros(k, cols);
        for i in 0..k {
            bidiag[(i, i)] = alphas[i];
            if i + 1 < cols {
                bidiag[(i, i + 1)] = betas[i];
            }
        }
        let svd = dense_svd(&bidiag)?;
        let sigma = svd.s[0];
        let mut u = vec![0.0; m];
        for (i, l) in left.iter().enumerate().take(k) {
            let c = svd.u[(i, 0)];
            u.iter_mut().zip(l).for_each(|(x, &li)| *x += c * li);
        }
        let mut v = vec![0.0; n];
        for (i, r) in right.iter().enumerate() {
            let c = svd.v[(i, 0)];
            v.iter_mut().zip(r).for_each(|(x, &ri)| *x += c * ri);
        }
        let (nu, nv) = (norm(&u), norm(&v));
        u.iter_mut().for_each(|x| *x /= nu);
        v.iter_mut().for_each(|x| *x /= nv);

        a.apply(&v, &mut av);
        a.apply_adjoint(&u, &mut atu);
        let r1 = av
            .iter()
            .zip(&u)
            .map(|(x, y)| (x - sigma * y).powi(2))
            .sum::<f64>()
            .sqrt();
        let r2 = atu
            .iter()
            .zip(&v)
            .map(|(x, y)| (x - sigma * y).powi(2))
            .sum::<f64>()
            .sqrt();
        let converged = r1 <= tol * sigma && r2 <= tol * sigma;
        let pair = SingularPair {
            sigma,
            u,
            v,
            converged,
            degenerate: false,
            steps,
        };
        if converged {
            return Ok(pair);
        }
        // restart from Aᵀu, one power step beyond the Ritz vector
        let nt = norm(&atu);
        q0 = if nt > 0.0 {
            atu.iter().map(|x| x / nt).collect()
        } else {
            pair.v.clone()
        };
        if best.as_ref().is_none_or(|b| pair.sigma >= b.sigma) {
            best = Some(pair);
        }
    }

    let mut best = best.expect("at least one Lanczos cycle ran");
    best.steps = steps;
    Ok(best)
}

/// Largest eigenvalue of a symmetric positive semidefinite operator.
///
/// For such operators the leading singular value equals the leading
/// eigenvalue, so the same Lanczos machinery is reused.
pub fn top_eigenvalue<A: LinearOperator + ?Sized>(
    a: &A,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<f64> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::InvalidArgument(format!(
            "top_eigenvalue needs a square operator, got {}x{}",
            n,
            a.ncols()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("empty operator".into()));
    }
    // symmetry probe
    let mut rng = stream_rng(seed, 1);
    let x = gaussian_vec(&mut rng, n);
    let y = gaussian_vec(&mut rng, n);
    let (mut ax, mut ay) = (vec![0.0; n], vec![0.0; n]);
    a.apply(&x, &mut ax);
    a.apply(&y, &mut ay);
    let (lhs, rhs) = (dot(&ax, &y), dot(&x, &ay));
    let scale = norm(&ax) * norm(&y) + norm(&ay) * norm(&x);
    if (lhs - rhs).abs() > 1e-8 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::InvalidArgument(
            "top_eigenvalue: operator is not symmetric".into(),
        ));
    }
    let pair = top_singular_pair(a, tol, max_iter, seed)?;
    if !pair.converged {
        return Err(Error::NotConverged(format!(
            "top eigenvalue after {} Lanczos steps",
            pair.steps
        )));
    }
    Ok(pair.sigma)
}
