//! Stochastic system realization.
//!
//! A hidden linear system
//!
//! ```text
//! s_{t+1} = D s_t + E u_t,    z_t = F s_t + u_t,    z̄_t = z_t + σ ξ_t
//! ```
//!
//! is simulated, output covariances `v_i = (1/T) Σ_{t=1}^{T−i} z̄_{t+i} z̄_tᵀ`
//! are estimated for lags `1..=k`, and a low-rank block-Hankel matrix is fitted
//! to them. The rank of the fitted matrix estimates the system order.

use std::io::Write;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{dense_svd, SparseMatrix};
use crate::objective::PenaltyProblem;
use crate::rng::{gaussian_vec, stream_rng, streams};
use crate::structure::{block_hankel_spec, StructureSpec};

#[derive(Clone, Debug, PartialEq)]
pub struct SsrConfig {
    /// Output dimension.
    pub n: usize,
    /// True system order.
    pub r: usize,
    /// Block rows of the Hankel matrix.
    pub j: usize,
    /// Block columns of the Hankel matrix, also the number of observed lags.
    pub k: usize,
    /// Trajectory length.
    pub t: usize,
    pub sigma: f64,
    pub seed: u64,
    /// Test hook: force `E = 0` and `s_1 = 0` so the output is white noise.
    #[doc(hidden)]
    pub white_noise_only: bool,
}

impl Default for SsrConfig {
    fn default() -> Self {
        Self {
            n: 2,
            r: 2,
            j: 6,
            k: 8,
            t: 1000,
            sigma: 0.05,
            seed: 0,
            white_noise_only: false,
        }
    }
}

impl SsrConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("n", self.n), ("r", self.r), ("j", self.j), ("k", self.k)] {
            if v == 0 {
                return Err(Error::InvalidArgument(format!("{name} must be positive")));
            }
        }
        if self.t <= self.k {
            return Err(Error::InvalidArgument(format!(
                "trajectory length {} must exceed the number of lags {}",
                self.t, self.k
            )));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!("sigma must be >= 0, got {}", self.sigma)));
        }
        Ok(())
    }

    pub fn n_blocks(&self) -> usize {
        self.j + self.k - 1
    }

    pub fn spec(&self) -> Result<StructureSpec> {
        block_hankel_spec(self.n, self.n, self.j, self.k)
    }
}

/// System matrices `D` (`r × r`), `E` (`r × n`), `F` (`n × r`).
#[derive(Clone, Debug, PartialEq)]
pub struct SsrSystem {
    pub d: DMatrix<f64>,
    pub e: DMatrix<f64>,
    pub f: DMatrix<f64>,
}

impl SsrSystem {
    /// Exact stationary output covariances `F D^{i−1}(D P Fᵀ + E)` for
    /// `i = 1..=lags`, where `P = D P Dᵀ + E Eᵀ`.
    pub fn covariance_blocks(&self, lags: usize) -> Result<Vec<DMatrix<f64>>> {
        let r = self.d.nrows();
        // vec(P) = (I − D ⊗ D)⁻¹ vec(E Eᵀ)
        let kron = self.d.kronecker(&self.d);
        let lhs = DMatrix::identity(r * r, r * r) - kron;
        let rhs = &self.e * self.e.transpose();
        let p = lhs
            .lu()
            .solve(&nalgebra::DVector::from_column_slice(rhs.as_slice()))
            .ok_or_else(|| Error::InvalidArgument("D has an eigenvalue on the unit circle".into()))?;
        let p = DMatrix::from_column_slice(r, r, p.as_slice());
        let tail = &self.d * &p * self.f.transpose() + &self.e;
        let mut out = Vec::with_capacity(lags);
        let mut fd = self.f.clone();
        for _ in 0..lags {
            out.push(&fd * &tail);
            fd = &fd * &self.d;
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SsrData {
    /// Covariance blocks `v_1..v_{j+k−1}`, zero where unobserved.
    pub v: Vec<DMatrix<f64>>,
    /// Block observation mask.
    pub w: Vec<bool>,
    pub true_system: SsrSystem,
}

impl SsrData {
    /// Flattens the blocks into the parameter vector of the block-Hankel spec.
    pub fn params(&self) -> Vec<f64> {
        self.v.iter().flat_map(|b| b.iter().copied()).collect()
    }

    /// Writes `lag,row,col,value,observed` rows, lags starting at 1.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["lag", "row", "col", "value", "observed"])?;
        for (i, (block, &obs)) in self.v.iter().zip(&self.w).enumerate() {
            for c in 0..block.ncols() {
                for r in 0..block.nrows() {
                    w.write_record([
                        (i + 1).to_string(),
                        r.to_string(),
                        c.to_string(),
                        block[(r, c)].to_string(),
                        u8::from(obs).to_string(),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn unit_nuclear(rows: usize, cols: usize, draws: Vec<f64>) -> Result<DMatrix<f64>> {
    let m = DMatrix::from_column_slice(rows, cols, &draws);
    let nuc: f64 = dense_svd(&m)?.s.iter().sum();
    Ok(if nuc > 0.0 { m / nuc } else { m })
}

/// Draws a random system, simulates it and estimates the covariance blocks.
pub fn ssr_generate(cfg: &SsrConfig) -> Result<SsrData> {
    cfg.validate()?;
    let (n, r) = (cfg.n, cfg.r);
    let mut sys_rng = stream_rng(cfg.seed, streams::SSR_SYSTEM);
    let d = unit_nuclear(r, r, gaussian_vec(&mut sys_rng, r * r))?;
    let mut e = unit_nuclear(r, n, gaussian_vec(&mut sys_rng, r * n))?;
    let f = unit_nuclear(n, r, gaussian_vec(&mut sys_rng, n * r))?;
    let mut s = nalgebra::DVector::from_vec(gaussian_vec(
        &mut stream_rng(cfg.seed, streams::SSR_INITIAL_STATE),
        r,
    ));
    if cfg.white_noise_only {
        e.fill(0.0);
        s.fill(0.0);
    }

    let mut input_rng = stream_rng(cfg.seed, streams::SSR_INPUT);
    let mut noise_rng = stream_rng(cfg.seed, streams::SSR_MEASUREMENT);
    // observed outputs, one column per time step
    let mut z = DMatrix::zeros(n, cfg.t);
    for t in 0..cfg.t {
        let u = nalgebra::DVector::from_vec(gaussian_vec(&mut input_rng, n));
        let xi = gaussian_vec(&mut noise_rng, n);
        let zt = &f * &s + &u;
        for a in 0..n {
            z[(a, t)] = zt[a] + cfg.sigma * xi[a];
        }
        s = &d * &s + &e * &u;
    }

    let mut v = Vec::with_capacity(cfg.n_blocks());
    let mut w = Vec::with_capacity(cfg.n_blocks());
    for lag in 1..=cfg.n_blocks() {
        let observed = lag <= cfg.k;
        let block = if observed {
            let m = cfg.t - lag;
            z.columns(lag, m) * z.columns(0, m).transpose() / cfg.t as f64
        } else {
            DMatrix::zeros(n, n)
        };
        v.push(block);
        w.push(observed);
    }
    Ok(SsrData {
        v,
        w,
        true_system: SsrSystem { d, e, f },
    })
}

/// Observation operator selecting every scalar of the observed blocks.
pub fn ssr_observation(cfg: &SsrConfig, data: &SsrData) -> Result<(SparseMatrix, Vec<f64>)> {
    let block = cfg.n * cfg.n;
    let n_params = block * cfg.n_blocks();
    if data.v.len() != cfg.n_blocks() || data.w.len() != cfg.n_blocks() {
        return Err(Error::DimensionMismatch {
            context: "covariance blocks",
            expected: cfg.n_blocks(),
            got: data.v.len(),
        });
    }
    let params = data.params();
    let mut triplets = Vec::new();
    let mut target = Vec::new();
    for (i, &obs) in data.w.iter().enumerate() {
        if obs {
            for p in i * block..(i + 1) * block {
                triplets.push((target.len(), p, 1.0));
                target.push(params[p]);
            }
        }
    }
    let s = SparseMatrix::from_triplets(target.len(), n_params, &triplets)?;
    Ok((s, target))
}

pub fn ssr_problem(cfg: &SsrConfig, data: &SsrData, lambda: f64, mu: f64) -> Result<PenaltyProblem> {
    let (s, target) = ssr_observation(cfg, data)?;
    PenaltyProblem::assemble(&cfg.spec()?, s, target, lambda, mu)
}
