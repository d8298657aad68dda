//! Per-iteration timing sweep over problem sizes.

use std::time::Instant;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gcg::{solve, GcgConfig};
use crate::linalg::SparseMatrix;
use crate::objective::{FactorPair, PenaltyProblem};
use crate::rng::{gaussian_vec, stream_rng, streams};
use crate::structure::block_hankel_spec;

/// Block-Hankel shape: `m × n` blocks, `j` block rows, `k` block columns.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BenchSize {
    pub m: usize,
    pub n: usize,
    pub j: usize,
    pub k: usize,
}

impl BenchSize {
    pub fn new(m: usize, n: usize, j: usize, k: usize) -> Self {
        Self { m, n, j, k }
    }

    pub fn rows(&self) -> usize {
        self.m * self.j
    }

    pub fn cols(&self) -> usize {
        self.n * self.k
    }

    pub fn mn(&self) -> usize {
        self.rows() * self.cols()
    }
}

/// Scalar Hankel sizes with `MN = 10⁴, 4·10⁴, 1.6·10⁵`.
pub fn default_sizes() -> Vec<BenchSize> {
    vec![
        BenchSize::new(1, 1, 50, 200),
        BenchSize::new(1, 1, 100, 400),
        BenchSize::new(1, 1, 200, 800),
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub m: usize,
    pub n: usize,
    pub j: usize,
    pub k: usize,
    pub mn: usize,
    pub iters: usize,
    pub reps: usize,
    pub time_per_iter_s: f64,
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub iters: usize,
    pub reps: usize,
    /// Rank of the initial factors.
    pub rank: usize,
    pub local_search_steps: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            iters: 10,
            reps: 3,
            rank: 5,
            local_search_steps: 5,
            seed: 0,
        }
    }
}

/// Fully observed block-Hankel fitting problem with a low-rank-plus-noise target.
pub fn bench_problem(size: BenchSize, seed: u64) -> Result<PenaltyProblem> {
    let spec = block_hankel_spec(size.m, size.n, size.j, size.k)?;
    let p = spec.n_params();
    let mut rng = stream_rng(seed, streams::BENCH);
    let noise = gaussian_vec(&mut rng, p);
    // damped oscillations keep the target Hankel matrix close to rank 4
    let target: Vec<f64> = (0..p)
        .map(|i| {
            let t = i as f64 / p as f64;
            (-2.0 * t).exp() * ((37.0 * t).cos() + (11.0 * t).sin()) + 0.01 * noise[i]
        })
        .collect();
    PenaltyProblem::assemble(&spec, SparseMatrix::identity(p), target, 1.0, 0.1)
}

fn bench_init(rows: usize, cols: usize, rank: usize, seed: u64) -> FactorPair {
    let mut rng = stream_rng(seed, streams::BENCH + 1);
    let scale = 1.0 / ((rows * cols) as f64).sqrt().sqrt();
    let u = DMatrix::from_vec(rows, rank, gaussian_vec(&mut rng, rows * rank)) * scale;
    let v = DMatrix::from_vec(rank, cols, gaussian_vec(&mut rng, rank * cols)) * scale;
    FactorPair { u, v }
}

/// Mean wall time per solver iteration for one size.
pub fn time_size(size: BenchSize, config: &BenchConfig) -> Result<BenchRow> {
    if config.iters == 0 || config.reps == 0 {
        return Err(Error::Config("bench needs iters >= 1 and reps >= 1".into()));
    }
    let prob = bench_problem(size, config.seed)?;
    let rank = config.rank.min(size.rows()).min(size.cols());
    let gcg = GcgConfig {
        max_iter: config.iters,
        tol_x: 0.0,
        tol_obj: 0.0,
        local_search_max_steps: config.local_search_steps,
        local_search_rel_improvement_floor: 0.0,
        track_rank: false,
        recompress_every: None,
        seed: config.seed,
        ..GcgConfig::default()
    };
    let mut total = 0.0;
    let mut counted = 0usize;
    for _ in 0..config.reps {
        let init = bench_init(size.rows(), size.cols(), rank, config.seed);
        let start = Instant::now();
        let (_, trace) = solve(&prob, &gcg, init)?;
        total += start.elapsed().as_secs_f64();
        counted += trace.records.len();
    }
    Ok(BenchRow {
        m: size.m,
        n: size.n,
        j: size.j,
        k: size.k,
        mn: size.mn(),
        iters: counted / config.reps,
        reps: config.reps,
        time_per_iter_s: total / counted.max(1) as f64,
    })
}

/// Runs the sizes one after another.
pub fn run_bench(sizes: &[BenchSize], config: &BenchConfig) -> Result<Vec<BenchRow>> {
    sizes.iter().map(|&s| time_size(s, config)).collect()
}

pub fn write_bench_csv<W: std::io::Write>(rows: &[BenchRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
