//! Command-line driver: runs the system realization and spectral compressed
//! sensing experiments, the scaling sweep, and the built-in self checks.

mod config_file;

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, ColorChoice, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;

use strucrank::apps::{recovery_metrics, scs_generate, scs_problem, ssr_generate, ssr_problem};
use strucrank::bench::{default_sizes, run_bench, write_bench_csv, BenchConfig, BenchSize};
use strucrank::selftest::run_selftest;
use strucrank::{
    recover_y, solve, solve_apg, ApgConfig, Error, FactorPair, GcgConfig, PenaltyProblem,
    ScsConfig, SolveTrace, SsrConfig,
};

const SUBCOMMANDS: [&str; 4] = ["ssr", "scs", "bench", "selftest"];

#[derive(Parser, Debug)]
#[command(
    name = "strucrank",
    version,
    about = "Structured low-rank recovery with generalized conditional gradient",
    args_override_self = true
)]
struct Cli {
    /// File of `key = value` lines, read before the command-line flags.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Stochastic system realization from empirical output covariances.
    Ssr(SsrArgs),
    /// Two-dimensional spectral compressed sensing.
    Scs(ScsArgs),
    /// Per-iteration timing over a list of block-Hankel sizes.
    Bench(BenchArgs),
    /// Run the built-in invariant checks.
    Selftest,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Solver {
    /// Conditional gradient without local search.
    Gcg,
    /// Conditional gradient with local search.
    Gcgls,
    /// Accelerated proximal gradient with full SVDs.
    ApgSvt,
}

impl Solver {
    fn name(self) -> &'static str {
        match self {
            Solver::Gcg => "gcg",
            Solver::Gcgls => "gcgls",
            Solver::ApgSvt => "apg-svt",
        }
    }
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long, default_value_t = 0.1)]
    mu: f64,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, value_enum, default_value_t = Solver::Gcgls)]
    solver: Solver,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
    /// Skip the per-iteration structured rank (a dense SVD each iteration).
    #[arg(long)]
    no_rank: bool,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SsrArgs {
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    r: usize,
    #[arg(long, default_value_t = 6)]
    j: usize,
    #[arg(long, default_value_t = 8)]
    k: usize,
    #[arg(long = "T", default_value_t = 1000)]
    t: usize,
    #[arg(long, default_value_t = 0.05)]
    sigma: f64,
    #[command(flatten)]
    solve: SolveArgs,
}

#[derive(Args, Debug)]
struct ScsArgs {
    #[arg(long, default_value_t = 31)]
    n1: usize,
    #[arg(long, default_value_t = 31)]
    n2: usize,
    #[arg(long, default_value_t = 3)]
    r: usize,
    #[arg(long, default_value_t = 6)]
    k1: usize,
    #[arg(long, default_value_t = 6)]
    k2: usize,
    /// Fraction of revealed entries.
    #[arg(long, default_value_t = 0.4)]
    obs: f64,
    #[arg(long, default_value_t = 10.0)]
    snr: f64,
    #[command(flatten)]
    solve: SolveArgs,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Semicolon-separated `m,n,j,k` tuples.
    #[arg(long, value_parser = parse_size, value_delimiter = ';')]
    sizes: Vec<BenchSize>,
    #[arg(long, default_value_t = 10)]
    iters: usize,
    #[arg(long, default_value_t = 3)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn parse_size(t: &str) -> Result<BenchSize, String> {
    let v: Vec<usize> = t
        .split(',')
        .map(|x| x.trim().parse::<usize>().map_err(|e| format!("{x:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [m, n, j, k] if m > 0 && n > 0 && j > 0 && k > 0 => Ok(BenchSize::new(m, n, j, k)),
        _ => Err(format!("expected four positive integers m,n,j,k, got {t:?}")),
    }
}

/// Failure classes mapped to exit codes.
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) | Error::Config(_) | Error::DimensionMismatch { .. } => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn write_trace(dir: &Path, trace: &SolveTrace) -> Result<(), Error> {
    trace.write_csv(BufWriter::new(File::create(dir.join("trace.csv"))?))
}

fn finish(dir: &Path, solver: Solver, seed: u64, trace: &SolveTrace) -> Result<(), Error> {
    write_trace(dir, trace)?;
    let summary = trace.summary(solver.name(), seed);
    fs::write(dir.join("summary.json"), summary.to_json()? + "\n")?;
    println!(
        "{}: iters={} phi={:.6e} sqloss={:.6e} rank={} reason={} time={:.3}s",
        summary.solver,
        summary.iters,
        summary.final_phi,
        summary.final_sqloss,
        summary.final_rank.map_or("-".into(), |r| r.to_string()),
        summary.converged_reason,
        summary.wall_time_s,
    );
    Ok(())
}

/// Solves and returns the recovered parameter vector `y = C vec(X)`.
fn run_solver(
    prob: &PenaltyProblem,
    args: &SolveArgs,
) -> Result<(Vec<f64>, SolveTrace), Failure> {
    if !(args.mu > 0.0) {
        return Err(Failure::Usage(format!("--mu must be positive, got {}", args.mu)));
    }
    let result = match args.solver {
        Solver::Gcg | Solver::Gcgls => {
            let base = if args.solver == Solver::Gcg {
                GcgConfig::gcg()
            } else {
                GcgConfig::gcgls()
            };
            let config = GcgConfig {
                max_iter: args.max_iter,
                seed: args.seed,
                track_rank: !args.no_rank,
                ..base
            };
            solve(prob, &config, FactorPair::ones(prob.rows(), prob.cols()))
                .and_then(|(f, t)| Ok((recover_y(prob, &f)?, t)))
        }
        Solver::ApgSvt => {
            let config = ApgConfig {
                max_iter: args.max_iter,
                seed: args.seed,
                track_rank: !args.no_rank,
                ..ApgConfig::comparison()
            };
            solve_apg(prob, &config, None)
                .and_then(|(x, t)| Ok((prob.c().spmv(x.as_slice())?, t)))
        }
    };
    match result {
        Ok(v) => Ok(v),
        Err(Error::Diverged { iter, reason, trace }) => {
            fs::create_dir_all(&args.out).map_err(|e| Failure::Runtime(e.to_string()))?;
            write_trace(&args.out, &trace).map_err(|e| Failure::Runtime(e.to_string()))?;
            Err(Failure::Runtime(format!(
                "solver diverged at iteration {iter}: {reason}; partial trace kept in {}",
                args.out.join("trace.csv").display()
            )))
        }
        Err(e) => Err(e.into()),
    }
}

fn run_ssr(a: &SsrArgs) -> Result<(), Failure> {
    let cfg = SsrConfig {
        n: a.n,
        r: a.r,
        j: a.j,
        k: a.k,
        t: a.t,
        sigma: a.sigma,
        seed: a.solve.seed,
        ..SsrConfig::default()
    };
    let data = ssr_generate(&cfg)?;
    let prob = ssr_problem(&cfg, &data, a.solve.lambda, a.solve.mu)?;
    fs::create_dir_all(&a.solve.out).map_err(Error::from)?;
    data.write_csv(BufWriter::new(
        File::create(a.solve.out.join("covariance.csv")).map_err(Error::from)?,
    ))?;
    let (_, trace) = run_solver(&prob, &a.solve)?;
    finish(&a.solve.out, a.solve.solver, a.solve.seed, &trace)?;
    Ok(())
}

fn run_scs(a: &ScsArgs) -> Result<(), Failure> {
    let cfg = ScsConfig {
        n1: a.n1,
        n2: a.n2,
        r: a.r,
        k1: a.k1,
        k2: a.k2,
        obs_fraction: a.obs,
        snr: a.snr,
        seed: a.solve.seed,
    };
    let data = scs_generate(&cfg)?;
    let prob = scs_problem(&cfg, &data, a.solve.lambda, a.solve.mu)?;
    let out = &a.solve.out;
    fs::create_dir_all(out).map_err(Error::from)?;
    data.write_csv(BufWriter::new(File::create(out.join("signal.csv")).map_err(Error::from)?))?;
    let (y, trace) = run_solver(&prob, &a.solve)?;
    let y_hat = DMatrix::from_vec(cfg.n1, cfg.n2, y);
    let m = recovery_metrics(&data.y, &y_hat, prob.spec(), &data.omega, &data.y_obs)?;
    let metrics = serde_json::json!({
        "normalized_error": m.normalized_error,
        "structured_rank": m.structured_rank,
        "square_loss": m.square_loss,
    });
    fs::write(
        out.join("metrics.json"),
        serde_json::to_string_pretty(&metrics).map_err(Error::from)? + "\n",
    )
    .map_err(Error::from)?;
    let mut w = csv::Writer::from_path(out.join("recovered.csv")).map_err(Error::from)?;
    w.write_record(["row", "col", "value"]).map_err(Error::from)?;
    for (p, v) in y_hat.iter().enumerate() {
        w.write_record([(p % cfg.n1).to_string(), (p / cfg.n1).to_string(), v.to_string()])
            .map_err(Error::from)?;
    }
    w.flush().map_err(Error::from)?;
    finish(out, a.solve.solver, a.solve.seed, &trace)?;
    println!(
        "recovery: normalized_error={:.4} structured_rank={}",
        m.normalized_error, m.structured_rank
    );
    Ok(())
}

fn run_bench_cmd(a: &BenchArgs) -> Result<(), Failure> {
    let sizes = if a.sizes.is_empty() {
        default_sizes()
    } else {
        a.sizes.clone()
    };
    let config = BenchConfig {
        iters: a.iters,
        reps: a.reps,
        seed: a.seed,
        ..BenchConfig::default()
    };
    let rows = run_bench(&sizes, &config)?;
    fs::create_dir_all(&a.out).map_err(Error::from)?;
    write_bench_csv(&rows, BufWriter::new(File::create(a.out.join("bench.csv")).map_err(Error::from)?))?;
    for r in &rows {
        println!(
            "m={} n={} j={} k={} MN={} time_per_iter={:.6}s",
            r.m, r.n, r.j, r.k, r.mn, r.time_per_iter_s
        );
    }
    Ok(())
}

fn run_selftest_cmd() -> Result<(), Failure> {
    let results = run_selftest();
    for r in &results {
        println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
    }
    match results.iter().filter(|r| !r.passed).count() {
        0 => Ok(()),
        n => Err(Failure::Runtime(format!("{n} self-test check(s) failed"))),
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let args = match config_file::expand(args, &SUBCOMMANDS) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let color = if std::env::var_os("NO_COLOR").is_some_and(|v| !v.is_empty()) {
        ColorChoice::Never
    } else {
        ColorChoice::Auto
    };
    let matches = match Cli::command().color(color).try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(2);
        }
    };
    let outcome = match &cli.command {
        Command::Ssr(a) => run_ssr(a),
        Command::Scs(a) => run_scs(a),
        Command::Bench(a) => run_bench_cmd(a),
        Command::Selftest => run_selftest_cmd(),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
