//! Two-dimensional spectral compressed sensing.
//!
//! A grid `Y(k, l) = Σᵢ cos(2π(k f₁ᵢ + l f₂ᵢ) + φᵢ)` is observed on a random
//! subset `Ω` of its entries with additive Gaussian noise. Recovery fits a
//! low-rank two-fold Hankel matrix to the observed entries.

use std::io::Write;

use nalgebra::DMatrix;
use rand::seq::index;
use rand::Rng;

use crate::error::{check_len, Error, Result};
use crate::gcg::rank_estimate;
use crate::linalg::{dense_svd, SparseMatrix};
use crate::objective::PenaltyProblem;
use crate::rng::{gaussian_vec, stream_rng, streams};
use crate::structure::{apply_structure, two_fold_hankel_spec, StructureSpec};

#[derive(Clone, Debug, PartialEq)]
pub struct ScsConfig {
    pub n1: usize,
    pub n2: usize,
    /// Number of sinusoids.
    pub r: usize,
    pub k1: usize,
    pub k2: usize,
    /// Fraction of entries revealed.
    pub obs_fraction: f64,
    /// `‖Y_Ω‖_F / ‖noise_Ω‖_F`; infinite means noise-free.
    pub snr: f64,
    pub seed: u64,
}

impl Default for ScsConfig {
    fn default() -> Self {
        Self {
            n1: 31,
            n2: 31,
            r: 3,
            k1: 6,
            k2: 6,
            obs_fraction: 0.4,
            snr: 10.0,
            seed: 0,
        }
    }
}

impl ScsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n1 == 0 || self.n2 == 0 {
            return Err(Error::InvalidArgument("signal grid must be non-empty".into()));
        }
        if self.k1 == 0 || self.k1 > self.n1 || self.k2 == 0 || self.k2 > self.n2 {
            return Err(Error::InvalidArgument(format!(
                "pencil parameters ({}, {}) must lie in 1..=({}, {})",
                self.k1, self.k2, self.n1, self.n2
            )));
        }
        if !(self.obs_fraction > 0.0 && self.obs_fraction <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "obs_fraction must lie in (0, 1], got {}",
                self.obs_fraction
            )));
        }
        if !(self.snr > 0.0) {
            return Err(Error::InvalidArgument(format!("snr must be positive, got {}", self.snr)));
        }
        Ok(())
    }

    pub fn n_observed(&self) -> usize {
        (self.obs_fraction * (self.n1 * self.n2) as f64).round() as usize
    }

    pub fn spec(&self) -> Result<StructureSpec> {
        two_fold_hankel_spec(self.n1, self.n2, self.k1, self.k2)
    }
}

/// One sinusoid `cos(2π(k f1 + l f2) + phase)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sinusoid {
    pub f1: f64,
    pub f2: f64,
    pub phase: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScsData {
    pub y: DMatrix<f64>,
    /// Observed positions as column-major indices into `y`, ascending.
    pub omega: Vec<usize>,
    /// Noisy values at `omega`.
    pub y_obs: Vec<f64>,
    pub components: Vec<Sinusoid>,
}

impl ScsData {
    /// Writes `row,col,value,observed,observed_value`, one row per grid entry.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut obs = vec![None; self.y.len()];
        for (&p, &v) in self.omega.iter().zip(&self.y_obs) {
            obs[p] = Some(v);
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["row", "col", "value", "observed", "observed_value"])?;
        let n1 = self.y.nrows();
        for (p, &v) in self.y.iter().enumerate() {
            w.write_record([
                (p % n1).to_string(),
                (p / n1).to_string(),
                v.to_string(),
                u8::from(obs[p].is_some()).to_string(),
                obs[p].map(|x| x.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Evaluates the noise-free signal, grid indices starting at 1.
pub fn synthesize(n1: usize, n2: usize, components: &[Sinusoid]) -> DMatrix<f64> {
    use std::f64::consts::TAU;
    DMatrix::from_fn(n1, n2, |i, j| {
        let (k, l) = ((i + 1) as f64, (j + 1) as f64);
        components
            .iter()
            .map(|c| (TAU * (k * c.f1 + l * c.f2) + c.phase).cos())
            .sum()
    })
}

pub fn scs_generate(cfg: &ScsConfig) -> Result<ScsData> {
    cfg.validate()?;
    let mut sig_rng = stream_rng(cfg.seed, streams::SCS_SIGNAL);
    let components: Vec<Sinusoid> = (0..cfg.r)
        .map(|_| Sinusoid {
            f1: sig_rng.random::<f64>(),
            f2: sig_rng.random::<f64>(),
            phase: sig_rng.random::<f64>() * std::f64::consts::TAU,
        })
        .collect();
    let y = synthesize(cfg.n1, cfg.n2, &components);

    let mut mask_rng = stream_rng(cfg.seed, streams::SCS_MASK);
    let mut omega = index::sample(&mut mask_rng, cfg.n1 * cfg.n2, cfg.n_observed()).into_vec();
    omega.sort_unstable();

    let clean: Vec<f64> = omega.iter().map(|&p| y.as_slice()[p]).collect();
    let noise = gaussian_vec(&mut stream_rng(cfg.seed, streams::SCS_NOISE), omega.len());
    let signal_norm = crate::linalg::norm(&clean);
    let noise_norm = crate::linalg::norm(&noise);
    let scale = if cfg.snr.is_infinite() || noise_norm == 0.0 {
        0.0
    } else {
        signal_norm / (cfg.snr * noise_norm)
    };
    let y_obs = clean.iter().zip(&noise).map(|(s, n)| s + scale * n).collect();
    Ok(ScsData {
        y,
        omega,
        y_obs,
        components,
    })
}

pub fn scs_problem(cfg: &ScsConfig, data: &ScsData, lambda: f64, mu: f64) -> Result<PenaltyProblem> {
    let spec = cfg.spec()?;
    check_len("signal entries", spec.n_params(), data.y.len())?;
    check_len("observed values", data.omega.len(), data.y_obs.len())?;
    let triplets: Vec<_> = data.omega.iter().enumerate().map(|(i, &p)| (i, p, 1.0)).collect();
    let s = SparseMatrix::from_triplets(data.omega.len(), spec.n_params(), &triplets)?;
    PenaltyProblem::assemble(&spec, s, data.y_obs.clone(), lambda, mu)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecoveryMetrics {
    /// `‖Ŷ − Y‖_F / ‖Y‖_F`
    pub normalized_error: f64,
    /// Rank of the structured matrix of `Ŷ` at absolute threshold `1e-3`.
    pub structured_rank: usize,
    /// `½ Σ_Ω (Ŷ − Ȳ)²`
    pub square_loss: f64,
}

pub fn recovery_metrics(
    y_true: &DMatrix<f64>,
    y_hat: &DMatrix<f64>,
    spec: &StructureSpec,
    omega: &[usize],
    y_obs: &[f64],
) -> Result<RecoveryMetrics> {
    if y_true.shape() != y_hat.shape() {
        return Err(Error::DimensionMismatch {
            context: "recovered signal",
            expected: y_true.len(),
            got: y_hat.len(),
        });
    }
    check_len("observed values", omega.len(), y_obs.len())?;
    let scale = y_true.norm();
    let diff = (y_hat - y_true).norm();
    let normalized_error = if scale > 0.0 { diff / scale } else { diff };
    let q = apply_structure(spec, y_hat.as_slice())?;
    let structured_rank = rank_estimate(&dense_svd(&q)?.s, 1e-3);
    let square_loss = 0.5
        * omega
            .iter()
            .zip(y_obs)
            .map(|(&p, v)| (y_hat.as_slice()[p] - v).powi(2))
            .sum::<f64>();
    Ok(RecoveryMetrics {
        normalized_error,
        structured_rank,
        square_loss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_sinusoids_give_zero_signal() {
        let data = scs_generate(&ScsConfig {
            r: 0,
            ..ScsConfig::default()
        })
        .unwrap();
        assert_eq!(data.y, DMatrix::zeros(31, 31));
        assert!(data.y_obs.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn dc_component_is_rank_one() {
        let y = synthesize(6, 7, &[Sinusoid { f1: 0.0, f2: 0.0, phase: 0.0 }]);
        assert_eq!(y, DMatrix::from_element(6, 7, 1.0));
        let spec = two_fold_hankel_spec(6, 7, 3, 3).unwrap();
        let s = dense_svd(&apply_structure(&spec, y.as_slice()).unwrap()).unwrap().s;
        assert_eq!(rank_estimate(&s, 1e-9), 1);
    }

    #[test]
    fn real_sinusoid_grid_has_rank_at_most_twice_r() {
        for (r, seed) in [(1, 0), (2, 1), (3, 2)] {
            let cfg = ScsConfig {
                n1: 20,
                n2: 20,
                r,
                k1: 2 * r + 1,
                k2: 2 * r + 1,
                seed,
                ..ScsConfig::default()
            };
            let data = scs_generate(&cfg).unwrap();
            let q = apply_structure(&cfg.spec().unwrap(), data.y.as_slice()).unwrap();
            let s = dense_svd(&q).unwrap().s;
            assert!(s[2 * r] <= 1e-9 * s[0], "r={r}: {s:?}");
        }
    }

    #[test]
    fn mask_size_and_uniqueness() {
        let cfg = ScsConfig::default();
        let data = scs_generate(&cfg).unwrap();
        assert_eq!(data.omega.len(), (0.4f64 * 961.0).round() as usize);
        assert!(data.omega.windows(2).all(|w| w[0] < w[1]));
        assert!(*data.omega.last().unwrap() < 961);
    }

    #[test]
    fn noise_matches_snr() {
        let cfg = ScsConfig {
            snr: 4.0,
            ..ScsConfig::default()
        };
        let data = scs_generate(&cfg).unwrap();
        let clean: Vec<f64> = data.omega.iter().map(|&p| data.y.as_slice()[p]).collect();
        let noise: Vec<f64> = data.y_obs.iter().zip(&clean).map(|(a, b)| a - b).collect();
        let ratio = crate::linalg::norm(&clean) / crate::linalg::norm(&noise);
        assert!((ratio - 4.0).abs() < 1e-10);
    }

    #[test]
    fn deterministic_given_seed() {
        let cfg = ScsConfig {
            seed: 9,
            ..ScsConfig::default()
        };
        assert_eq!(scs_generate(&cfg).unwrap(), scs_generate(&cfg).unwrap());
    }

    #[test]
    fn metrics_examples() {
        let cfg = ScsConfig::default();
        let data = scs_generate(&cfg).unwrap();
        let spec = cfg.spec().unwrap();
        let same = recovery_metrics(&data.y, &data.y, &spec, &data.omega, &data.y_obs).unwrap();
        assert_eq!(same.normalized_error, 0.0);
        assert!(same.structured_rank <= 6);
        let zero = DMatrix::zeros(31, 31);
        let m = recovery_metrics(&data.y, &zero, &spec, &data.omega, &data.y_obs).unwrap();
        assert_eq!(m.normalized_error, 1.0);
        assert_eq!(m.structured_rank, 0);
    }

    #[test]
    fn problem_selects_observed_entries() {
        let cfg = ScsConfig {
            n1: 8,
            n2: 9,
            k1: 3,
            k2: 4,
            ..ScsConfig::default()
        };
        let data = scs_generate(&cfg).unwrap();
        let prob = scs_problem(&cfg, &data, 1.0, 0.1).unwrap();
        assert_eq!(prob.observation().n_rows(), data.omega.len());
        let picked = prob.observation().spmv(data.y.as_slice()).unwrap();
        let want: Vec<f64> = data.omega.iter().map(|&p| data.y.as_slice()[p]).collect();
        assert_eq!(picked, want);
    }

    #[test]
    fn rejects_bad_config() {
        for cfg in [
            ScsConfig { k1: 40, ..ScsConfig::default() },
            ScsConfig { obs_fraction: 0.0, ..ScsConfig::default() },
            ScsConfig { snr: -1.0, ..ScsConfig::default() },
        ] {
            assert!(scs_generate(&cfg).is_err());
        }
    }
}
