//! Correlated lognormal model of one day of hourly demand.
//!
//! The model matches the observed linear-space moments: for lognormal
//! coordinates, `sigma_ij = ln(1 + cov_ij / (mean_i * mean_j))` and
//! `mu_i = ln(mean_i) - sigma_ii / 2` reproduce the given means and
//! covariances exactly. A sample is `exp(mu + L z)` with `L` the Cholesky
//! factor of `sigma` and `z` standard normal.
//!
//! Real covariance estimates are often only almost positive semidefinite
//! (and the entrywise `ln` can push them slightly further), so `sigma` is
//! symmetrised and its eigenvalues are clipped to a tiny positive floor
//! before factorisation; a growing diagonal jitter is the fallback when
//! factorisation still fails. The repairs touch the factor only; the
//! reported model moments come from the unrepaired `sigma`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::Error;
use crate::model::DemandProfile;
use crate::rng::stream;
use crate::Result;

use super::DemandStats;

/// Eigenvalue floor, as a fraction of the mean diagonal of `sigma`.
const EIG_FLOOR_SCALE: f64 = 1e-10;
/// First diagonal jitter tried when factorisation fails; doubles per retry.
const JITTER_START: f64 = 1e-8;
/// Jitter ceiling; beyond this the statistics are declared unusable.
const JITTER_MAX: f64 = 1e-4;

/// Fitted lognormal day generator.
#[derive(Debug, Clone, PartialEq)]
pub struct LognormalModel {
    mu: Vec<f64>,
    /// Symmetrised log-space covariance, before the PSD repair.
    sigma: Vec<Vec<f64>>,
    /// Row-major lower Cholesky factor of the repaired `sigma`.
    chol: Vec<f64>,
    dim: usize,
}

impl LognormalModel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Log-space location parameters.
    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    /// Log-space covariance as fitted (symmetrised, not repaired).
    pub fn sigma(&self) -> &[Vec<f64>] {
        &self.sigma
    }
}

/// Fits the moment-matched lognormal model to per-hour statistics.
///
/// Requires every mean to be positive and every `1 + cov/(mean*mean)` to
/// be positive; a violation names the offending hour pair.
pub fn fit_lognormal(stats: &DemandStats) -> Result<LognormalModel> {
    stats.validate()?;
    let n = stats.dim();
    for (hour, &m) in stats.mean.iter().enumerate() {
        if m <= 0.0 {
            return Err(Error::NonPositiveMean { hour, value: m });
        }
    }

    let mut raw = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let arg = 1.0 + stats.cov[i][j] / (stats.mean[i] * stats.mean[j]);
            if arg <= 0.0 {
                return Err(Error::LogMomentUndefined { i, j, value: arg });
            }
            raw[i][j] = arg.ln();
        }
    }
    let mu: Vec<f64> = (0..n)
        .map(|i| stats.mean[i].ln() - raw[i][i] / 2.0)
        .collect();
    let sigma: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| 0.5 * (raw[i][j] + raw[j][i])).collect())
        .collect();

    let chol = factorise(&sigma, n)?;
    Ok(LognormalModel { mu, sigma, chol, dim: n })
}

/// Clips eigenvalues to a positive floor, then factorises, jittering the
/// diagonal as a last resort.
fn factorise(sigma: &[Vec<f64>], n: usize) -> Result<Vec<f64>> {
    let m = DMatrix::from_fn(n, n, |i, j| sigma[i][j]);
    let eig = m.clone().symmetric_eigen();
    let floor = EIG_FLOOR_SCALE * (m.trace() / n as f64).max(0.0);
    let clipped = DVector::from_iterator(n, eig.eigenvalues.iter().map(|&l| l.max(floor)));
    let repaired = &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
    // Recomposition can leave asymmetry in the last bits; fold it back.
    let repaired = 0.5 * (&repaired + repaired.transpose());

    if let Some(chol) = repaired.clone().cholesky() {
        return Ok(flatten_lower(chol.l()));
    }
    let mut jitter = JITTER_START;
    while jitter <= JITTER_MAX {
        let bumped = &repaired + DMatrix::identity(n, n) * jitter;
        if let Some(chol) = bumped.cholesky() {
            return Ok(flatten_lower(chol.l()));
        }
        jitter *= 2.0;
    }
    Err(Error::CovarianceNotFactorable { max_jitter: JITTER_MAX })
}

fn flatten_lower(l: DMatrix<f64>) -> Vec<f64> {
    let n = l.nrows();
    let mut flat = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            flat[i * n + j] = l[(i, j)];
        }
    }
    flat
}

/// Deterministic transform from standard normals to one demand day.
///
/// This is the sampling map with the randomness injected from outside:
/// `profile = exp(mu + L z)`. With all-zero `z` it returns `exp(mu)`.
pub fn profile_from_normals(model: &LognormalModel, z: &[f64]) -> Result<DemandProfile> {
    let n = model.dim;
    if z.len() != n {
        return Err(Error::LengthMismatch {
            what: "normal draws",
            expected: n,
            got: z.len(),
        });
    }
    let hd = (0..n)
        .map(|i| {
            let lz: f64 = (0..=i).map(|k| model.chol[i * n + k] * z[k]).sum();
            (model.mu[i] + lz).exp()
        })
        .collect();
    DemandProfile::new(hd)
}

/// Samples `count` demand days. Day `i` is generated from its own stream
/// keyed by `(seed, i)`, so any sub-range of a batch is reproducible on
/// its own and worker count does not matter.
pub fn sample_profiles(
    model: &LognormalModel,
    count: usize,
    seed: u64,
) -> Result<Vec<DemandProfile>> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, i as u64);
            let z: Vec<f64> = (0..model.dim).map(|_| rng.sample(StandardNormal)).collect();
            profile_from_normals(model, &z)
        })
        .collect()
}

/// Linear-space moments implied by the fitted model, for verification:
/// `mean_i = exp(mu_i + sigma_ii/2)`,
/// `cov_ij = mean_i * mean_j * (exp(sigma_ij) - 1)`.
pub fn model_moments(model: &LognormalModel) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = model.dim;
    let mean: Vec<f64> = (0..n)
        .map(|i| (model.mu[i] + model.sigma[i][i] / 2.0).exp())
        .collect();
    let cov = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| mean[i] * mean[j] * (model.sigma[i][j].exp() - 1.0))
                .collect()
        })
        .collect();
    (mean, cov)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demand::default_stats;

    fn diag_stats(mean: Vec<f64>, var: f64) -> DemandStats {
        let n = mean.len();
        let cov = (0..n)
            .map(|i| (0..n).map(|j| if i == j { var } else { 0.0 }).collect())
            .collect();
        DemandStats { mean, cov }
    }

    #[test]
    fn unit_mean_with_variance_e_minus_one_gives_standard_parameters() {
        let stats = diag_stats(vec![1.0; 3], std::f64::consts::E - 1.0);
        let model = fit_lognormal(&stats).unwrap();
        for i in 0..3 {
            assert!((model.mu()[i] + 0.5).abs() < 1e-12);
            assert!((model.sigma()[i][i] - 1.0).abs() < 1e-12);
            for j in 0..3 {
                if i != j {
                    assert_eq!(model.sigma()[i][j], 0.0);
                }
            }
        }
    }

    #[test]
    fn fitted_model_reproduces_the_input_moments() {
        let stats = default_stats();
        let model = fit_lognormal(&stats).unwrap();
        let (mean, cov) = model_moments(&model);
        for i in 0..stats.dim() {
            assert!(
                (mean[i] - stats.mean[i]).abs() <= 1e-9 * stats.mean[i].abs(),
                "mean {i}: {} vs {}",
                mean[i],
                stats.mean[i]
            );
            for j in 0..stats.dim() {
                assert!(
                    (cov[i][j] - stats.cov[i][j]).abs() <= 1e-9 * (1.0 + stats.cov[i][j].abs()),
                    "cov ({i},{j}): {} vs {}",
                    cov[i][j],
                    stats.cov[i][j]
                );
            }
        }
    }

    #[test]
    fn fit_rejects_unusable_statistics() {
        let stats = diag_stats(vec![1.0, 0.0], 0.1);
        assert!(matches!(
            fit_lognormal(&stats),
            Err(Error::NonPositiveMean { hour: 1, .. })
        ));

        let stats = DemandStats {
            mean: vec![1.0, 1.0],
            cov: vec![vec![0.5, -1.5], vec![-1.5, 0.5]],
        };
        assert!(matches!(
            fit_lognormal(&stats),
            Err(Error::LogMomentUndefined { i: 0, j: 1, .. })
        ));
    }

    #[test]
    fn zero_covariance_degenerates_to_the_mean_day() {
        let stats = diag_stats(vec![5.0, 10.0, 20.0], 0.0);
        let model = fit_lognormal(&stats).unwrap();
        let profiles = sample_profiles(&model, 4, 99).unwrap();
        for p in &profiles {
            for (i, &m) in stats.mean.iter().enumerate() {
                let rel = (p.get(i) - m).abs() / m;
                assert!(rel < 1e-3, "hour {i}: {} vs {m}", p.get(i));
            }
        }
    }

    #[test]
    fn zero_normals_map_to_the_log_location() {
        let model = fit_lognormal(&default_stats()).unwrap();
        let p = profile_from_normals(&model, &vec![0.0; 24]).unwrap();
        for i in 0..24 {
            assert!((p.get(i) - model.mu()[i].exp()).abs() < 1e-12);
        }
        assert!(profile_from_normals(&model, &[0.0; 3]).is_err());
    }

    #[test]
    fn sampling_is_deterministic_per_seed_and_index() {
        let model = fit_lognormal(&default_stats()).unwrap();
        let a = sample_profiles(&model, 6, 7).unwrap();
        let b = sample_profiles(&model, 6, 7).unwrap();
        assert_eq!(a, b);
        // A shorter batch is a prefix of a longer one.
        let c = sample_profiles(&model, 3, 7).unwrap();
        assert_eq!(&a[..3], &c[..]);
        let d = sample_profiles(&model, 6, 8).unwrap();
        assert_ne!(a, d);
        // Demand is strictly positive by construction.
        assert!(a.iter().all(|p| p.as_slice().iter().all(|&v| v > 0.0)));
    }
}
