//! Finite-ensemble measurement model.
//!
//! Estimating an m x m covariance from M homodyne samples of a Gaussian state
//! gives a sample covariance with (M-1) Sigma_hat ~ W_m(Sigma, M-1). Draws are
//! generated by the Bartlett decomposition, O(m^2) per draw and exact in
//! distribution. For de-Gaussified states the same law is used with the exact
//! non-Gaussian covariance as scale matrix, which is exact in the Gaussian
//! limit and increasingly accurate as M grows.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

/// Finite-ensemble sampling settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingConfig {
    /// Ensemble size M; must satisfy M >= m + 2 for the measured block.
    pub ensemble_size: u64,
    pub enabled: bool,
}

impl SamplingConfig {
    pub fn exact() -> Self {
        Self { ensemble_size: 0, enabled: false }
    }

    pub fn with_ensemble(m: u64) -> Self {
        Self { ensemble_size: m, enabled: true }
    }
}

/// Draws a sample covariance Sigma_hat with (M-1) Sigma_hat ~ W_m(Sigma, M-1).
pub fn wishart_sample<R: Rng>(sigma: &DMatrix<f64>, ensemble_size: u64, rng: &mut R) -> Result<DMatrix<f64>> {
    let m = sigma.nrows();
    if sigma.ncols() != m {
        return Err(Error::DimensionMismatch { expected: m, actual: sigma.ncols() });
    }
    if ensemble_size < m as u64 + 2 {
        return Err(Error::Config(format!(
            "ensemble size {ensemble_size} too small for an {m}x{m} covariance (need >= m + 2)"
        )));
    }
    let chol = sigma.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    let l = chol.l();

    let nu = (ensemble_size - 1) as f64;
    let mut bartlett = DMatrix::zeros(m, m);
    for i in 0..m {
        let chi = ChiSquared::new(nu - i as f64).map_err(|e| Error::Numerical(e.to_string()))?;
        bartlett[(i, i)] = chi.sample(rng).sqrt();
        for j in 0..i {
            bartlett[(i, j)] = rng.sample::<f64, _>(StandardNormal);
        }
    }
    let factor = l * bartlett;
    Ok(&factor * factor.transpose() / nu)
}

/// Replaces the exact x-quadrature covariance block by a fresh Wishart draw
/// and returns its upper triangle as the feature vector. Returns the features
/// and whether the block needed a diagonal regularization to factor.
pub fn noisy_features<R: Rng>(x_block: &DMatrix<f64>, ensemble_size: u64, rng: &mut R) -> Result<(Vec<f64>, bool)> {
    match wishart_sample(x_block, ensemble_size, rng) {
        Ok(sample) => Ok((crate::gaussian::upper_triangle(&sample), false)),
        Err(Error::NotPositiveDefinite) => {
            let bumped = x_block + DMatrix::identity(x_block.nrows(), x_block.ncols()) * 1e-10;
            let sample = wishart_sample(&bumped, ensemble_size, rng)?;
            Ok((crate::gaussian::upper_triangle(&sample), true))
        }
        Err(e) => Err(e),
    }
}
