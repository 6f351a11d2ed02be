//! Input encoding into multimode squeezed-vacuum covariance matrices.
//!
//! Each mode carries a single-mode squeezed vacuum of fixed magnitude `r`
//! whose squeezing phase is a linear function of the recent input window,
//! phi_t[j] = sum_tau c[j][tau] * s_{t-tau}. Quadratures are scaled so that
//! the vacuum covariance is the identity. The phase enters as an ellipse
//! rotation by phi/2, which makes every covariance entry an affine function
//! of cos(phi) and sin(phi).

use crate::error::{Error, Result};
use crate::gaussian::CovarianceMatrix;
use crate::seeds::derive_rng;
use crate::signal::InputSeries;
use nalgebra::{DMatrix, Matrix2};
use rand::distributions::{Distribution, Uniform};
use rand::Rng;

/// Parameters of the squeezed-vacuum encoder.
#[derive(Debug, Clone)]
pub struct EncodingConfig {
    pub n_modes: usize,
    /// Squeezing magnitude, dimensionless; r = 0 encodes vacuum.
    pub r: f64,
    pub tau_max: usize,
    /// Row j holds the phase coefficients of mode j, one per delay 0..=tau_max.
    pub coefficients: Vec<Vec<f64>>,
    pub identical_modes: bool,
}

impl EncodingConfig {
    pub fn new(n_modes: usize, r: f64, tau_max: usize, identical_modes: bool, seed: u64) -> Result<Self> {
        let mut rng = derive_rng(seed, "encoding/coefficients", &[]);
        Self::with_rng(n_modes, r, tau_max, identical_modes, &mut rng)
    }

    pub fn with_rng<R: Rng>(n_modes: usize, r: f64, tau_max: usize, identical_modes: bool, rng: &mut R) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::Config("encoding needs at least one mode".into()));
        }
        if r < 0.0 {
            return Err(Error::Config("squeezing magnitude must be nonnegative".into()));
        }
        let coefficients = draw_coefficients(n_modes, tau_max, identical_modes, rng);
        Ok(Self { n_modes, r, tau_max, coefficients, identical_modes })
    }

    /// Interval from which each phase coefficient is drawn.
    pub fn coefficient_interval(tau_max: usize) -> (f64, f64) {
        // At tau_max = 0 the nominal interval [0.1/tau_max, 2pi/tau_max] is
        // singular; we use the tau_max = 1 interval instead.
        let tau_bar = tau_max.max(1) as f64;
        (0.1 / tau_bar, 2.0 * std::f64::consts::PI / tau_bar)
    }

    /// Phase of mode `j` at timestep `t`: the coefficient row dotted with the
    /// input window ending at `t`.
    pub fn phase_at(&self, values: &[f64], t: usize, mode: usize) -> Result<f64> {
        if t < self.tau_max || t >= values.len() {
            return Err(Error::InsufficientHistory { step: t, needed: self.tau_max });
        }
        Ok(self.coefficients[mode]
            .iter()
            .enumerate()
            .map(|(tau, c)| c * values[t - tau])
            .sum())
    }

    /// Phases of all modes at timestep `t`.
    pub fn phases_at(&self, values: &[f64], t: usize) -> Result<Vec<f64>> {
        (0..self.n_modes).map(|j| self.phase_at(values, t, j)).collect()
    }
}

/// Per-mode phase sequences over a timestep range.
#[derive(Debug, Clone)]
pub struct PhaseSeries {
    /// `phases[i][j]` is the phase of mode j at timestep `start + i`.
    pub phases: Vec<Vec<f64>>,
    pub start: usize,
}

impl PhaseSeries {
    pub fn compute(cfg: &EncodingConfig, input: &InputSeries, range: std::ops::Range<usize>) -> Result<Self> {
        let start = range.start;
        let phases = range.map(|t| cfg.phases_at(&input.values, t)).collect::<Result<_>>()?;
        Ok(Self { phases, start })
    }
}

/// Draws the N x (tau_max + 1) coefficient matrix, uniform on the interval of
/// [`EncodingConfig::coefficient_interval`], independent per mode and delay.
/// With `identical_modes`, one row is drawn and replicated.
pub fn draw_coefficients<R: Rng>(n_modes: usize, tau_max: usize, identical_modes: bool, rng: &mut R) -> Vec<Vec<f64>> {
    let (lo, hi) = EncodingConfig::coefficient_interval(tau_max);
    let dist = Uniform::new_inclusive(lo, hi);
    if identical_modes {
        let row: Vec<f64> = (0..=tau_max).map(|_| dist.sample(rng)).collect();
        vec![row; n_modes]
    } else {
        (0..n_modes)
            .map(|_| (0..=tau_max).map(|_| dist.sample(rng)).collect())
            .collect()
    }
}

/// Covariance of a single-mode squeezed vacuum with magnitude `r` and phase
/// `phi`: R(phi/2) diag(e^{2r}, e^{-2r}) R(phi/2)^T.
pub fn single_mode_squeezed_cov(r: f64, phi: f64) -> Matrix2<f64> {
    let (sin, cos) = (phi / 2.0).sin_cos();
    let rot = Matrix2::new(cos, -sin, sin, cos);
    let diag = Matrix2::new((2.0 * r).exp(), 0.0, 0.0, (-2.0 * r).exp());
    rot * diag * rot.transpose()
}

/// Encodes the input at timestep `t` as a block-diagonal 2N x 2N covariance.
/// First moments are zero by construction.
pub fn encode(input: &InputSeries, cfg: &EncodingConfig, t: usize) -> Result<CovarianceMatrix> {
    let phases = cfg.phases_at(&input.values, t)?;
    Ok(encode_phases(cfg.r, &phases))
}

/// Assembles the block-diagonal covariance from per-mode phases.
pub fn encode_phases(r: f64, phases: &[f64]) -> CovarianceMatrix {
    let n = phases.len();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for (j, &phi) in phases.iter().enumerate() {
        let block = single_mode_squeezed_cov(r, phi);
        m.view_mut((2 * j, 2 * j), (2, 2)).copy_from(&block);
    }
    CovarianceMatrix::from_symmetric(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian;
    use crate::signal::generate_input;
    use approx::assert_relative_eq;

    #[test]
    fn coefficient_ranges() {
        let mut rng = derive_rng(1, "t", &[]);
        let c = draw_coefficients(3, 2, false, &mut rng);
        assert_eq!(c.len(), 3);
        for row in &c {
            assert_eq!(row.len(), 3);
            for &v in row {
                assert!((0.05..=std::f64::consts::PI).contains(&v), "{v}");
            }
        }
        let c = draw_coefficients(1, 0, false, &mut rng);
        assert!((0.1..=2.0 * std::f64::consts::PI).contains(&c[0][0]));
    }

    #[test]
    fn coefficients_deterministic_and_identical_modes() {
        let a = EncodingConfig::new(4, 0.75, 2, false, 9).unwrap();
        let b = EncodingConfig::new(4, 0.75, 2, false, 9).unwrap();
        assert_eq!(a.coefficients, b.coefficients);
        let c = EncodingConfig::new(4, 0.75, 2, true, 9).unwrap();
        assert!(c.coefficients.iter().all(|row| *row == c.coefficients[0]));
    }

    #[test]
    fn vacuum_block_is_identity() {
        let m = single_mode_squeezed_cov(0.0, 1.3);
        assert_relative_eq!(m, Matrix2::identity(), epsilon = 1e-14);
    }

    #[test]
    fn squeezed_block_closed_form() {
        let m = single_mode_squeezed_cov(0.75, 0.0);
        assert_relative_eq!(m[(0, 0)], 4.481689070338065, max_relative = 1e-12);
        assert_relative_eq!(m[(1, 1)], 0.22313016014842982, max_relative = 1e-12);
        assert_relative_eq!(m[(0, 1)], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn squeezed_block_trig_form() {
        // entries must be affine in cos(phi), sin(phi)
        for &phi in &[0.3, 1.1, 2.9, -0.8] {
            let m = single_mode_squeezed_cov(0.75, phi);
            let (c2r, s2r) = ((1.5f64).cosh(), (1.5f64).sinh());
            assert_relative_eq!(m[(0, 0)], c2r + s2r * phi.cos(), max_relative = 1e-12);
            assert_relative_eq!(m[(1, 1)], c2r - s2r * phi.cos(), max_relative = 1e-12);
            assert_relative_eq!(m[(0, 1)], s2r * phi.sin(), max_relative = 1e-12);
        }
    }

    #[test]
    fn block_determinant_is_one() {
        for &(r, phi) in &[(0.0, 0.0), (0.75, 1.2), (1.5, -2.0), (0.3, 6.0)] {
            let m = single_mode_squeezed_cov(r, phi);
            assert_relative_eq!(m.determinant(), 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn encode_vacuum_and_block_structure() {
        let input = generate_input(10, 3).unwrap();
        let cfg = EncodingConfig::new(2, 0.0, 0, false, 3).unwrap();
        let sigma = encode(&input, &cfg, 0).unwrap();
        assert_relative_eq!(sigma.matrix(), &DMatrix::identity(4, 4), epsilon = 1e-14);

        let cfg = EncodingConfig::new(3, 0.75, 1, false, 3).unwrap();
        let sigma = encode(&input, &cfg, 5).unwrap();
        let m = sigma.matrix();
        for j in 0..3 {
            for k in 0..3 {
                if j != k {
                    let block = m.view((2 * j, 2 * k), (2, 2));
                    assert!(block.iter().all(|&v| v == 0.0));
                }
            }
        }
    }

    #[test]
    fn encode_requires_history() {
        let input = generate_input(10, 3).unwrap();
        let cfg = EncodingConfig::new(1, 0.75, 4, false, 3).unwrap();
        assert!(encode(&input, &cfg, 2).is_err());
        assert!(encode(&input, &cfg, 4).is_ok());
    }

    #[test]
    fn encoded_states_are_physical_pure() {
        let input = generate_input(40, 21).unwrap();
        let cfg = EncodingConfig::new(3, 0.75, 2, false, 21).unwrap();
        for t in 2..40 {
            let sigma = encode(&input, &cfg, t).unwrap();
            assert!(sigma.is_physical(1e-8));
            let nus = gaussian::symplectic_eigenvalues(&sigma);
            for nu in nus {
                assert_relative_eq!(nu, 1.0, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn phase_is_linear_in_window() {
        let input = generate_input(30, 5).unwrap();
        let cfg = EncodingConfig::new(2, 0.75, 3, false, 5).unwrap();
        for t in 3..30 {
            for j in 0..2 {
                let direct: f64 = (0..=3).map(|tau| cfg.coefficients[j][tau] * input.values[t - tau]).sum();
                assert_relative_eq!(cfg.phase_at(&input.values, t, j).unwrap(), direct, max_relative = 1e-14);
            }
        }
    }

    #[test]
    fn identical_modes_give_identical_blocks() {
        let input = generate_input(20, 2).unwrap();
        let cfg = EncodingConfig::new(3, 0.75, 1, true, 2).unwrap();
        for t in 1..20 {
            let sigma = encode(&input, &cfg, t).unwrap();
            let m = sigma.matrix();
            let b0 = m.view((0, 0), (2, 2)).clone_owned();
            for j in 1..3 {
                let bj = m.view((2 * j, 2 * j), (2, 2)).clone_owned();
                assert_relative_eq!(b0, bj, epsilon = 1e-14);
            }
        }
    }
}
