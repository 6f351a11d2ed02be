//! Optimal linear readout and capacity estimation.
//!
//! Readouts are minimum-norm least-squares solutions over the features plus
//! a bias column, computed by SVD with a relative singular-value cutoff.
//! The capacity of a target is 1 - NMSE on the held-out test phase, clamped
//! to [0, 1]; small capacities are zeroed against the chi-square spurious
//! capacity threshold. The suite aggregates capacities over the Legendre
//! basis into total, per-delay, per-degree and cross-term sums.

use crate::encoding::EncodingConfig;
use crate::error::{Error, Result};
use crate::reservoir::{input_feature_run, SchemeRun};
use crate::signal::{target_on_range, BasisFunction, InputSeries};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use std::collections::BTreeMap;

const RANK_CUTOFF: f64 = 1e-10;

/// Thin SVD by one-sided Jacobi rotations: a = u diag(s) v^T with singular
/// values in descending order. Chosen over the Golub-Kahan route for its
/// accuracy on rank-deficient feature matrices.
pub fn thin_svd(a: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    let n = a.ncols();
    let mut w = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let eps = 1e-15;
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = w.column(p).dot(&w.column(p));
                let beta = w.column(q).dot(&w.column(q));
                let gamma = w.column(p).dot(&w.column(q));
                if gamma == 0.0 || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..w.nrows() {
                    let wp = w[(i, p)];
                    let wq = w[(i, q)];
                    w[(i, p)] = c * wp - s * wq;
                    w[(i, q)] = s * wp + c * wq;
                }
                for i in 0..n {
                    let vp = v[(i, p)];
                    let vq = v[(i, q)];
                    v[(i, p)] = c * vp - s * vq;
                    v[(i, q)] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap());
    let mut u = DMatrix::zeros(a.nrows(), n);
    let mut s = DVector::zeros(n);
    let mut v_sorted = DMatrix::zeros(n, n);
    for (k, &j) in order.iter().enumerate() {
        s[k] = norms[j];
        if norms[j] > 0.0 {
            u.set_column(k, &(w.column(j) / norms[j]));
        }
        v_sorted.set_column(k, &v.column(j));
    }
    (u, s, v_sorted)
}

/// Numerical rank against a relative singular-value cutoff.
pub fn rank(a: &DMatrix<f64>, rel_tol: f64) -> usize {
    let (_, s, _) = thin_svd(a);
    let smax = s.max();
    if smax <= 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > rel_tol * smax).count()
}

/// Trained linear readout: o = w . x + w0.
#[derive(Debug, Clone)]
pub struct ReadoutWeights {
    pub w: DVector<f64>,
    pub w0: f64,
}

/// SVD of the bias-augmented feature matrix, shared across targets.
pub struct FeatureDecomposition {
    u: DMatrix<f64>,
    /// V diag(1/s) over singular values kept by the rank cutoff.
    v_sinv: DMatrix<f64>,
    n_features: usize,
}

impl FeatureDecomposition {
    /// Decomposes the training features with an appended column of ones.
    pub fn new(x_train: &DMatrix<f64>) -> Result<Self> {
        let t = x_train.nrows();
        if t == 0 {
            return Err(Error::EmptySeries);
        }
        let m = x_train.ncols();
        let mut aug = DMatrix::from_element(t, m + 1, 1.0);
        aug.view_mut((0, 0), (t, m)).copy_from(x_train);
        let (u, s, mut v_sinv) = thin_svd(&aug);
        let keep = RANK_CUTOFF * s.max();
        for (k, mut col) in v_sinv.column_iter_mut().enumerate() {
            col *= if s[k] > keep && s[k] > 0.0 { 1.0 / s[k] } else { 0.0 };
        }
        Ok(Self { u, v_sinv, n_features: m })
    }

    /// Minimum-norm weights for one target.
    pub fn solve(&self, target: &DVector<f64>) -> ReadoutWeights {
        let coeffs = self.u.transpose() * target;
        let w_aug = &self.v_sinv * coeffs;
        let w = w_aug.rows(0, self.n_features).into_owned();
        ReadoutWeights { w, w0: w_aug[self.n_features] }
    }
}

/// Trains the minimum-norm least-squares readout (bias appended internally).
pub fn train(x_train: &DMatrix<f64>, target: &DVector<f64>) -> Result<ReadoutWeights> {
    if x_train.nrows() != target.len() {
        return Err(Error::DimensionMismatch { expected: x_train.nrows(), actual: target.len() });
    }
    Ok(FeatureDecomposition::new(x_train)?.solve(target))
}

/// Prediction of a readout over feature rows.
pub fn predict(x: &DMatrix<f64>, weights: &ReadoutWeights) -> DVector<f64> {
    let mut out = x * &weights.w;
    out.add_scalar_mut(weights.w0);
    out
}

fn capacity_from_predictions(predictions: &DVector<f64>, target: &DVector<f64>) -> Result<f64> {
    let target_norm: f64 = target.iter().map(|v| v * v).sum();
    if target_norm < 1e-300 {
        return Err(Error::ZeroTargetNorm);
    }
    let err: f64 = predictions.iter().zip(target.iter()).map(|(o, y)| (y - o).powi(2)).sum();
    let nmse = err / target_norm;
    Ok((1.0 - nmse).clamp(0.0, 1.0))
}

/// Capacity 1 - NMSE of the optimal readout, trained on the train phase and
/// evaluated on the test phase.
pub fn capacity(
    x_train: &DMatrix<f64>,
    x_test: &DMatrix<f64>,
    target_train: &DVector<f64>,
    target_test: &DVector<f64>,
) -> Result<f64> {
    let weights = train(x_train, target_train)?;
    capacity_from_predictions(&predict(x_test, &weights), target_test)
}

fn ln_gamma(x: f64) -> f64 {
    // Lanczos, g = 7
    const C: [f64; 9] = [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        return (std::f64::consts::PI / (std::f64::consts::PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = C[0];
    let t = x + 7.5;
    for (i, &c) in C.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized upper incomplete gamma Q(a, x), by power series for small x
/// and Lentz continued fraction in the tail.
fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        let mut sum = 1.0 / a;
        let mut term = sum;
        for n in 1..1000 {
            term *= x / (a + n as f64);
            sum += term;
            if term.abs() < sum.abs() * 1e-16 {
                break;
            }
        }
        return 1.0 - sum * (-x + a * x.ln() - ln_gamma(a)).exp();
    }
    let mut b = x + 1.0 - a;
    let mut c = 1e308;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..1000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < 1e-290 {
            d = 1e-290;
        }
        c = b + an / c;
        if c.abs() < 1e-290 {
            c = 1e-290;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Quantile x with Q(dof/2, x/2) = upper_p, by bisection.
fn chi_squared_upper_quantile(dof: f64, upper_p: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 8.0 * (dof + 50.0) + 16.0 * upper_p.ln().abs());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gamma_q(dof / 2.0, mid / 2.0) > upper_p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Spurious-capacity threshold: the (1-p) quantile of chi^2 with `m` degrees
/// of freedom, divided by the number of capacity-estimation samples.
pub fn threshold_value(t_samples: usize, m_features: usize, p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) || p == 0.0 {
        return Err(Error::Config(format!("threshold probability {p} outside (0, 1]")));
    }
    if p >= 1.0 {
        return Ok(0.0);
    }
    Ok(chi_squared_upper_quantile(m_features as f64, p) / t_samples as f64)
}

/// Zeroes a raw capacity lying at or below the threshold.
pub fn threshold(raw: f64, t_samples: usize, m_features: usize, p: f64) -> Result<f64> {
    let theta = threshold_value(t_samples, m_features, p)?;
    Ok(if raw > theta { raw } else { 0.0 })
}

/// Capacity of every basis function with delay/degree/cross-term aggregates.
#[derive(Debug, Clone, Serialize)]
pub struct CapacityReport {
    /// (basis label, raw capacity, thresholded capacity) per basis function.
    pub per_basis: Vec<(String, f64, f64)>,
    /// Sum of thresholded capacities.
    pub total: f64,
    /// Thresholded capacity summed over single-delay functions, by delay.
    pub per_delay: BTreeMap<usize, f64>,
    /// Thresholded capacity summed by total degree (all functions).
    pub per_degree: BTreeMap<u32, f64>,
    /// Thresholded capacity summed over multi-delay functions.
    pub cross_term_total: f64,
    pub threshold: f64,
    pub p_threshold: f64,
    pub t_train: usize,
    pub t_test: usize,
    pub n_features: usize,
    pub n_basis: usize,
}

/// Runs the capacity suite of a scheme run against a basis list.
///
/// Readouts are trained on the train phase and capacities estimated on the
/// test phase; the spurious-capacity threshold uses the training length and
/// the feature count.
pub fn ipc_suite(run: &SchemeRun, basis: &[BasisFunction], input: &InputSeries, p: f64) -> Result<CapacityReport> {
    let train_range = input.train_range();
    let test_range = input.test_range();
    if train_range.is_empty() || test_range.is_empty() {
        return Err(Error::Config("train and test phases must be nonempty".into()));
    }
    let max_delay = basis.iter().map(|b| b.max_delay()).max().unwrap_or(0);
    if train_range.start < max_delay.max(run.start) {
        return Err(Error::InsufficientHistory {
            step: train_range.start,
            needed: max_delay.max(run.start),
        });
    }

    let x_train = run.rows(train_range.clone())?;
    let x_test = run.rows(test_range.clone())?;
    let decomposition = FeatureDecomposition::new(&x_train)?;
    let theta = threshold_value(train_range.len(), run.n_features, p)?;

    let mut per_basis = Vec::with_capacity(basis.len());
    let mut total = 0.0;
    let mut per_delay: BTreeMap<usize, f64> = BTreeMap::new();
    let mut per_degree: BTreeMap<u32, f64> = BTreeMap::new();
    let mut cross_term_total = 0.0;

    for b in basis {
        let y_train = DVector::from_vec(target_on_range(b, input, train_range.clone())?);
        let y_test = DVector::from_vec(target_on_range(b, input, test_range.clone())?);
        let weights = decomposition.solve(&y_train);
        let raw = capacity_from_predictions(&predict(&x_test, &weights), &y_test)?;
        let kept = if raw > theta { raw } else { 0.0 };
        total += kept;
        if b.is_cross_term() {
            cross_term_total += kept;
        } else {
            *per_delay.entry(b.max_delay()).or_insert(0.0) += kept;
        }
        *per_degree.entry(b.total_degree()).or_insert(0.0) += kept;
        per_basis.push((b.label(), raw, kept));
    }

    Ok(CapacityReport {
        per_basis,
        total,
        per_delay,
        per_degree,
        cross_term_total,
        threshold: theta,
        p_threshold: p,
        t_train: train_range.len(),
        t_test: test_range.len(),
        n_features: run.n_features,
        n_basis: basis.len(),
    })
}

/// IPC of the encoded-input covariance features alone: the Gaussian bound.
pub fn gaussian_bound(enc: &EncodingConfig, input: &InputSeries, basis: &[BasisFunction], p: f64) -> Result<CapacityReport> {
    let run = input_feature_run(enc, input)?;
    ipc_suite(&run, basis, input, p)
}

/// Excess capacity: positive values witness non-Gaussian processing.
pub fn excess_capacity(total: f64, bound: f64) -> f64 {
    total - bound
}
