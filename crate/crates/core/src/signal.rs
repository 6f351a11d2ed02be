//! Input stream generation and the Legendre target basis.
//!
//! The input is an i.i.d. stream uniform on [-1, 1]. Targets are products of
//! normalized Legendre polynomials evaluated at delayed inputs; together they
//! form an orthonormal basis of the fading-memory function space, which is
//! what makes per-function capacities additive.

use crate::error::{Error, Result};
use crate::seeds::derive_rng;
use rand::distributions::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

/// Scalar input time series with phase boundaries.
#[derive(Debug, Clone)]
pub struct InputSeries {
    pub values: Vec<f64>,
    pub washout_len: usize,
    pub train_len: usize,
    pub test_len: usize,
    pub seed: u64,
}

impl InputSeries {
    /// Draws `washout + train + test` samples uniform on [-1, 1].
    pub fn generate(washout_len: usize, train_len: usize, test_len: usize, seed: u64) -> Result<Self> {
        let total = washout_len + train_len + test_len;
        if total == 0 {
            return Err(Error::EmptySeries);
        }
        let mut rng = derive_rng(seed, "signal/input", &[]);
        let dist = Uniform::new_inclusive(-1.0, 1.0);
        let values = (0..total).map(|_| dist.sample(&mut rng)).collect();
        Ok(Self { values, washout_len, train_len, test_len, seed })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Timestep range of the training phase.
    pub fn train_range(&self) -> std::ops::Range<usize> {
        self.washout_len..self.washout_len + self.train_len
    }

    /// Timestep range of the test phase.
    pub fn test_range(&self) -> std::ops::Range<usize> {
        let start = self.washout_len + self.train_len;
        start..start + self.test_len
    }
}

/// Draws `length` samples as a single training phase.
pub fn generate_input(length: usize, seed: u64) -> Result<InputSeries> {
    InputSeries::generate(0, length, 0, seed)
}

/// Legendre polynomial P_d(x) by the Bonnet three-term recurrence.
pub fn legendre(degree: u32, x: f64) -> f64 {
    match degree {
        0 => 1.0,
        1 => x,
        _ => {
            let mut p_prev = 1.0;
            let mut p = x;
            for k in 1..degree {
                let kf = k as f64;
                let next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
                p_prev = p;
                p = next;
            }
            p
        }
    }
}

/// sqrt(2d+1) * P_d(x); unit norm under Uniform(-1, 1).
pub fn normalized_legendre(degree: u32, x: f64) -> f64 {
    ((2 * degree + 1) as f64).sqrt() * legendre(degree, x)
}

/// A product of normalized Legendre factors at pairwise distinct delays.
///
/// Terms are kept sorted by delay; the degree-zero constant is never part of
/// a basis function (the readout bias absorbs it).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BasisFunction {
    terms: Vec<(usize, u32)>,
}

impl BasisFunction {
    pub fn new(mut terms: Vec<(usize, u32)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Config("basis function needs at least one term".into()));
        }
        if terms.iter().any(|&(_, d)| d == 0) {
            return Err(Error::Config("degree-0 factors are not enumerated".into()));
        }
        terms.sort_unstable();
        if terms.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Config("delays within a basis function must be distinct".into()));
        }
        Ok(Self { terms })
    }

    pub fn terms(&self) -> &[(usize, u32)] {
        &self.terms
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.iter().map(|&(_, d)| d).sum()
    }

    pub fn max_delay(&self) -> usize {
        self.terms.iter().map(|&(tau, _)| tau).max().unwrap_or(0)
    }

    /// True iff the function mixes two or more distinct delays.
    pub fn is_cross_term(&self) -> bool {
        self.terms.len() >= 2
    }

    /// Stable text key used in reports, e.g. `d2@t0*d1@t3`.
    pub fn label(&self) -> String {
        self.terms
            .iter()
            .map(|&(tau, d)| format!("d{d}@t{tau}"))
            .collect::<Vec<_>>()
            .join("*")
    }

    /// Evaluates the function at timestep `t` of the raw value stream.
    pub fn eval_at(&self, values: &[f64], t: usize) -> Result<f64> {
        let needed = self.max_delay();
        if t < needed || t >= values.len() {
            return Err(Error::InsufficientHistory { step: t, needed });
        }
        Ok(self
            .terms
            .iter()
            .map(|&(tau, d)| normalized_legendre(d, values[t - tau]))
            .product())
    }
}

/// Evaluates a basis function at every step with full history.
///
/// Entry `i` of the result corresponds to timestep `i + b.max_delay()`.
pub fn target_series(b: &BasisFunction, input: &InputSeries) -> Result<Vec<f64>> {
    let offset = b.max_delay();
    if input.len() <= offset {
        return Err(Error::InsufficientHistory { step: input.len(), needed: offset });
    }
    (offset..input.len()).map(|t| b.eval_at(&input.values, t)).collect()
}

/// Evaluates a basis function over an absolute timestep range.
pub fn target_on_range(b: &BasisFunction, input: &InputSeries, range: std::ops::Range<usize>) -> Result<Vec<f64>> {
    range.map(|t| b.eval_at(&input.values, t)).collect()
}

/// Enumerates every basis function with total degree, delay and factor-count
/// bounds, in canonical order: total degree, then factor count, then delay
/// tuple, then degree tuple.
pub fn enumerate_basis(max_total_degree: u32, max_delay: usize, max_factors: usize) -> Vec<BasisFunction> {
    let mut out = Vec::new();
    if max_total_degree == 0 || max_factors == 0 {
        return out;
    }
    let delays: Vec<usize> = (0..=max_delay).collect();
    let mut current: Vec<(usize, u32)> = Vec::new();

    fn recurse(
        delays: &[usize],
        next_delay_ix: usize,
        remaining_degree: u32,
        remaining_factors: usize,
        current: &mut Vec<(usize, u32)>,
        out: &mut Vec<BasisFunction>,
    ) {
        if !current.is_empty() {
            out.push(BasisFunction { terms: current.clone() });
        }
        if remaining_factors == 0 || remaining_degree == 0 {
            return;
        }
        for (i, &tau) in delays.iter().enumerate().skip(next_delay_ix) {
            for d in 1..=remaining_degree {
                current.push((tau, d));
                recurse(delays, i + 1, remaining_degree - d, remaining_factors - 1, current, out);
                current.pop();
            }
        }
    }

    recurse(&delays, 0, max_total_degree, max_factors, &mut current, &mut out);
    out.sort_by(|a, b| {
        let ka = (a.total_degree(), a.terms.len());
        let kb = (b.total_degree(), b.terms.len());
        ka.cmp(&kb)
            .then_with(|| {
                let da: Vec<usize> = a.terms.iter().map(|&(t, _)| t).collect();
                let db: Vec<usize> = b.terms.iter().map(|&(t, _)| t).collect();
                da.cmp(&db)
            })
            .then_with(|| a.terms.cmp(&b.terms))
    });
    out
}
