//! Exact moments of de-Gaussified states via Wick's theorem.
//!
//! A state O rho_G O^dagger / K, with O a finite product of ladder operators
//! and rho_G a zero-mean Gaussian state, has all its quadrature moments
//! expressible as Wick sums over perfect matchings of pair contractions.
//! The contractions are read off the covariance matrix in the crate-wide
//! convention x = a + a^dagger, [x, p] = 2i, vacuum covariance = identity.

use crate::error::{Error, Result};
use crate::gaussian::CovarianceMatrix;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::collections::HashMap;

/// A single annihilation (dagger = false) or creation (dagger = true)
/// operator on one mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LadderOp {
    pub mode: usize,
    pub dagger: bool,
}

impl LadderOp {
    pub fn annihilate(mode: usize) -> Self {
        Self { mode, dagger: false }
    }

    pub fn create(mode: usize) -> Self {
        Self { mode, dagger: true }
    }

    pub fn adjoint(self) -> Self {
        Self { mode: self.mode, dagger: !self.dagger }
    }
}

/// Ordered product of ladder operators; the leftmost entry acts last.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OperatorString {
    pub ops: Vec<LadderOp>,
}

impl OperatorString {
    pub fn new(ops: Vec<LadderOp>) -> Self {
        Self { ops }
    }

    pub fn identity() -> Self {
        Self { ops: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Reverses the order and flips every dagger.
    pub fn adjoint(&self) -> Self {
        Self { ops: self.ops.iter().rev().map(|op| op.adjoint()).collect() }
    }

    pub fn max_mode(&self) -> Option<usize> {
        self.ops.iter().map(|op| op.mode).max()
    }
}

/// Which ordered pair of ladder operators a contraction refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContractionKind {
    /// <a_j a_k>
    AnnAnn,
    /// <a_j^dag a_k^dag>
    CreCre,
    /// <a_j^dag a_k>
    CreAnn,
    /// <a_j a_k^dag>
    AnnCre,
}

/// Gaussian pair contraction of modes (j, k) read from the covariance
/// blocks, including the commutator terms on the diagonal.
pub fn pair_contraction(sigma: &CovarianceMatrix, j: usize, k: usize, kind: ContractionKind) -> Complex64 {
    let m = sigma.matrix();
    let xx = m[(2 * j, 2 * k)];
    let xp = m[(2 * j, 2 * k + 1)];
    let px = m[(2 * j + 1, 2 * k)];
    let pp = m[(2 * j + 1, 2 * k + 1)];
    let delta = if j == k { 1.0 } else { 0.0 };
    let quarter = 0.25;
    match kind {
        ContractionKind::AnnAnn => quarter * Complex64::new(xx - pp, xp + px),
        ContractionKind::CreCre => quarter * Complex64::new(xx - pp, -(xp + px)),
        ContractionKind::CreAnn => quarter * Complex64::new(xx + pp - 2.0 * delta, xp - px),
        ContractionKind::AnnCre => quarter * Complex64::new(xx + pp + 2.0 * delta, -(xp - px)),
    }
}

fn contract(sigma: &CovarianceMatrix, left: LadderOp, right: LadderOp) -> Complex64 {
    let kind = match (left.dagger, right.dagger) {
        (false, false) => ContractionKind::AnnAnn,
        (true, true) => ContractionKind::CreCre,
        (true, false) => ContractionKind::CreAnn,
        (false, true) => ContractionKind::AnnCre,
    };
    pair_contraction(sigma, left.mode, right.mode, kind)
}

/// All perfect matchings of {0, .., n-1}, built by pairing the smallest
/// unmatched index with each remaining one; (n-1)!! matchings for even n.
pub fn perfect_matchings(n: usize) -> Vec<Vec<(usize, usize)>> {
    let mut out = Vec::new();
    if n % 2 != 0 {
        return out;
    }
    let mut current = Vec::with_capacity(n / 2);
    let mut free: Vec<usize> = (0..n).collect();

    fn recurse(free: &mut Vec<usize>, current: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
        if free.is_empty() {
            out.push(current.clone());
            return;
        }
        let u = free[0];
        for i in 1..free.len() {
            let v = free[i];
            let mut rest: Vec<usize> = free[1..].to_vec();
            rest.remove(i - 1);
            current.push((u, v));
            recurse(&mut rest, current, out);
            current.pop();
        }
    }

    recurse(&mut free, &mut current, &mut out);
    out
}

/// Gaussian expectation of an operator string by explicit matching
/// enumeration; the reference route for [`gaussian_moment`].
pub fn gaussian_moment_by_enumeration(ops: &[LadderOp], sigma: &CovarianceMatrix) -> Complex64 {
    if ops.len() % 2 != 0 {
        return Complex64::new(0.0, 0.0);
    }
    if ops.is_empty() {
        return Complex64::new(1.0, 0.0);
    }
    perfect_matchings(ops.len())
        .iter()
        .map(|matching| {
            matching
                .iter()
                .map(|&(u, v)| contract(sigma, ops[u], ops[v]))
                .product::<Complex64>()
        })
        .sum()
}

/// Gaussian expectation of an operator string.
///
/// Odd strings vanish identically; even strings are summed over all perfect
/// matchings with the within-pair order inherited from the string. The sum is
/// evaluated by recursion on the set of unmatched positions, memoized so
/// repeated sub-moments are computed once.
pub fn gaussian_moment(ops: &[LadderOp], sigma: &CovarianceMatrix) -> Complex64 {
    let n = ops.len();
    if n % 2 != 0 {
        return Complex64::new(0.0, 0.0);
    }
    if n == 0 {
        return Complex64::new(1.0, 0.0);
    }
    assert!(n <= 32, "operator string too long for bitmask recursion");
    let mut memo: HashMap<u32, Complex64> = HashMap::new();
    let full: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    moment_rec(ops, sigma, full, &mut memo)
}

fn moment_rec(ops: &[LadderOp], sigma: &CovarianceMatrix, mask: u32, memo: &mut HashMap<u32, Complex64>) -> Complex64 {
    if mask == 0 {
        return Complex64::new(1.0, 0.0);
    }
    if let Some(&v) = memo.get(&mask) {
        return v;
    }
    let u = mask.trailing_zeros() as usize;
    let rest = mask & !(1 << u);
    let mut total = Complex64::new(0.0, 0.0);
    let mut bits = rest;
    while bits != 0 {
        let v = bits.trailing_zeros() as usize;
        bits &= bits - 1;
        let sub = rest & !(1 << v);
        total += contract(sigma, ops[u], ops[v]) * moment_rec(ops, sigma, sub, memo);
    }
    memo.insert(mask, total);
    total
}

/// Options for [`degaussify_covariance_with`].
#[derive(Debug, Clone, Copy)]
pub struct DegaussifyOptions {
    /// Heralding norms at or below this value are treated as impossible.
    pub kappa_min: f64,
    /// Longest supported operator string; 4 keeps the largest Wick sum at
    /// 10 operators (945 matchings).
    pub max_ops: usize,
}

impl Default for DegaussifyOptions {
    fn default() -> Self {
        Self { kappa_min: 1e-12, max_ops: 4 }
    }
}

/// First and second quadrature moments of O rho_G O^dagger / K.
#[derive(Debug, Clone)]
pub struct DeGaussified {
    /// Quadrature mean vector; exactly zero here, since every first moment is
    /// an odd-length Wick sum on a zero-mean Gaussian.
    pub mean: DVector<f64>,
    pub cov: CovarianceMatrix,
    /// Heralding norm K = <O^dag O>.
    pub norm: f64,
}

/// Covariance matrix after applying an operator string to a zero-mean
/// Gaussian state with covariance `sigma`.
pub fn degaussify_covariance(sigma: &CovarianceMatrix, string: &OperatorString) -> Result<DeGaussified> {
    degaussify_covariance_with(sigma, string, DegaussifyOptions::default())
}

pub fn degaussify_covariance_with(
    sigma: &CovarianceMatrix,
    string: &OperatorString,
    opts: DegaussifyOptions,
) -> Result<DeGaussified> {
    let n_modes = sigma.n_modes();
    let dim = 2 * n_modes;
    if string.is_empty() {
        return Ok(DeGaussified { mean: DVector::zeros(dim), cov: sigma.clone(), norm: 1.0 });
    }
    if string.len() > opts.max_ops {
        return Err(Error::Config(format!(
            "operator string of length {} exceeds the configured maximum {}",
            string.len(),
            opts.max_ops
        )));
    }
    if let Some(max_mode) = string.max_mode() {
        if max_mode >= n_modes {
            return Err(Error::DimensionMismatch { expected: n_modes, actual: max_mode + 1 });
        }
    }

    let left = string.adjoint().ops;
    let right = &string.ops;

    let mut full: Vec<LadderOp> = Vec::with_capacity(2 * string.len() + 2);
    full.extend_from_slice(&left);
    full.extend_from_slice(right);
    let k_c = gaussian_moment(&full, sigma);
    if k_c.im.abs() > 1e-9 {
        return Err(Error::Numerical(format!("heralding norm has imaginary residue {:.3e}", k_c.im)));
    }
    let k = k_c.re;
    if k <= opts.kappa_min {
        return Err(Error::HeraldingImpossible { norm: k, cutoff: opts.kappa_min });
    }

    // <O^dag b1 b2 O> / K for a middle pair (b1, b2).
    let sandwich = |b1: LadderOp, b2: LadderOp| -> Complex64 {
        let mut ops: Vec<LadderOp> = Vec::with_capacity(full.len() + 2);
        ops.extend_from_slice(&left);
        ops.push(b1);
        ops.push(b2);
        ops.extend_from_slice(right);
        gaussian_moment(&ops, sigma) / k
    };

    // x = a + a^dag, p = -i a + i a^dag.
    let quad_coeffs = |quad_ix: usize| -> [(LadderOp, Complex64); 2] {
        let mode = quad_ix / 2;
        if quad_ix % 2 == 0 {
            [
                (LadderOp::annihilate(mode), Complex64::new(1.0, 0.0)),
                (LadderOp::create(mode), Complex64::new(1.0, 0.0)),
            ]
        } else {
            [
                (LadderOp::annihilate(mode), Complex64::new(0.0, -1.0)),
                (LadderOp::create(mode), Complex64::new(0.0, 1.0)),
            ]
        }
    };

    let quad_moment = |m: usize, n: usize| -> Complex64 {
        let mut total = Complex64::new(0.0, 0.0);
        for (op_a, ca) in quad_coeffs(m) {
            for (op_b, cb) in quad_coeffs(n) {
                total += ca * cb * sandwich(op_a, op_b);
            }
        }
        total
    };

    let mut cov = DMatrix::zeros(dim, dim);
    for m in 0..dim {
        for n in m..dim {
            let sym = 0.5 * (quad_moment(m, n) + quad_moment(n, m));
            if sym.im.abs() > 1e-9 {
                return Err(Error::Numerical(format!(
                    "covariance entry ({m},{n}) has imaginary residue {:.3e}",
                    sym.im
                )));
            }
            cov[(m, n)] = sym.re;
            cov[(n, m)] = sym.re;
        }
    }

    Ok(DeGaussified {
        mean: DVector::zeros(dim),
        cov: CovarianceMatrix::from_symmetric(cov),
        norm: k,
    })
}

/// Builds the default photon-operation string: `n_ops` operations of one
/// kind, placed on modes 0, 1, 2, ... in order.
pub fn photon_op_string(n_ops: usize, subtract: bool) -> OperatorString {
    let ops = (0..n_ops)
        .map(|m| if subtract { LadderOp::annihilate(m) } else { LadderOp::create(m) })
        .collect();
    OperatorString::new(ops)
}
