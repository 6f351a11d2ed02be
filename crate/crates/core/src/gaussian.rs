//! Symplectic linear algebra on quadrature covariance matrices.
//!
//! Quadratures are ordered (x1, p1, x2, p2, ...) and scaled so the vacuum
//! covariance is the identity; the commutation relations are [x_j, p_k] =
//! 2i delta_jk, so the symplectic form is the block diagonal of [[0, 1],
//! [-1, 0]] and physicality reads sigma + i Omega >= 0.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

const SYMPLECTIC_TOL: f64 = 1e-10;

/// Symplectic form for `n_modes` modes in interleaved ordering.
pub fn omega(n_modes: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for j in 0..n_modes {
        m[(2 * j, 2 * j + 1)] = 1.0;
        m[(2 * j + 1, 2 * j)] = -1.0;
    }
    m
}

/// Real symmetric quadrature covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    mat: DMatrix<f64>,
}

impl CovarianceMatrix {
    /// Wraps a matrix that must already be symmetric to 1e-12.
    pub fn new(mat: DMatrix<f64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() || mat.nrows() % 2 != 0 {
            return Err(Error::DimensionMismatch { expected: mat.nrows(), actual: mat.ncols() });
        }
        let asym = (&mat - mat.transpose()).abs().max();
        if asym > 1e-12 {
            return Err(Error::Numerical(format!("covariance asymmetry {asym:.3e}")));
        }
        Ok(Self { mat })
    }

    /// Symmetrizes roundoff asymmetry and wraps.
    pub fn from_symmetric(mat: DMatrix<f64>) -> Self {
        let sym = (&mat + mat.transpose()) * 0.5;
        Self { mat: sym }
    }

    pub fn identity(n_modes: usize) -> Self {
        Self { mat: DMatrix::identity(2 * n_modes, 2 * n_modes) }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn n_modes(&self) -> usize {
        self.mat.nrows() / 2
    }

    /// N x N covariance of the x quadratures.
    pub fn x_block(&self) -> DMatrix<f64> {
        let n = self.n_modes();
        DMatrix::from_fn(n, n, |j, k| self.mat[(2 * j, 2 * k)])
    }

    /// Checks sigma + i Omega >= 0 via the real embedding
    /// [[sigma, -Omega], [Omega, sigma]] of that Hermitian matrix.
    pub fn is_physical(&self, tol: f64) -> bool {
        let n = self.n_modes();
        let om = omega(n);
        let d = 2 * n;
        let mut emb = DMatrix::zeros(2 * d, 2 * d);
        emb.view_mut((0, 0), (d, d)).copy_from(&self.mat);
        emb.view_mut((d, d), (d, d)).copy_from(&self.mat);
        emb.view_mut((0, d), (d, d)).copy_from(&(-&om));
        emb.view_mut((d, 0), (d, d)).copy_from(&om);
        let eig = emb.symmetric_eigenvalues();
        eig.iter().all(|&l| l > -tol)
    }
}

/// Real symplectic matrix, validated at construction.
#[derive(Debug, Clone)]
pub struct SymplecticMatrix {
    mat: DMatrix<f64>,
}

impl SymplecticMatrix {
    pub fn new(mat: DMatrix<f64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() || mat.nrows() % 2 != 0 {
            return Err(Error::DimensionMismatch { expected: mat.nrows(), actual: mat.ncols() });
        }
        let om = omega(mat.nrows() / 2);
        let defect = (&mat * &om * mat.transpose() - &om).abs().max();
        if defect > SYMPLECTIC_TOL {
            return Err(Error::Numerical(format!("symplectic defect {defect:.3e}")));
        }
        Ok(Self { mat })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn n_modes(&self) -> usize {
        self.mat.nrows() / 2
    }
}

/// Haar-random N x N unitary from QR of a complex Ginibre matrix with the
/// standard phase fix.
pub fn haar_unitary<R: Rng>(n: usize, rng: &mut R) -> DMatrix<Complex64> {
    let g = DMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) / 2f64.sqrt()
    });
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for k in 0..n {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, k)] *= phase;
        }
    }
    q
}

/// Embeds an N x N mode-space unitary (a -> U a) as a 2N x 2N orthogonal
/// symplectic matrix in interleaved quadrature ordering.
pub fn passive_symplectic_from_unitary(u: &DMatrix<Complex64>) -> SymplecticMatrix {
    let n = u.nrows();
    let mut s = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        for k in 0..n {
            let (re, im) = (u[(j, k)].re, u[(j, k)].im);
            s[(2 * j, 2 * k)] = re;
            s[(2 * j, 2 * k + 1)] = -im;
            s[(2 * j + 1, 2 * k)] = im;
            s[(2 * j + 1, 2 * k + 1)] = re;
        }
    }
    SymplecticMatrix::new(s).expect("embedding of a unitary is symplectic")
}

/// Haar-random passive (energy-preserving) symplectic network.
pub fn random_passive_symplectic<R: Rng>(n_modes: usize, rng: &mut R) -> SymplecticMatrix {
    let u = haar_unitary(n_modes, rng);
    passive_symplectic_from_unitary(&u)
}

/// Random active symplectic: passive * single-mode squeezers * passive
/// (inverse Bloch-Messiah), with squeezing parameters uniform in
/// [-max_squeeze, max_squeeze].
pub fn random_active_symplectic<R: Rng>(n_modes: usize, max_squeeze: f64, rng: &mut R) -> SymplecticMatrix {
    let left = random_passive_symplectic(n_modes, rng);
    let right = random_passive_symplectic(n_modes, rng);
    let mut z = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for j in 0..n_modes {
        let zj: f64 = rng.gen_range(-max_squeeze..=max_squeeze);
        z[(2 * j, 2 * j)] = zj.exp();
        z[(2 * j + 1, 2 * j + 1)] = (-zj).exp();
    }
    let s = left.matrix() * z * right.matrix();
    SymplecticMatrix::new(s).expect("product of symplectics is symplectic")
}

/// sigma -> S sigma S^T, symmetrized to kill roundoff asymmetry.
pub fn propagate(sigma: &CovarianceMatrix, s: &SymplecticMatrix) -> Result<CovarianceMatrix> {
    if sigma.matrix().nrows() != s.matrix().nrows() {
        return Err(Error::DimensionMismatch {
            expected: s.matrix().nrows(),
            actual: sigma.matrix().nrows(),
        });
    }
    let out = s.matrix() * sigma.matrix() * s.matrix().transpose();
    Ok(CovarianceMatrix::from_symmetric(out))
}

/// Upper triangle (with diagonal) of the x-quadrature covariance block in
/// row-major order; N(N+1)/2 entries.
pub fn x_features(sigma: &CovarianceMatrix) -> Vec<f64> {
    let xb = sigma.x_block();
    upper_triangle(&xb)
}

/// Row-major upper triangle of a square matrix.
pub fn upper_triangle(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for j in 0..n {
        for k in j..n {
            out.push(m[(j, k)]);
        }
    }
    out
}

/// Splits a symplectic acting on reservoir + input modes into the vectorized
/// linear update: returns (A, B) with A = M (x) M and B = N (x) N, where M and
/// N are the reservoir-row blocks of S. The reservoir covariance then obeys
/// vec(sigma_t^R) = A vec(sigma_{t-1}^R) + B vec(sigma_t).
pub fn vectorize_gaussian_reservoir(
    s: &SymplecticMatrix,
    n_reservoir_modes: usize,
    n_input_modes: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let dim = 2 * (n_reservoir_modes + n_input_modes);
    if s.matrix().nrows() != dim {
        return Err(Error::DimensionMismatch { expected: dim, actual: s.matrix().nrows() });
    }
    let dr = 2 * n_reservoir_modes;
    let di = 2 * n_input_modes;
    let m = s.matrix().view((0, 0), (dr, dr)).clone_owned();
    let n = s.matrix().view((0, dr), (dr, di)).clone_owned();
    Ok((m.kronecker(&m), n.kronecker(&n)))
}

/// Column-major vectorization, matching the Kronecker identity
/// vec(A X B^T) = (B (x) A) vec(X).
pub fn vec_matrix(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

/// Random pure-state covariance: a random active symplectic applied to the
/// vacuum. Handy wherever a generic physical covariance is needed.
pub fn random_pure_covariance<R: Rng>(n_modes: usize, rng: &mut R) -> CovarianceMatrix {
    let s = random_active_symplectic(n_modes, 0.7, rng);
    propagate(&CovarianceMatrix::identity(n_modes), &s).expect("dimensions match by construction")
}

/// Symplectic eigenvalues: moduli of the eigenvalues of Omega sigma, one per
/// mode (pure states have all equal to 1).
pub fn symplectic_eigenvalues(sigma: &CovarianceMatrix) -> Vec<f64> {
    let n = sigma.n_modes();
    let m = omega(n) * sigma.matrix();
    let eig = m.complex_eigenvalues();
    let mut mods: Vec<f64> = eig.iter().map(|c| c.norm()).collect();
    mods.sort_by(|a, b| b.partial_cmp(a).unwrap());
    mods.into_iter().step_by(2).collect()
}
