//! Brute-force truncated Fock-space simulator.
//!
//! Ground truth for the Wick engine and the Gaussian propagation path on
//! small systems. States live on a product of per-mode Fock spaces truncated
//! at a cutoff occupation; mode 0 has the fastest-varying index. Gaussian
//! unitaries are applied by exponentiating truncated quadratic generators,
//! ladder operators act directly on amplitudes.
//!
//! Squeeze convention: `build_squeezed_vacuum(r, phi, ..)` produces the state
//! whose covariance is R(phi/2) diag(e^{2r}, e^{-2r}) R(phi/2)^T, matching
//! `encoding::single_mode_squeezed_cov`; this corresponds to the generator
//! (xi* a^2 - xi a^dag^2)/2 with xi = -r e^{i phi}.

use crate::error::{Error, Result};
use crate::gaussian::{self, CovarianceMatrix};
use crate::wick::{self, LadderOp, OperatorString};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

const LEAKAGE_LIMIT: f64 = 1e-6;

/// Complex matrix exponential by scaling and squaring with a Taylor series.
pub fn expm(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = a.nrows();
    let norm = a.iter().map(|c| c.norm()).fold(0.0, f64::max) * n as f64;
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scale = Complex64::new(0.5f64.powi(squarings as i32), 0.0);
    let b = a * scale;

    let mut result = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..=40 {
        term = (&term * &b) / Complex64::new(k as f64, 0.0);
        result += &term;
        let tn = term.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if tn < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Pure state on a truncated multimode Fock space.
#[derive(Debug, Clone)]
pub struct FockState {
    /// dims[j] = cutoff_j + 1; amplitude index is n_0 + dims_0 n_1 + ...
    pub dims: Vec<usize>,
    pub amps: Vec<Complex64>,
}

impl FockState {
    pub fn vacuum(cutoffs: &[usize]) -> Self {
        let dims: Vec<usize> = cutoffs.iter().map(|c| c + 1).collect();
        let total: usize = dims.iter().product();
        let mut amps = vec![Complex64::new(0.0, 0.0); total];
        amps[0] = Complex64::new(1.0, 0.0);
        Self { dims, amps }
    }

    pub fn n_modes(&self) -> usize {
        self.dims.len()
    }

    fn stride(&self, mode: usize) -> usize {
        self.dims[..mode].iter().product()
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if n < 1e-150 {
            return Err(Error::HeraldingImpossible { norm: n * n, cutoff: 1e-150 });
        }
        for a in &mut self.amps {
            *a /= Complex64::new(n, 0.0);
        }
        Ok(())
    }

    /// Probability mass with any mode occupation in its top two shells.
    pub fn leakage(&self) -> f64 {
        let mut total = 0.0;
        for (ix, amp) in self.amps.iter().enumerate() {
            let p = amp.norm_sqr();
            if p == 0.0 {
                continue;
            }
            let mut rem = ix;
            for &d in &self.dims {
                let occ = rem % d;
                rem /= d;
                if occ + 2 >= d {
                    total += p;
                    break;
                }
            }
        }
        total
    }

    /// Tensor product; the first factor holds the lowest mode indices.
    pub fn product(states: &[FockState]) -> Self {
        assert!(!states.is_empty());
        let mut out = states[0].clone();
        for s in &states[1..] {
            let mut dims = out.dims.clone();
            dims.extend_from_slice(&s.dims);
            let mut amps = Vec::with_capacity(out.amps.len() * s.amps.len());
            for &hi in &s.amps {
                for &lo in &out.amps {
                    amps.push(hi * lo);
                }
            }
            out = Self { dims, amps };
        }
        out
    }

    /// Applies a single ladder operator; the result is unnormalized.
    pub fn apply_ladder(&self, op: LadderOp) -> Self {
        let stride = self.stride(op.mode);
        let dim = self.dims[op.mode];
        let mut amps = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (ix, &amp) in self.amps.iter().enumerate() {
            if amp == Complex64::new(0.0, 0.0) {
                continue;
            }
            let occ = (ix / stride) % dim;
            if op.dagger {
                if occ + 1 < dim {
                    amps[ix + stride] += ((occ + 1) as f64).sqrt() * amp;
                }
            } else if occ > 0 {
                amps[ix - stride] += (occ as f64).sqrt() * amp;
            }
        }
        Self { dims: self.dims.clone(), amps }
    }

    /// Applies an operator string (leftmost entry acts last).
    pub fn apply_operator_string(&self, string: &OperatorString) -> Self {
        let mut state = self.clone();
        for op in string.ops.iter().rev() {
            state = state.apply_ladder(*op);
        }
        state
    }

    /// Applies exp(i sum_jk h[j][k] a_j^dag a_k); `h` must be Hermitian.
    /// This realizes the mode transformation a -> e^{iH} a.
    pub fn apply_passive_network(&self, h: &DMatrix<Complex64>) -> Result<Self> {
        let n = self.n_modes();
        if h.nrows() != n || h.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: h.nrows() });
        }
        let herm = (h - h.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max);
        if herm > 1e-12 {
            return Err(Error::Numerical(format!("network generator not Hermitian: {herm:.3e}")));
        }
        let total = self.amps.len();
        let mut gen = DMatrix::zeros(total, total);
        for ix in 0..total {
            let mut occ = Vec::with_capacity(n);
            let mut rem = ix;
            for &d in &self.dims {
                occ.push(rem % d);
                rem /= d;
            }
            for k in 0..n {
                if occ[k] == 0 {
                    continue;
                }
                for j in 0..n {
                    if h[(j, k)] == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    let nj_after_k = occ[j] - usize::from(j == k);
                    if nj_after_k + 1 >= self.dims[j] {
                        continue;
                    }
                    let target = ix - self.stride(k) + self.stride(j);
                    let coeff = ((occ[k] as f64) * (nj_after_k as f64 + 1.0)).sqrt();
                    gen[(target, ix)] += h[(j, k)] * coeff;
                }
            }
        }
        let u = expm(&(gen * Complex64::new(0.0, 1.0)));
        let amps_vec = DVector::from_column_slice(&self.amps);
        let out = u * amps_vec;
        Ok(Self { dims: self.dims.clone(), amps: out.as_slice().to_vec() })
    }

    /// Quadrature means and symmetrized covariance in the (x1, p1, ...) order.
    pub fn quadrature_moments(&self) -> (DVector<f64>, CovarianceMatrix) {
        let n = self.n_modes();
        let dim = 2 * n;
        // |phi_m> = xi_m |psi>
        let mut phis: Vec<Vec<Complex64>> = Vec::with_capacity(dim);
        for mode in 0..n {
            let down = self.apply_ladder(LadderOp::annihilate(mode));
            let up = self.apply_ladder(LadderOp::create(mode));
            let x: Vec<Complex64> = down.amps.iter().zip(&up.amps).map(|(a, b)| a + b).collect();
            let p: Vec<Complex64> = down
                .amps
                .iter()
                .zip(&up.amps)
                .map(|(a, b)| Complex64::new(0.0, -1.0) * a + Complex64::new(0.0, 1.0) * b)
                .collect();
            phis.push(x);
            phis.push(p);
        }
        let inner = |a: &[Complex64], b: &[Complex64]| -> Complex64 {
            a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
        };
        let means = DVector::from_fn(dim, |m, _| inner(&self.amps, &phis[m]).re);
        let mut cov = DMatrix::zeros(dim, dim);
        for m in 0..dim {
            for k in m..dim {
                let val = inner(&phis[m], &phis[k]).re - means[m] * means[k];
                cov[(m, k)] = val;
                cov[(k, m)] = val;
            }
        }
        (means, CovarianceMatrix::from_symmetric(cov))
    }
}

/// Single-mode squeezed vacuum at the given cutoff, from the matrix
/// exponential of the truncated squeeze generator.
pub fn build_squeezed_vacuum(r: f64, phi: f64, cutoff: usize) -> Result<FockState> {
    let dim = cutoff + 1;
    let mut a = DMatrix::zeros(dim, dim);
    for k in 1..dim {
        a[(k - 1, k)] = Complex64::new((k as f64).sqrt(), 0.0);
    }
    let adag = a.adjoint();
    let xi = Complex64::from_polar(r, phi + std::f64::consts::PI);
    let gen = (&a * &a) * (xi.conj() * 0.5) - (&adag * &adag) * (xi * 0.5);
    let u = expm(&gen);
    let amps: Vec<Complex64> = (0..dim).map(|k| u[(k, 0)]).collect();
    let mut state = FockState { dims: vec![dim], amps };
    state.normalize()?;
    let leakage = state.leakage();
    if leakage > LEAKAGE_LIMIT {
        return Err(Error::CutoffInsufficient { leakage, limit: LEAKAGE_LIMIT });
    }
    Ok(state)
}

/// One row of the oracle-vs-Wick comparison table.
#[derive(Debug, Clone)]
pub struct OracleCase {
    pub name: String,
    /// max |difference| / max(1, reference scale)
    pub gap: f64,
    pub tol: f64,
}

impl OracleCase {
    pub fn passed(&self) -> bool {
        self.gap <= self.tol
    }
}

fn matrix_gap(found: &DMatrix<f64>, reference: &DMatrix<f64>) -> f64 {
    let scale = reference.abs().max().max(1.0);
    (found - reference).abs().max() / scale
}

fn scalar_gap(found: f64, reference: f64) -> f64 {
    (found - reference).abs() / reference.abs().max(1.0)
}

/// Deterministic Hermitian network generator used by the two-mode cases.
fn test_network_generator(n: usize, seed: u64) -> DMatrix<Complex64> {
    use rand::Rng;
    let mut rng = crate::seeds::derive_rng(seed, "oracle/network", &[]);
    let g = DMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    (&g + g.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Runs every oracle-vs-Wick comparison and returns the table.
pub fn oracle_check() -> Result<Vec<OracleCase>> {
    let mut cases = Vec::new();

    // Matching counts (2q-1)!!.
    let mut count_gap = 0.0f64;
    let mut expect = 1usize;
    for q in 1..=5usize {
        expect *= 2 * q - 1;
        let got = wick::perfect_matchings(2 * q).len();
        count_gap = count_gap.max((got as f64 - expect as f64).abs());
    }
    cases.push(OracleCase { name: "perfect matching counts (2q-1)!!".into(), gap: count_gap, tol: 0.0 });

    // Squeezed vacuum photon number.
    let r = 0.75;
    let state = build_squeezed_vacuum(r, 0.0, 40)?;
    let n_op = state.apply_ladder(LadderOp::annihilate(0));
    let mean_n = n_op.norm().powi(2);
    cases.push(OracleCase {
        name: "squeezed vacuum <n> = sinh^2 r (cutoff 40)".into(),
        gap: scalar_gap(mean_n, r.sinh().powi(2)),
        tol: 1e-8,
    });

    // Vacuum covariance.
    let (_, vac_cov) = FockState::vacuum(&[10, 10]).quadrature_moments();
    cases.push(OracleCase {
        name: "vacuum covariance = identity".into(),
        gap: matrix_gap(vac_cov.matrix(), &DMatrix::identity(4, 4)),
        tol: 1e-10,
    });

    // Single-mode photon subtraction and addition at cutoff 40.
    for (label, subtract) in [("subtracted", true), ("added", false)] {
        for phi in [0.0, 0.9] {
            let sigma = crate::encoding::encode_phases(r, &[phi]);
            let string = wick::photon_op_string(1, subtract);
            let predicted = wick::degaussify_covariance(&sigma, &string)?;

            let state = build_squeezed_vacuum(r, phi, 40)?;
            let heralded = state.apply_operator_string(&string);
            let k_oracle = heralded.norm().powi(2);
            let mut heralded = heralded;
            heralded.normalize()?;
            let (_, cov_oracle) = heralded.quadrature_moments();

            cases.push(OracleCase {
                name: format!("1-mode {label} r=0.75 phi={phi} covariance (cutoff 40)"),
                gap: matrix_gap(cov_oracle.matrix(), predicted.cov.matrix()),
                tol: 1e-6,
            });
            cases.push(OracleCase {
                name: format!("1-mode {label} r=0.75 phi={phi} heralding norm"),
                gap: scalar_gap(k_oracle, predicted.norm),
                tol: 1e-6,
            });
        }
    }

    // Two-mode: squeezed inputs + passive network + one subtraction,
    // cutoff 14. Squeezing kept moderate so the cutoff-14 leakage gate holds.
    {
        let r2 = 0.35;
        let phis = [0.3, 1.2];
        let cutoff = 14;
        let h = test_network_generator(2, 77);
        let u = expm(&(&h * Complex64::new(0.0, 1.0)));
        let s = gaussian::passive_symplectic_from_unitary(&u);

        let sigma_in = crate::encoding::encode_phases(r2, &phis);
        let sigma_out = gaussian::propagate(&sigma_in, &s)?;
        let string = wick::photon_op_string(1, true);
        let predicted = wick::degaussify_covariance(&sigma_out, &string)?;

        let modes: Vec<FockState> = phis
            .iter()
            .map(|&phi| build_squeezed_vacuum(r2, phi, cutoff))
            .collect::<Result<_>>()?;
        let state = FockState::product(&modes).apply_passive_network(&h)?;
        let heralded = state.apply_operator_string(&string);
        let k_oracle = heralded.norm().powi(2);
        let mut heralded = heralded;
        heralded.normalize()?;
        let (_, cov_oracle) = heralded.quadrature_moments();

        cases.push(OracleCase {
            name: "2-mode network + 1 subtraction covariance (cutoff 14)".into(),
            gap: matrix_gap(cov_oracle.matrix(), predicted.cov.matrix()),
            tol: 1e-4,
        });
        cases.push(OracleCase {
            name: "2-mode network + 1 subtraction heralding norm".into(),
            gap: scalar_gap(k_oracle, predicted.norm),
            tol: 1e-6,
        });

        // Gaussian propagation agreement at a roomier cutoff.
        let cutoff_g = 20;
        let modes: Vec<FockState> = phis
            .iter()
            .map(|&phi| build_squeezed_vacuum(r2, phi, cutoff_g))
            .collect::<Result<_>>()?;
        let state = FockState::product(&modes).apply_passive_network(&h)?;
        let (_, cov_gauss) = state.quadrature_moments();
        cases.push(OracleCase {
            name: "2-mode Gaussian propagation (cutoff 20)".into(),
            gap: matrix_gap(cov_gauss.matrix(), sigma_out.matrix()),
            tol: 1e-6,
        });
    }

    Ok(cases)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::single_mode_squeezed_cov;
    use approx::assert_relative_eq;

    #[test]
    fn vacuum_moments() {
        let state = FockState::vacuum(&[12]);
        let (mean, cov) = state.quadrature_moments();
        assert!(mean.amax() < 1e-14);
        assert!((cov.matrix() - DMatrix::identity(2, 2)).abs().max() < 1e-14);
    }

    #[test]
    fn squeezed_vacuum_matches_closed_form_amplitudes() {
        // c_{2n} = (e^{i phi} tanh r)^n sqrt((2n)!)/(2^n n!) / sqrt(cosh r);
        // compared away from the top shells, where the truncated generator
        // distorts the state at the 1e-5 level.
        let (r, phi, cutoff) = (0.75, 0.6, 40);
        let state = build_squeezed_vacuum(r, phi, cutoff).unwrap();
        let mut ln_fact = vec![0.0f64; cutoff + 1];
        for k in 1..=cutoff {
            ln_fact[k] = ln_fact[k - 1] + (k as f64).ln();
        }
        for n in 0..=15 {
            let mag = (0.5 * ln_fact[2 * n] - ln_fact[n] - (n as f64) * 2f64.ln()).exp()
                * r.tanh().powi(n as i32)
                / r.cosh().sqrt();
            let expect = Complex64::from_polar(mag, phi * n as f64);
            let got = state.amps[2 * n];
            assert!((got - expect).norm() < 1e-6, "n={n}: {got} vs {expect}");
        }
    }

    #[test]
    fn squeezed_vacuum_has_even_parity() {
        let state = build_squeezed_vacuum(0.75, 1.3, 40).unwrap();
        for (ix, amp) in state.amps.iter().enumerate() {
            if ix % 2 == 1 {
                assert!(amp.norm() < 1e-12, "odd amplitude at {ix}");
            }
        }
    }

    #[test]
    fn squeezed_vacuum_mean_photon_number() {
        let state = build_squeezed_vacuum(0.75, 0.0, 40).unwrap();
        let lowered = state.apply_ladder(LadderOp::annihilate(0));
        assert_relative_eq!(lowered.norm().powi(2), 0.75f64.sinh().powi(2), max_relative = 1e-8);
    }

    #[test]
    fn insufficient_cutoff_is_rejected() {
        assert!(matches!(
            build_squeezed_vacuum(0.75, 0.0, 14),
            Err(Error::CutoffInsufficient { .. })
        ));
    }

    #[test]
    fn oracle_covariance_matches_encoding_convention() {
        for &(r, phi) in &[(0.0, 0.7), (0.5, 0.0), (0.75, 2.1), (0.75, -1.0)] {
            let state = build_squeezed_vacuum(r, phi, 40).unwrap();
            let (mean, cov) = state.quadrature_moments();
            assert!(mean.amax() < 1e-10);
            let expect = single_mode_squeezed_cov(r, phi);
            for i in 0..2 {
                for j in 0..2 {
                    assert_relative_eq!(cov.matrix()[(i, j)], expect[(i, j)], epsilon = 1e-6);
                }
            }
        }
    }

    #[test]
    fn expm_matches_scalar_exponential() {
        let m = DMatrix::from_row_slice(1, 1, &[Complex64::new(0.3, -1.2)]);
        let e = expm(&m);
        let expect = Complex64::new(0.3, -1.2).exp();
        assert!((e[(0, 0)] - expect).norm() < 1e-14);

        // nilpotent: exp([[0,1],[0,0]]) = [[1,1],[0,1]]
        let m = DMatrix::from_row_slice(2, 2, &[
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
        ]);
        let e = expm(&m);
        assert!((e[(0, 1)] - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        assert!((e[(0, 0)] - Complex64::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn passive_network_preserves_photon_number_and_norm() {
        let s0 = build_squeezed_vacuum(0.35, 0.2, 12).unwrap();
        let s1 = build_squeezed_vacuum(0.35, 1.5, 12).unwrap();
        let state = FockState::product(&[s0, s1]);
        let total_before: f64 = (0..2)
            .map(|m| state.apply_ladder(LadderOp::annihilate(m)).norm().powi(2))
            .sum();
        let h = test_network_generator(2, 3);
        let out = state.apply_passive_network(&h).unwrap();
        assert_relative_eq!(out.norm(), 1.0, epsilon = 1e-10);
        let total_after: f64 = (0..2)
            .map(|m| out.apply_ladder(LadderOp::annihilate(m)).norm().powi(2))
            .sum();
        assert_relative_eq!(total_before, total_after, max_relative = 1e-8);
    }

    #[test]
    fn cutoff_convergence_of_subtracted_moments() {
        // Doubling the cutoff moves the reported covariance by less than
        // ten times the claimed oracle tolerance.
        let string = wick::photon_op_string(1, true);
        let covs: Vec<DMatrix<f64>> = [40usize, 80]
            .iter()
            .map(|&cutoff| {
                let state = build_squeezed_vacuum(0.75, 0.4, cutoff).unwrap();
                let mut heralded = state.apply_operator_string(&string);
                heralded.normalize().unwrap();
                heralded.quadrature_moments().1.matrix().clone()
            })
            .collect();
        assert!(matrix_gap(&covs[0], &covs[1]) < 1e-5);
    }

    #[test]
    fn oracle_check_passes() {
        let cases = oracle_check().unwrap();
        assert!(cases.len() >= 10);
        for case in &cases {
            assert!(case.passed(), "{}: gap {:.3e} > tol {:.3e}", case.name, case.gap, case.tol);
        }
    }
}
