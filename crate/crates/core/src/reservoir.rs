//! Linear reservoir dynamics and end-to-end photonic scheme assembly.
//!
//! The abstract layer implements x_t = A x_{t-1} + B g_t with its affine
//! augmentation and the post-measurement leaky-neuron memory. The concrete
//! schemes drive the squeezed-vacuum encoder through a fixed passive network,
//! optionally de-Gaussify with photon operations, and read out the upper
//! triangle of the x-quadrature covariance at every timestep.

use crate::encoding::EncodingConfig;
use crate::error::{Error, Result};
use crate::gaussian::{self, SymplecticMatrix};
use crate::resources;
use crate::signal::InputSeries;
use crate::wick::{self, LadderOp, OperatorString};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Finite-dimensional linear reservoir x_t = A x_{t-1} + B g_t.
#[derive(Debug, Clone)]
pub struct LinearReservoir {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub x0: DVector<f64>,
}

impl LinearReservoir {
    /// Requires spectral radius of A strictly below 1 (fading memory).
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, x0: DVector<f64>) -> Result<Self> {
        let m = a.nrows();
        if a.ncols() != m || b.nrows() != m || x0.len() != m {
            return Err(Error::DimensionMismatch { expected: m, actual: b.nrows() });
        }
        let radius = spectral_radius(&a);
        if radius >= 1.0 {
            return Err(Error::Config(format!("spectral radius {radius:.6} >= 1 breaks fading memory")));
        }
        Ok(Self { a, b, x0 })
    }
}

/// Spectral radius via normalized repeated squaring: after k squarings,
/// ||A^(2^k)||_F^(1/2^k) converges to the radius for any matrix, including
/// defective and nilpotent ones.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    let mut a = m.clone();
    let mut log_radius = 0.0f64;
    for i in 1..=30 {
        let norm = a.norm();
        if norm == 0.0 {
            return 0.0;
        }
        log_radius += norm.ln() / 2f64.powi(i - 1);
        a = (&a / norm) * (&a / norm);
        if i == 30 {
            let tail = a.norm();
            if tail > 0.0 {
                log_radius += tail.ln() / 2f64.powi(i);
            }
        }
    }
    log_radius.exp()
}

/// Iterates the linear update over the input stream.
pub fn run_linear(res: &LinearReservoir, inputs: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let mut state = res.x0.clone();
    let mut out = Vec::with_capacity(inputs.len());
    for g in inputs {
        state = &res.a * &state + &res.b * g;
        out.push(state.clone());
    }
    out
}

/// Embeds the affine update x_t = A x_{t-1} + B g_t + c into a strictly
/// linear system one dimension larger; the extra coordinate stays at 1 when
/// the augmented input carries a trailing 1.
pub fn affine_augment(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let m = a.nrows();
    let p = b.ncols();
    let mut a_aug = DMatrix::zeros(m + 1, m + 1);
    a_aug.view_mut((0, 0), (m, m)).copy_from(a);
    a_aug.view_mut((0, m), (m, 1)).copy_from(c);
    a_aug[(m, m)] = 1.0;
    let mut b_aug = DMatrix::zeros(m + 1, p + 1);
    b_aug.view_mut((0, 0), (m, p)).copy_from(b);
    (a_aug, b_aug)
}

/// How the leaky feedback term is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LeakKind {
    /// o_t = rho (v . o_{t-1}) 1 + (1 - rho) x_t: the scalar feedback is
    /// broadcast to every component.
    #[default]
    Broadcast,
    /// o_t = rho v o_{t-1} + (1 - rho) x_t elementwise.
    Elementwise,
}

/// Post-measurement leaky-neuron memory with o_0 = (1 - rho) x_0.
pub fn leaky_memory(xs: &[Vec<f64>], rho: f64, v: &[f64], kind: LeakKind) -> Result<Vec<Vec<f64>>> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::Config(format!("leak rate {rho} outside [0, 1]")));
    }
    let Some(first) = xs.first() else {
        return Ok(Vec::new());
    };
    if v.len() != first.len() {
        return Err(Error::DimensionMismatch { expected: first.len(), actual: v.len() });
    }
    let mut out = Vec::with_capacity(xs.len());
    let mut prev: Vec<f64> = first.iter().map(|x| (1.0 - rho) * x).collect();
    out.push(prev.clone());
    for x in &xs[1..] {
        let next: Vec<f64> = match kind {
            LeakKind::Broadcast => {
                let feedback: f64 = v.iter().zip(&prev).map(|(a, b)| a * b).sum();
                x.iter().map(|xi| rho * feedback + (1.0 - rho) * xi).collect()
            }
            LeakKind::Elementwise => v
                .iter()
                .zip(&prev)
                .zip(x)
                .map(|((vi, oi), xi)| rho * vi * oi + (1.0 - rho) * xi)
                .collect(),
        };
        out.push(next.clone());
        prev = next;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    /// Memoryless: current input only.
    Qelm,
    /// Memory in the phase preprocessing window.
    QrcPreprocessing,
    /// Memoryless encoding, leaky-neuron memory after measurement.
    QrcLeaky,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhotonOpKind {
    Subtract,
    Add,
}

/// Full scheme description (everything but the encoder and the network).
#[derive(Debug, Clone)]
pub struct SchemeConfig {
    pub kind: SchemeKind,
    pub n_photon_ops: usize,
    pub op_kind: PhotonOpKind,
    /// Photon operations land on modes 0, 1, 2, ... unless overridden here.
    pub op_modes: Option<Vec<usize>>,
    /// Leak rate rho; only read by [`SchemeKind::QrcLeaky`].
    pub leak_rate: f64,
    pub leak_kind: LeakKind,
    /// Leak feedback vector, length = feature count; required for QrcLeaky.
    pub leak_vector: Option<Vec<f64>>,
    pub sampling: resources::SamplingConfig,
}

impl SchemeConfig {
    pub fn exact(kind: SchemeKind, n_photon_ops: usize, op_kind: PhotonOpKind) -> Self {
        Self {
            kind,
            n_photon_ops,
            op_kind,
            op_modes: None,
            leak_rate: 0.001,
            leak_kind: LeakKind::Broadcast,
            leak_vector: None,
            sampling: resources::SamplingConfig::exact(),
        }
    }

    /// Operator string realizing the configured photon operations.
    pub fn operator_string(&self) -> OperatorString {
        let subtract = self.op_kind == PhotonOpKind::Subtract;
        match &self.op_modes {
            Some(modes) => OperatorString::new(
                modes
                    .iter()
                    .take(self.n_photon_ops)
                    .map(|&m| if subtract { LadderOp::annihilate(m) } else { LadderOp::create(m) })
                    .collect(),
            ),
            None => wick::photon_op_string(self.n_photon_ops, subtract),
        }
    }
}

/// Per-timestep feature vectors plus bookkeeping.
#[derive(Debug, Clone)]
pub struct SchemeRun {
    /// features[i] belongs to timestep start + i.
    pub features: Vec<Vec<f64>>,
    pub start: usize,
    pub n_features: usize,
    /// Wishart draws that needed the 1e-10 diagonal bump to factor.
    pub regularized_draws: usize,
}

impl SchemeRun {
    /// Feature rows for an absolute timestep range.
    pub fn rows(&self, range: std::ops::Range<usize>) -> Result<DMatrix<f64>> {
        if range.start < self.start || range.end > self.start + self.features.len() {
            return Err(Error::InsufficientHistory { step: range.start, needed: self.start });
        }
        let rows = range.len();
        let mut m = DMatrix::zeros(rows, self.n_features);
        for (i, t) in range.enumerate() {
            m.row_mut(i).copy_from_slice(&self.features[t - self.start]);
        }
        Ok(m)
    }
}

/// Runs one scheme over the full input stream. Features exist for every
/// timestep with full phase history; washout/train/test slicing happens at
/// readout time via [`SchemeRun::rows`].
pub fn run_scheme<R: Rng>(
    scheme: &SchemeConfig,
    enc: &EncodingConfig,
    network: &SymplecticMatrix,
    input: &InputSeries,
    rng: &mut R,
) -> Result<SchemeRun> {
    if network.n_modes() != enc.n_modes {
        return Err(Error::DimensionMismatch { expected: enc.n_modes, actual: network.n_modes() });
    }
    match scheme.kind {
        SchemeKind::Qelm | SchemeKind::QrcLeaky => {
            if enc.tau_max != 0 {
                return Err(Error::Config("memoryless encoding requires tau_max = 0".into()));
            }
        }
        SchemeKind::QrcPreprocessing => {}
    }
    let string = scheme.operator_string();
    if let Some(max_mode) = string.max_mode() {
        if max_mode >= enc.n_modes {
            return Err(Error::DimensionMismatch { expected: enc.n_modes, actual: max_mode + 1 });
        }
    }

    let n_features = enc.n_modes * (enc.n_modes + 1) / 2;
    let start = enc.tau_max;
    let mut features = Vec::with_capacity(input.len() - start);
    let mut regularized = 0usize;
    for t in start..input.len() {
        let sigma_in = crate::encoding::encode(input, enc, t)?;
        let sigma_out = gaussian::propagate(&sigma_in, network)?;
        let cov = if string.is_empty() {
            sigma_out
        } else {
            wick::degaussify_covariance(&sigma_out, &string)?.cov
        };
        let row = if scheme.sampling.enabled {
            let (row, bumped) = resources::noisy_features(&cov.x_block(), scheme.sampling.ensemble_size, rng)?;
            regularized += usize::from(bumped);
            row
        } else {
            gaussian::x_features(&cov)
        };
        features.push(row);
    }

    if scheme.kind == SchemeKind::QrcLeaky {
        let v = scheme
            .leak_vector
            .as_ref()
            .ok_or_else(|| Error::Config("leaky scheme needs a leak vector".into()))?;
        features = leaky_memory(&features, scheme.leak_rate, v, scheme.leak_kind)?;
    }

    Ok(SchemeRun { features, start, n_features, regularized_draws: regularized })
}

/// Encoded-input covariance features: per-mode upper triangles (xx, xp, pp)
/// of the single-mode blocks, 3N entries per timestep. These are the
/// preprocessing features whose capacity bounds any Gaussian reservoir run.
pub fn input_feature_run(enc: &EncodingConfig, input: &InputSeries) -> Result<SchemeRun> {
    let start = enc.tau_max;
    let n_features = 3 * enc.n_modes;
    let mut features = Vec::with_capacity(input.len() - start);
    for t in start..input.len() {
        let sigma = crate::encoding::encode(input, enc, t)?;
        let m = sigma.matrix();
        let mut row = Vec::with_capacity(n_features);
        for j in 0..enc.n_modes {
            row.push(m[(2 * j, 2 * j)]);
            row.push(m[(2 * j, 2 * j + 1)]);
            row.push(m[(2 * j + 1, 2 * j + 1)]);
        }
        features.push(row);
    }
    Ok(SchemeRun { features, start, n_features, regularized_draws: 0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds::derive_rng;
    use approx::assert_relative_eq;

    fn random_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
        DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
    }

    fn contractive<R: Rng>(m: usize, radius: f64, rng: &mut R) -> DMatrix<f64> {
        let a = random_matrix(m, m, rng);
        let r = spectral_radius(&a);
        a * (radius / r)
    }

    #[test]
    fn zero_a_reduces_to_static_map() {
        let mut rng = derive_rng(51, "t", &[]);
        let b = random_matrix(3, 2, &mut rng);
        let res = LinearReservoir::new(DMatrix::zeros(3, 3), b.clone(), DVector::zeros(3)).unwrap();
        let gs: Vec<DVector<f64>> = (0..10).map(|_| DVector::from_fn(2, |_, _| rng.gen_range(-1.0..1.0))).collect();
        let xs = run_linear(&res, &gs);
        for (x, g) in xs.iter().zip(&gs) {
            assert_relative_eq!(x, &(&b * g), epsilon = 1e-14);
        }
    }

    #[test]
    fn trajectory_matches_unrolled_sum() {
        let mut rng = derive_rng(52, "t", &[]);
        let a = contractive(4, 0.8, &mut rng);
        let b = random_matrix(4, 2, &mut rng);
        let x0 = DVector::from_fn(4, |_, _| rng.gen_range(-1.0..1.0));
        let res = LinearReservoir::new(a.clone(), b.clone(), x0.clone()).unwrap();
        let gs: Vec<DVector<f64>> = (0..50).map(|_| DVector::from_fn(2, |_, _| rng.gen_range(-1.0..1.0))).collect();
        let xs = run_linear(&res, &gs);

        let mut a_pow = DMatrix::identity(4, 4);
        for (t, x) in xs.iter().enumerate() {
            // x_t = sum_{tau <= t} A^tau B g_{t - tau} + A^{t+1} x0
            let mut expect = DVector::zeros(4);
            let mut pow = DMatrix::identity(4, 4);
            for tau in 0..=t {
                expect += &pow * &b * &gs[t - tau];
                pow *= &a;
            }
            a_pow *= &a;
            expect += &a_pow * &x0;
            assert!((x - expect).amax() < 1e-10, "step {t}");
        }
    }

    #[test]
    fn initial_conditions_wash_out() {
        let mut rng = derive_rng(53, "t", &[]);
        let a = contractive(4, 0.9, &mut rng);
        let b = random_matrix(4, 1, &mut rng);
        let gs: Vec<DVector<f64>> = (0..200).map(|_| DVector::from_fn(1, |_, _| rng.gen_range(-1.0..1.0))).collect();
        let x1 = DVector::from_fn(4, |_, _| rng.gen_range(-1.0..1.0));
        let x2 = DVector::from_fn(4, |_, _| rng.gen_range(-1.0..1.0));
        let r1 = LinearReservoir::new(a.clone(), b.clone(), x1).unwrap();
        let r2 = LinearReservoir::new(a, b, x2).unwrap();
        let t1 = run_linear(&r1, &gs);
        let t2 = run_linear(&r2, &gs);
        assert!((&t1[199] - &t2[199]).amax() < 1e-6);
    }

    #[test]
    fn construction_rejects_expanding_dynamics() {
        let a = DMatrix::identity(2, 2) * 1.1;
        assert!(LinearReservoir::new(a, DMatrix::zeros(2, 1), DVector::zeros(2)).is_err());
    }

    #[test]
    fn affine_augmentation_reproduces_affine_trajectory() {
        let mut rng = derive_rng(54, "t", &[]);
        let a = contractive(3, 0.7, &mut rng);
        let b = random_matrix(3, 2, &mut rng);
        let c = DVector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0));
        let (a_aug, b_aug) = affine_augment(&a, &b, &c);

        let mut x = DVector::zeros(3);
        let mut x_aug = DVector::zeros(4);
        x_aug[3] = 1.0;
        for _ in 0..100 {
            let g = DVector::from_fn(2, |_, _| rng.gen_range(-1.0..1.0));
            let mut g_aug = DVector::zeros(3);
            g_aug.view_mut((0, 0), (2, 1)).copy_from(&g);
            g_aug[2] = 1.0;
            x = &a * &x + &b * &g + &c;
            x_aug = &a_aug * &x_aug + &b_aug * &g_aug;
            for i in 0..3 {
                assert!((x[i] - x_aug[i]).abs() < 1e-12);
            }
            assert_relative_eq!(x_aug[3], 1.0, epsilon = 1e-14);
        }

        // readout equivalence: w^T x + w0 = (w, w0)^T (x, 1)
        let w = DVector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0));
        let w0 = 0.37;
        let mut w_aug = DVector::zeros(4);
        w_aug.view_mut((0, 0), (3, 1)).copy_from(&w);
        w_aug[3] = w0;
        assert_relative_eq!(w.dot(&x) + w0, w_aug.dot(&x_aug), epsilon = 1e-12);
    }

    #[test]
    fn affine_augment_with_zero_offset_embeds() {
        let a = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.25]);
        let b = DMatrix::from_row_slice(2, 1, &[1.0, 2.0]);
        let (a_aug, b_aug) = affine_augment(&a, &b, &DVector::zeros(2));
        assert_eq!(a_aug[(0, 2)], 0.0);
        assert_eq!(a_aug[(2, 2)], 1.0);
        assert_eq!(a_aug[(2, 0)], 0.0);
        assert_eq!(b_aug[(2, 1)], 0.0);
    }

    #[test]
    fn leaky_identity_and_zero_limits() {
        let xs: Vec<Vec<f64>> = vec![vec![1.0, -0.5], vec![0.3, 0.8], vec![-0.2, 0.1]];
        let v = vec![0.4, 0.9];
        let out = leaky_memory(&xs, 0.0, &v, LeakKind::Broadcast).unwrap();
        assert_eq!(out, xs);

        let zeros: Vec<Vec<f64>> = vec![vec![0.0, 0.0]; 5];
        let out = leaky_memory(&zeros, 1.0, &v, LeakKind::Broadcast).unwrap();
        assert!(out.iter().all(|row| row.iter().all(|&x| x == 0.0)));
    }

    #[test]
    fn weak_leak_is_a_small_perturbation() {
        let mut rng = derive_rng(55, "t", &[]);
        let xs: Vec<Vec<f64>> = (0..500)
            .map(|_| (0..4).map(|_| rng.gen_range(0.5..2.0)).collect())
            .collect();
        let v: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..1.0)).collect();
        let out = leaky_memory(&xs, 0.001, &v, LeakKind::Broadcast).unwrap();
        for (o, x) in out.iter().zip(&xs).skip(1) {
            let num: f64 = o.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let den: f64 = x.iter().map(|b| b * b).sum::<f64>().sqrt();
            assert!(num / den < 0.01, "relative deviation {}", num / den);
        }
    }

    #[test]
    fn leak_variants_differ() {
        let xs: Vec<Vec<f64>> = vec![vec![1.0, 2.0]; 10];
        let v = vec![0.3, 0.7];
        let a = leaky_memory(&xs, 0.5, &v, LeakKind::Broadcast).unwrap();
        let b = leaky_memory(&xs, 0.5, &v, LeakKind::Elementwise).unwrap();
        assert_ne!(a, b);
    }

    fn test_setup(n_modes: usize, tau_max: usize, seed: u64) -> (EncodingConfig, SymplecticMatrix, InputSeries) {
        let mut rng = derive_rng(seed, "setup", &[]);
        let enc = EncodingConfig::with_rng(n_modes, 0.75, tau_max, false, &mut rng).unwrap();
        let net = gaussian::random_passive_symplectic(n_modes, &mut rng);
        let input = InputSeries::generate(10, 100, 20, seed).unwrap();
        (enc, net, input)
    }

    #[test]
    fn qelm_features_are_memoryless() {
        let (enc, net, mut input) = test_setup(2, 0, 61);
        // plant identical inputs at two separated steps
        input.values[30] = 0.4321;
        input.values[77] = 0.4321;
        let scheme = SchemeConfig::exact(SchemeKind::Qelm, 0, PhotonOpKind::Subtract);
        let mut rng = derive_rng(61, "run", &[]);
        let run = run_scheme(&scheme, &enc, &net, &input, &mut rng).unwrap();
        let f30 = &run.features[30];
        let f77 = &run.features[77];
        for (a, b) in f30.iter().zip(f77) {
            assert_relative_eq!(a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn preprocessing_features_see_only_the_window() {
        let (enc, net, input) = test_setup(2, 2, 62);
        let scheme = SchemeConfig::exact(SchemeKind::QrcPreprocessing, 0, PhotonOpKind::Subtract);
        let mut rng = derive_rng(62, "run", &[]);
        let run = run_scheme(&scheme, &enc, &net, &input, &mut rng).unwrap();

        let mut perturbed = input.clone();
        let t = 50usize;
        perturbed.values[t - 3] += 0.2; // outside the tau_max = 2 window
        let run_p = run_scheme(&scheme, &enc, &net, &perturbed, &mut rng).unwrap();
        let i = t - run.start;
        for (a, b) in run.features[i].iter().zip(&run_p.features[i]) {
            assert_relative_eq!(a, b, epsilon = 1e-14);
        }
        // but perturbing inside the window does change them
        let mut inside = input.clone();
        inside.values[t - 1] += 0.2;
        let run_i = run_scheme(&scheme, &enc, &net, &inside, &mut rng).unwrap();
        let diff: f64 = run.features[i]
            .iter()
            .zip(&run_i.features[i])
            .map(|(a, b)| (a - b).abs())
            .sum();
        assert!(diff > 1e-6);
    }

    #[test]
    fn gaussian_qelm_features_lie_in_input_feature_span() {
        let (enc, net, _) = test_setup(3, 0, 63);
        let input = InputSeries::generate(0, 2000, 0, 63).unwrap();
        let scheme = SchemeConfig::exact(SchemeKind::Qelm, 0, PhotonOpKind::Subtract);
        let mut rng = derive_rng(63, "run", &[]);
        let run = run_scheme(&scheme, &enc, &net, &input, &mut rng).unwrap();
        let input_run = input_feature_run(&enc, &input).unwrap();

        let x = run.rows(0..2000).unwrap();
        let x_in = input_run.rows(0..2000).unwrap();
        // augment with a constant column: spans include the vacuum offset
        let ones = DMatrix::from_element(2000, 1, 1.0);
        let rank = |m: &DMatrix<f64>| -> usize { crate::readout::rank(m, 1e-8) };
        let mut base = DMatrix::zeros(2000, x_in.ncols() + 1);
        base.view_mut((0, 0), (2000, x_in.ncols())).copy_from(&x_in);
        base.view_mut((0, x_in.ncols()), (2000, 1)).copy_from(&ones);
        let mut joint = DMatrix::zeros(2000, base.ncols() + x.ncols());
        joint.view_mut((0, 0), (2000, base.ncols())).copy_from(&base);
        joint.view_mut((0, base.ncols()), (2000, x.ncols())).copy_from(&x);
        assert_eq!(rank(&joint), rank(&base), "reservoir features left the input span");
    }

    #[test]
    fn photon_ops_error_on_too_few_modes() {
        let (enc, net, input) = test_setup(2, 0, 64);
        let scheme = SchemeConfig::exact(SchemeKind::Qelm, 3, PhotonOpKind::Subtract);
        let mut rng = derive_rng(64, "run", &[]);
        assert!(run_scheme(&scheme, &enc, &net, &input, &mut rng).is_err());
    }

    #[test]
    fn subtraction_changes_features() {
        let (enc, net, input) = test_setup(3, 0, 65);
        let mut rng = derive_rng(65, "run", &[]);
        let gauss = SchemeConfig::exact(SchemeKind::Qelm, 0, PhotonOpKind::Subtract);
        let sub = SchemeConfig::exact(SchemeKind::Qelm, 1, PhotonOpKind::Subtract);
        let f0 = run_scheme(&gauss, &enc, &net, &input, &mut rng).unwrap();
        let f1 = run_scheme(&sub, &enc, &net, &input, &mut rng).unwrap();
        let diff: f64 = f0.features[0].iter().zip(&f1.features[0]).map(|(a, b)| (a - b).abs()).sum();
        assert!(diff > 1e-3);
    }

    #[test]
    fn features_at_other_delays_are_orthogonal_to_fixed_delay_targets() {
        // Features depending only on s_{t - tau} with tau != tau' have
        // vanishing empirical inner product with P_d(s_{t - tau'}).
        use crate::signal::{normalized_legendre, InputSeries};
        let t_len = 100_000usize;
        let input = InputSeries::generate(0, t_len + 5, 0, 67).unwrap();
        let mut rng = derive_rng(67, "t", &[]);
        let enc = EncodingConfig::with_rng(2, 0.75, 0, false, &mut rng).unwrap();
        let tol = 5.0 / (t_len as f64).sqrt();
        for (feature_delay, target_delay) in [(2usize, 0usize), (0, 1), (3, 1)] {
            for d in 1..=3u32 {
                // the constant direction belongs to the same-delay subspace,
                // so the nonconstant (centered) feature is what must be
                // orthogonal to the other-delay target
                let features: Vec<f64> = (5..5 + t_len)
                    .map(|t| {
                        let sigma = crate::encoding::encode(&input, &enc, t - feature_delay).unwrap();
                        sigma.matrix()[(0, 0)]
                    })
                    .collect();
                let mean = features.iter().sum::<f64>() / t_len as f64;
                let mut dot = 0.0;
                for (i, t) in (5..5 + t_len).enumerate() {
                    let target = normalized_legendre(d, input.values[t - target_delay]);
                    dot += (features[i] - mean) * target;
                }
                dot /= t_len as f64;
                assert!(
                    dot.abs() < tol,
                    "delay {feature_delay} feature vs delay {target_delay} degree {d}: {dot}"
                );
            }
        }
    }

    #[test]
    fn washout_history_is_forgotten_by_leaky_scheme() {
        let mut rng = derive_rng(66, "t", &[]);
        let enc = EncodingConfig::with_rng(2, 0.75, 0, false, &mut rng).unwrap();
        let net = gaussian::random_passive_symplectic(2, &mut rng);
        let m = 3usize;
        let v: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..1.0)).collect();
        let mut scheme = SchemeConfig::exact(SchemeKind::QrcLeaky, 0, PhotonOpKind::Subtract);
        scheme.leak_vector = Some(v);

        // Doubling the washout = prepending more history ahead of an
        // identical washout + train stream; train features must not move.
        let base = InputSeries::generate(100, 50, 0, 1).unwrap();
        let extra = InputSeries::generate(0, 100, 0, 2).unwrap();
        let mut doubled_values = extra.values.clone();
        doubled_values.extend_from_slice(&base.values);
        let doubled = InputSeries {
            values: doubled_values,
            washout_len: 200,
            train_len: 50,
            test_len: 0,
            seed: 1,
        };
        let mut run_rng = derive_rng(66, "run", &[]);
        let run_a = run_scheme(&scheme, &enc, &net, &base, &mut run_rng).unwrap();
        let run_b = run_scheme(&scheme, &enc, &net, &doubled, &mut run_rng).unwrap();
        for t in base.train_range() {
            let ra = &run_a.features[t - run_a.start];
            let rb = &run_b.features[t + 100 - run_b.start];
            for (x, y) in ra.iter().zip(rb) {
                assert!((x - y).abs() < 1e-8, "{x} vs {y}");
            }
        }
    }
}
