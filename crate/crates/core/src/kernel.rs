//! FIR identification with a tuned/correlated kernel prior.
//!
//! A data-based estimate `h ~ N(h_hat, Sigma_d)` (least squares or SMM
//! impulse simulation) is combined with the prior `h ~ N(0, Sigma_k)`; the
//! kernel hyperparameters are chosen by maximizing the marginal likelihood
//! of `h_hat` on a grid.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::estimator::{smm_simulate, SmmProblem};
use crate::linalg;
use crate::lti::NoiseModel;
use crate::signal_matrix::SignalMatrixSet;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FirMethod {
    #[serde(rename = "LS")]
    Ls,
    #[serde(rename = "LS-TC")]
    LsTc,
    #[serde(rename = "SMM")]
    Smm,
    #[serde(rename = "SMM-TC")]
    SmmTc,
}

impl FirMethod {
    pub fn label(self) -> &'static str {
        match self {
            FirMethod::Ls => "LS",
            FirMethod::LsTc => "LS-TC",
            FirMethod::Smm => "SMM",
            FirMethod::SmmTc => "SMM-TC",
        }
    }

    fn regularized(self) -> Self {
        match self {
            FirMethod::Ls | FirMethod::LsTc => FirMethod::LsTc,
            FirMethod::Smm | FirMethod::SmmTc => FirMethod::SmmTc,
        }
    }
}

/// Impulse-response estimate with its covariance.
#[derive(Clone, Debug, PartialEq)]
pub struct FirEstimate {
    pub h: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub method: FirMethod,
}

/// TC kernel hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub alpha: f64,
    pub beta: f64,
    pub n: usize,
}

impl KernelSpec {
    pub fn new(alpha: f64, beta: f64, n: usize) -> Result<Self> {
        if !(alpha > 0.0) || !(beta > 0.0 && beta < 1.0) {
            return Err(Error::InvalidArgument(format!("TC kernel needs alpha > 0 and 0 < beta < 1, got ({alpha}, {beta})")));
        }
        Ok(Self { alpha, beta, n })
    }
}

/// `(Sigma_k)_{ij} = alpha * min(beta^i, beta^j)` with exponents `i, j` in `1..=n`.
pub fn tc_kernel(spec: &KernelSpec) -> DMatrix<f64> {
    DMatrix::from_fn(spec.n, spec.n, |i, j| spec.alpha * spec.beta.powi((i.max(j) + 1) as i32))
}

/// Log-spaced `alpha` grid `1e-2 ..= 1e2`, 20 points.
pub fn default_alpha_grid() -> Vec<f64> {
    (0..20).map(|k| 10f64.powf(-2.0 + 4.0 * k as f64 / 19.0)).collect()
}

/// Linear `beta` grid `0.5 ..= 0.99`, 20 points.
pub fn default_beta_grid() -> Vec<f64> {
    (0..20).map(|k| 0.5 + 0.49 * k as f64 / 19.0).collect()
}

/// Toeplitz regressor for `y_t = sum_i h_i u_{t-i}`.
///
/// With `past_u` (inputs `u_{1-n} .. u_{-1}`, oldest first) every sample
/// gives a row; without it the first `n - 1` samples are dropped. Returns the
/// regressor and the index of the first output sample used.
pub fn fir_regressor(u: &[f64], n: usize, past_u: Option<&[f64]>) -> Result<(DMatrix<f64>, usize)> {
    if n == 0 {
        return Err(Error::InvalidArgument("FIR length must be at least 1".into()));
    }
    let start = match past_u {
        Some(p) if p.len() != n - 1 => {
            return Err(Error::Dimension(format!("past inputs have length {}, expected {}", p.len(), n - 1)))
        }
        Some(_) => 0,
        None => n - 1,
    };
    if u.len() < start + n {
        return Err(Error::InsufficientData { needed: start + n, got: u.len() });
    }
    let at = |k: isize| -> f64 {
        if k >= 0 {
            u[k as usize]
        } else {
            // u_{-j} sits at index n - 1 - j of the past-input slice
            past_u.map_or(0.0, |p| p[(n as isize - 1 + k) as usize])
        }
    };
    let rows = u.len() - start;
    let phi = DMatrix::from_fn(rows, n, |r, i| at((start + r) as isize - i as isize));
    Ok((phi, start))
}

/// Least-squares FIR estimate with covariance `sigma2 (Phi^T Phi)^{-1}`.
pub fn ls_fir(u: &[f64], y: &[f64], n: usize, sigma2: f64, past_u: Option<&[f64]>) -> Result<FirEstimate> {
    if u.len() != y.len() {
        return Err(Error::Dimension(format!("u has {} samples, y has {}", u.len(), y.len())));
    }
    let (phi, start) = fir_regressor(u, n, past_u)?;
    let rank = linalg::rank(&phi);
    if rank < n {
        return Err(Error::RankDeficient { rank, cols: n });
    }
    let yn = DVector::from_column_slice(&y[start..]);
    let chol = linalg::cholesky(phi.transpose() * &phi, "Phi^T Phi")
        .map_err(|_| Error::RankDeficient { rank, cols: n })?;
    let h = chol.solve(&(phi.transpose() * yn));
    let mut cov = chol.inverse() * sigma2;
    linalg::symmetrize(&mut cov);
    Ok(FirEstimate { h, cov, method: FirMethod::Ls })
}

/// Posterior mean `Sigma_k (Sigma_k + Sigma_d)^{-1} h_hat` and covariance
/// `Sigma_k - Sigma_k (Sigma_k + Sigma_d)^{-1} Sigma_k`.
pub fn kernel_combine(est: &FirEstimate, kernel: &DMatrix<f64>) -> Result<FirEstimate> {
    let n = est.h.len();
    if kernel.shape() != (n, n) || est.cov.shape() != (n, n) {
        return Err(Error::Dimension(format!("kernel and covariance must be {n}x{n}")));
    }
    let s = linalg::cholesky(kernel + &est.cov, "Sigma_k + Sigma_d")?;
    let h = kernel * s.solve(&est.h);
    let mut cov = kernel - kernel * s.solve(kernel);
    linalg::symmetrize(&mut cov);
    Ok(FirEstimate { h, cov, method: est.method.regularized() })
}

/// One evaluated grid point of the marginal-likelihood surface.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub alpha: f64,
    pub beta: f64,
    /// `logdet(S) + h^T S^{-1} h`, `None` where `S` is numerically singular.
    pub objective: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalBayes {
    pub spec: KernelSpec,
    pub surface: Vec<GridPoint>,
}

fn marginal_objective(hhat: &DVector<f64>, s: DMatrix<f64>) -> Option<f64> {
    let chol = nalgebra::Cholesky::new(s)?;
    let v = linalg::logdet_spd(&chol) + hhat.dot(&chol.solve(hhat));
    v.is_finite().then_some(v)
}

/// Grid search for the TC hyperparameters maximizing the marginal likelihood of `hhat`.
///
/// Grids are scanned in ascending order so equal objectives resolve to the
/// smallest `alpha`, then the smallest `beta`.
pub fn empirical_bayes(hhat: &DVector<f64>, data_cov: &DMatrix<f64>, alpha_grid: &[f64], beta_grid: &[f64]) -> Result<EmpiricalBayes> {
    let n = hhat.len();
    if alpha_grid.is_empty() || beta_grid.is_empty() {
        return Err(Error::InvalidArgument("hyperparameter grids must be nonempty".into()));
    }
    if data_cov.shape() != (n, n) {
        return Err(Error::Dimension(format!("data covariance must be {n}x{n}")));
    }
    let mut alphas = alpha_grid.to_vec();
    let mut betas = beta_grid.to_vec();
    alphas.sort_by(f64::total_cmp);
    betas.sort_by(f64::total_cmp);

    let mut surface = Vec::with_capacity(alphas.len() * betas.len());
    let mut best: Option<(f64, KernelSpec)> = None;
    for &alpha in &alphas {
        for &beta in &betas {
            let spec = KernelSpec::new(alpha, beta, n)?;
            let objective = marginal_objective(hhat, tc_kernel(&spec) + data_cov);
            if let Some(v) = objective {
                if best.is_none_or(|(b, _)| v < b) {
                    best = Some((v, spec));
                }
            }
            surface.push(GridPoint { alpha, beta, objective });
        }
    }
    let (_, spec) = best.ok_or_else(|| Error::Singular("every grid point gives a singular marginal covariance".into()))?;
    Ok(EmpiricalBayes { spec, surface })
}

/// Empirical-Bayes TC regularization of any data-based estimate.
pub fn tc_regularize(est: &FirEstimate, alpha_grid: &[f64], beta_grid: &[f64]) -> Result<(FirEstimate, EmpiricalBayes)> {
    let eb = empirical_bayes(&est.h, &est.cov, alpha_grid, beta_grid)?;
    let out = kernel_combine(est, &tc_kernel(&eb.spec))?;
    Ok((out, eb))
}

/// SMM simulation of a unit impulse from rest: `u_ini = 0`, `y_ini = 0`,
/// `u = e_1`, no online noise, horizon `n`.
pub fn smm_fir(set: &SignalMatrixSet, n: usize, sigma2: f64) -> Result<FirEstimate> {
    if set.lp() != n {
        return Err(Error::Dimension(format!("future window is {}, FIR length is {n}", set.lp())));
    }
    let mut u = DVector::zeros(n);
    u[0] = 1.0;
    let noise = NoiseModel::new(sigma2, 0.0)?;
    let problem = SmmProblem::new(set, DVector::zeros(set.l0()), DVector::zeros(set.l0()), u, noise)?;
    let res = smm_simulate(&problem)?;
    Ok(FirEstimate { cov: res.cov.future_block(n), h: res.y, method: FirMethod::Smm })
}

/// SMM impulse estimate regularized with an empirical-Bayes TC prior.
pub fn smm_tc_fir(set: &SignalMatrixSet, n: usize, sigma2: f64, alpha_grid: &[f64], beta_grid: &[f64]) -> Result<FirEstimate> {
    let est = smm_fir(set, n, sigma2)?;
    Ok(tc_regularize(&est, alpha_grid, beta_grid)?.0)
}

/// Fit `W = 100 (1 - |h - h_est| / |h - mean(h)|)`.
pub fn fit_metric(h_true: &DVector<f64>, h_est: &DVector<f64>) -> Result<f64> {
    if h_true.len() != h_est.len() {
        return Err(Error::Dimension(format!("lengths differ: {} vs {}", h_true.len(), h_est.len())));
    }
    let mean = h_true.mean();
    let den: f64 = h_true.iter().map(|h| (h - mean).powi(2)).sum();
    if den == 0.0 {
        return Err(Error::InvalidArgument("true impulse response is constant".into()));
    }
    let num: f64 = h_true.iter().zip(h_est.iter()).map(|(a, b)| (a - b).powi(2)).sum();
    Ok(100.0 * (1.0 - (num / den).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::{g1, gaussian_signal, siso_signal, LtiSystem};
    use crate::rng::Stream;
    use crate::signal_matrix::MatrixKind;
    use crate::testutil::{random_matrix, random_vector};
    use proptest::prelude::*;

    fn random_spd(n: usize, seed: u64, shift: f64) -> DMatrix<f64> {
        let a = random_matrix(n, n, seed);
        &a * a.transpose() / n as f64 + DMatrix::identity(n, n) * shift
    }

    /// Experiment from rest at t = 1 - n; returns (u, y, past_u) for t >= 0.
    fn fir_data(sys: &LtiSystem, n_data: usize, n: usize, sigma2: f64, seed: u64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let total = n_data + n - 1;
        let u = gaussian_signal(1, total, seed, Stream::OfflineInput);
        let traj = sys.simulate(&u, &DVector::zeros(sys.nx())).unwrap().add_noise(sigma2, seed);
        let us: Vec<f64> = traj.u.iter().copied().collect();
        let ys: Vec<f64> = traj.y.iter().copied().collect();
        (us[n - 1..].to_vec(), ys[n - 1..].to_vec(), us[..n - 1].to_vec())
    }

    #[test]
    fn tc_kernel_small() {
        let k = tc_kernel(&KernelSpec::new(1.0, 0.5, 2).unwrap());
        assert_eq!(k, DMatrix::from_row_slice(2, 2, &[0.5, 0.25, 0.25, 0.25]));
        let k = tc_kernel(&KernelSpec::new(2.0, 1.0 - 1e-9, 5).unwrap());
        assert!(k.iter().all(|v| (v - 2.0).abs() < 1e-7));
        assert!(KernelSpec::new(0.0, 0.5, 3).is_err());
        assert!(KernelSpec::new(1.0, 1.0, 3).is_err());
    }

    #[test]
    fn default_grids() {
        let a = default_alpha_grid();
        let b = default_beta_grid();
        assert_eq!((a.len(), b.len()), (20, 20));
        assert!((a[0] - 1e-2).abs() < 1e-15 && (a[19] - 1e2).abs() < 1e-10);
        assert!((b[0] - 0.5).abs() < 1e-15 && (b[19] - 0.99).abs() < 1e-12);
    }

    #[test]
    fn ls_recovers_true_fir() {
        let h_true = [0.5, -0.3, 0.2, 0.1];
        let sys = LtiSystem::from_transfer_function(&h_true, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let (u, y, past) = fir_data(&sys, 40, 6, 0.0, 3);
        let est = ls_fir(&u, &y, 6, 0.0, Some(&past)).unwrap();
        for i in 0..6 {
            let want = h_true.get(i).copied().unwrap_or(0.0);
            assert!((est.h[i] - want).abs() < 1e-10);
        }
        // the unknown-past mode drops n - 1 rows and still recovers it
        let est = ls_fir(&u, &y, 6, 0.0, None).unwrap();
        assert!((est.h[0] - 0.5).abs() < 1e-10);
    }

    #[test]
    fn ls_is_biased_by_truncation() {
        let sys = g1();
        let (u, y, past) = fir_data(&sys, 50, 11, 0.0, 4);
        let est = ls_fir(&u, &y, 11, 0.0, Some(&past)).unwrap();
        let h = sys.impulse_response_siso(11).unwrap();
        assert!((est.h - h).amax() > 0.01);
    }

    #[test]
    fn ls_errors() {
        assert!(matches!(ls_fir(&[0.0; 30], &[0.0; 30], 5, 1.0, None), Err(Error::RankDeficient { rank: 0, cols: 5 })));
        assert!(ls_fir(&[1.0; 3], &[1.0; 3], 5, 1.0, None).is_err());
        assert!(ls_fir(&[1.0; 30], &[1.0; 30], 5, 1.0, Some(&[0.0; 2])).is_err());
    }

    #[test]
    fn regressor_uses_past_inputs() {
        let (phi, start) = fir_regressor(&[1.0, 2.0, 3.0], 3, Some(&[-2.0, -1.0])).unwrap();
        assert_eq!(start, 0);
        assert_eq!(phi, DMatrix::from_row_slice(3, 3, &[1.0, -1.0, -2.0, 2.0, 1.0, -1.0, 3.0, 2.0, 1.0]));
        let (phi, start) = fir_regressor(&[1.0, 2.0, 3.0, 4.0], 2, None).unwrap();
        assert_eq!(start, 1);
        assert_eq!(phi, DMatrix::from_row_slice(3, 2, &[2.0, 1.0, 3.0, 2.0, 4.0, 3.0]));
    }

    #[test]
    fn ls_covariance_matches_monte_carlo() {
        let sys = g1();
        let (u, y0, past) = fir_data(&sys, 50, 11, 0.0, 4);
        let sigma2 = 0.01;
        let runs = 10_000;
        let mut sum = DVector::zeros(11);
        let mut sq = DMatrix::zeros(11, 11);
        let mut cov = DMatrix::zeros(11, 11);
        for r in 0..runs {
            let noisy = crate::lti::Trajectory::new(siso_signal(&u), siso_signal(&y0)).unwrap().add_noise(sigma2, r);
            let y: Vec<f64> = noisy.y.iter().copied().collect();
            let est = ls_fir(&u, &y, 11, sigma2, Some(&past)).unwrap();
            sum += &est.h;
            sq += &est.h * est.h.transpose();
            cov = est.cov;
        }
        let mean = &sum / runs as f64;
        let emp = (sq - &mean * mean.transpose() * runs as f64) / (runs as f64 - 1.0);
        for i in 0..11 {
            let rel = (emp[(i, i)] - cov[(i, i)]).abs() / cov[(i, i)];
            assert!(rel < 0.1, "coefficient {i}: {rel}");
        }
    }

    #[test]
    fn combine_limits() {
        let h = random_vector(4, 1);
        let est = FirEstimate { h: h.clone(), cov: DMatrix::zeros(4, 4), method: FirMethod::Ls };
        let k = tc_kernel(&KernelSpec::new(1.0, 0.8, 4).unwrap());
        let out = kernel_combine(&est, &k).unwrap();
        assert!((out.h - &h).amax() < 1e-12);
        assert_eq!(out.method, FirMethod::LsTc);
        let est = FirEstimate { h, cov: random_spd(4, 2, 0.1), method: FirMethod::Smm };
        let out = kernel_combine(&est, &DMatrix::zeros(4, 4)).unwrap();
        assert_eq!(out.h.amax(), 0.0);
        assert_eq!(out.method, FirMethod::SmmTc);
    }

    #[test]
    fn combine_matches_regularized_least_squares() {
        let sys = g1();
        let (u, y, past) = fir_data(&sys, 50, 11, 0.01, 6);
        let sigma2 = 0.01;
        let est = ls_fir(&u, &y, 11, sigma2, Some(&past)).unwrap();
        let k = tc_kernel(&KernelSpec::new(5.0, 0.9, 11).unwrap());
        let gain_form = kernel_combine(&est, &k).unwrap();
        let (phi, _) = fir_regressor(&u, 11, Some(&past)).unwrap();
        let yn = DVector::from_column_slice(&y);
        let reg = phi.transpose() * &phi + k.clone().try_inverse().unwrap() * sigma2;
        let direct = reg.lu().solve(&(phi.transpose() * yn)).unwrap();
        assert!((gain_form.h - direct).amax() < 1e-8);
    }

    #[test]
    fn empirical_bayes_objective_is_gaussian_log_density() {
        let h = random_vector(5, 3);
        let cov = random_spd(5, 4, 0.05);
        let eb = empirical_bayes(&h, &cov, &[0.5, 2.0], &[0.6, 0.9]).unwrap();
        for p in &eb.surface {
            let s = tc_kernel(&KernelSpec::new(p.alpha, p.beta, 5).unwrap()) + &cov;
            // -2 log N(h; 0, S) - n log 2 pi via LU determinant and explicit inverse
            let det = s.clone().lu().determinant();
            let quad = (h.transpose() * s.try_inverse().unwrap() * &h)[(0, 0)];
            let logpdf = -0.5 * (5.0 * (2.0 * std::f64::consts::PI).ln() + det.ln() + quad);
            let want = -2.0 * logpdf - 5.0 * (2.0 * std::f64::consts::PI).ln();
            assert!((p.objective.unwrap() - want).abs() < 1e-9);
        }
        let best = eb.surface.iter().filter_map(|p| p.objective).fold(f64::INFINITY, f64::min);
        let chosen = eb.surface.iter().find(|p| p.alpha == eb.spec.alpha && p.beta == eb.spec.beta).unwrap();
        assert_eq!(chosen.objective.unwrap(), best);
    }

    #[test]
    fn empirical_bayes_edge_cases() {
        let h = random_vector(3, 3);
        let cov = random_spd(3, 4, 0.05);
        let eb = empirical_bayes(&h, &cov, &[0.7], &[0.8]).unwrap();
        assert_eq!((eb.spec.alpha, eb.spec.beta), (0.7, 0.8));
        let zero = DVector::zeros(3);
        let eb = empirical_bayes(&zero, &cov, &default_alpha_grid(), &default_beta_grid()).unwrap();
        assert_eq!(eb.spec.alpha, 1e-2);
        assert!(empirical_bayes(&h, &cov, &[], &[0.5]).is_err());
    }

    #[test]
    fn empirical_bayes_tie_break() {
        // with a huge data covariance every grid point has nearly the same
        // objective; identical kernels (duplicated grid values) must resolve to the first
        let h = DVector::zeros(2);
        let cov = DMatrix::identity(2, 2);
        let eb = empirical_bayes(&h, &cov, &[1.0, 1.0], &[0.5, 0.5]).unwrap();
        assert_eq!((eb.spec.alpha, eb.spec.beta), (1.0, 0.5));
    }

    #[test]
    fn smm_fir_noise_free_is_exact() {
        let sys = g1();
        let u = gaussian_signal(1, 50, 2, Stream::OfflineInput);
        let traj = sys.simulate(&u, &DVector::zeros(4)).unwrap();
        let set = SignalMatrixSet::partition(&traj.u, &traj.y, 4, 11, MatrixKind::Hankel).unwrap();
        let est = smm_fir(&set, 11, 0.0).unwrap();
        let h = sys.impulse_response_siso(11).unwrap();
        assert!((est.h - &h).amax() < 1e-6);
        // vanishing data covariance leaves the kernel estimate at the truth
        let reg = smm_tc_fir(&set, 11, 0.0, &default_alpha_grid(), &default_beta_grid()).unwrap();
        assert!((reg.h - h).amax() < 1e-6);
        assert!(smm_fir(&set, 10, 0.0).is_err());
    }

    #[test]
    fn smm_fir_with_vanishing_prior() {
        let sys = g1();
        let u = gaussian_signal(1, 50, 2, Stream::OfflineInput);
        let traj = sys.simulate(&u, &DVector::zeros(4)).unwrap().add_noise(0.01, 3);
        let set = SignalMatrixSet::partition(&traj.u, &traj.y, 4, 11, MatrixKind::Hankel).unwrap();
        let est = smm_tc_fir(&set, 11, 0.01, &[1e-14], &[0.9]).unwrap();
        assert!(est.h.amax() < 1e-9);
    }

    #[test]
    fn smm_fir_is_invariant_to_compression() {
        let sys = g1();
        let u = gaussian_signal(1, 80, 2, Stream::OfflineInput);
        let traj = sys.simulate(&u, &DVector::zeros(4)).unwrap().add_noise(0.01, 3);
        let set = SignalMatrixSet::partition(&traj.u, &traj.y, 4, 11, MatrixKind::Hankel).unwrap();
        let a = smm_fir(&set, 11, 0.01).unwrap();
        let b = smm_fir(&set.compress().unwrap(), 11, 0.01).unwrap();
        assert!((&a.h - &b.h).amax() < 1e-8 * a.h.amax());
        assert!((a.cov.diagonal() - b.cov.diagonal()).amax() < 1e-10);
    }

    #[test]
    fn fit_metric_examples() {
        let h = DVector::from_vec(vec![1.0, 0.0]);
        assert_eq!(fit_metric(&h, &h).unwrap(), 100.0);
        let mean = DVector::from_element(2, 0.5);
        assert!(fit_metric(&h, &mean).unwrap().abs() < 1e-12);
        let w = fit_metric(&h, &DVector::zeros(2)).unwrap();
        assert!((w - 100.0 * (1.0 - 2f64.sqrt())).abs() < 1e-12);
        assert!((w + 41.42).abs() < 0.01);
        assert!(fit_metric(&DVector::from_element(3, 1.0), &DVector::zeros(3)).is_err());
        assert!(fit_metric(&h, &DVector::zeros(3)).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn tc_kernel_is_psd(alpha in 1e-3f64..1e3, beta in 0.01f64..0.999, n in 1usize..25) {
            let k = tc_kernel(&KernelSpec::new(alpha, beta, n).unwrap());
            prop_assert!(k.symmetric_eigenvalues().min() >= -1e-12 * alpha);
        }

        #[test]
        fn gain_and_regularized_forms_agree(seed in 0u64..100_000, alpha in 0.1f64..10.0, beta in 0.5f64..0.95) {
            let n = 6;
            let sk = tc_kernel(&KernelSpec::new(alpha, beta, n).unwrap());
            let sd = random_spd(n, seed, 0.2);
            let h = random_vector(n, seed + 1);
            let est = FirEstimate { h: h.clone(), cov: sd.clone(), method: FirMethod::Ls };
            let out = kernel_combine(&est, &sk).unwrap();
            // (Sd^-1 + Sk^-1)^-1 Sd^-1 h
            let sdi = sd.clone().try_inverse().unwrap();
            let ski = sk.clone().try_inverse().unwrap();
            let reg = (&sdi + &ski).try_inverse().unwrap() * &sdi * &h;
            prop_assert!((&out.h - reg).amax() < 1e-8 * h.amax().max(1.0));
            // posterior covariance is dominated by both prior and data covariance
            let e1 = (&sk - &out.cov).symmetric_eigenvalues().min();
            let e2 = (&sd - &out.cov).symmetric_eigenvalues().min();
            prop_assert!(e1 >= -1e-10 && e2 >= -1e-10);
            // shrinkage in the prior metric
            let before = h.dot(&(&ski * &h));
            let after = out.h.dot(&(&ski * &out.h));
            prop_assert!(after <= before + 1e-9 * before.max(1.0));
        }
    }
}
