//! Data generation and single-run building blocks shared by the experiments and the CLI.

use nalgebra::DVector;
use smm_core::control::{receding_horizon_run, ClosedLoopResult, ControllerConfig, ControllerKind, Reference};
use smm_core::kernel::{default_alpha_grid, default_beta_grid, ls_fir, smm_fir, tc_regularize, FirEstimate, FirMethod};
use smm_core::lti::{gaussian_signal, LtiSystem, NoiseModel};
use smm_core::rng::Stream;
use smm_core::signal_matrix::{MatrixKind, SignalMatrixSet};

use crate::BenchError;

/// Identification record: `n_data` samples plus the `n - 1` inputs before them.
#[derive(Clone, Debug, PartialEq)]
pub struct IdentificationData {
    pub u: Vec<f64>,
    pub y: Vec<f64>,
    pub past_u: Vec<f64>,
}

/// Excites `system` from rest with unit white noise starting `n - 1` samples
/// before the recorded window and adds output noise of variance `sigma2`.
pub fn identification_data(
    system: &LtiSystem,
    n_data: usize,
    n: usize,
    sigma2: f64,
    seed: u64,
) -> Result<IdentificationData, BenchError> {
    let pre = n.saturating_sub(1);
    let u = gaussian_signal(1, n_data + pre, seed, Stream::OfflineInput);
    let traj = system.simulate(&u, &DVector::zeros(system.nx()))?.add_noise(sigma2, seed);
    let all_u: Vec<f64> = traj.u.iter().copied().collect();
    let all_y: Vec<f64> = traj.y.iter().copied().collect();
    Ok(IdentificationData { u: all_u[pre..].to_vec(), y: all_y[pre..].to_vec(), past_u: all_u[..pre].to_vec() })
}

/// Impulse-response estimate of one method. LS uses the past inputs only when `known_past`.
pub fn estimate(
    data: &IdentificationData,
    method: FirMethod,
    n: usize,
    l0: usize,
    sigma2: f64,
    known_past: bool,
) -> Result<FirEstimate, BenchError> {
    let (alphas, betas) = (default_alpha_grid(), default_beta_grid());
    let ls = || ls_fir(&data.u, &data.y, n, sigma2, known_past.then_some(data.past_u.as_slice()));
    let smm = || -> Result<FirEstimate, BenchError> {
        let u = nalgebra::DMatrix::from_row_slice(1, data.u.len(), &data.u);
        let y = nalgebra::DMatrix::from_row_slice(1, data.y.len(), &data.y);
        let set = SignalMatrixSet::partition(&u, &y, l0, n, MatrixKind::Hankel)?;
        Ok(smm_fir(&set, n, sigma2)?)
    };
    let mut est = match method {
        FirMethod::Ls => ls()?,
        FirMethod::LsTc => tc_regularize(&ls()?, &alphas, &betas)?.0,
        FirMethod::Smm => smm()?,
        FirMethod::SmmTc => tc_regularize(&smm()?, &alphas, &betas)?.0,
    };
    est.method = method;
    Ok(est)
}

/// Offline Hankel data for control: `n_data` samples from rest with unit white input.
pub fn control_dataset(
    system: &LtiSystem,
    n_data: usize,
    l0: usize,
    lp: usize,
    sigma2: f64,
    seed: u64,
) -> Result<SignalMatrixSet, BenchError> {
    let u = gaussian_signal(1, n_data, seed, Stream::OfflineInput);
    let traj = system.simulate(&u, &DVector::zeros(system.nx()))?.add_noise(sigma2, seed);
    Ok(SignalMatrixSet::partition(&traj.u, &traj.y, l0, lp, MatrixKind::Hankel)?)
}

/// Shared settings of the closed-loop comparisons.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlTask {
    pub system: LtiSystem,
    pub n_data: usize,
    pub l0: usize,
    pub lp: usize,
    pub noise: NoiseModel,
    pub steps: usize,
    pub lambda_g_grid: Vec<f64>,
    pub lambda_y: f64,
    pub compress: bool,
}

/// DeePC over the whole `lambda_g` grid with the lowest realized cost kept.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleDeepc {
    pub best: ClosedLoopResult,
    pub best_lambda_g: f64,
    pub costs: Vec<f64>,
}

impl ControlTask {
    pub fn config(&self, kind: ControllerKind) -> ControllerConfig {
        let mut c = ControllerConfig::new(kind, self.l0, self.lp, self.noise);
        c.lambda_y = self.lambda_y;
        c
    }

    pub fn dataset(&self, seed: u64) -> Result<SignalMatrixSet, BenchError> {
        let set = control_dataset(&self.system, self.n_data, self.l0, self.lp, self.noise.sigma2, seed)?;
        Ok(if self.compress { set.compress()? } else { set })
    }

    pub fn run(&self, config: &ControllerConfig, set: &SignalMatrixSet, seed: u64) -> Result<ClosedLoopResult, BenchError> {
        let set = (config.kind != ControllerKind::IdealMpc).then_some(set);
        Ok(receding_horizon_run(&self.system, config, set, &Reference::default(), self.steps, seed)?)
    }

    /// Ties keep the smallest `lambda_g`.
    pub fn oracle_deepc(&self, set: &SignalMatrixSet, seed: u64) -> Result<OracleDeepc, BenchError> {
        let mut best: Option<(ClosedLoopResult, f64)> = None;
        let mut costs = Vec::with_capacity(self.lambda_g_grid.len());
        for &lambda_g in &self.lambda_g_grid {
            let mut config = self.config(ControllerKind::Deepc);
            config.lambda_g = lambda_g;
            let out = self.run(&config, set, seed)?;
            costs.push(out.cost);
            if best.as_ref().is_none_or(|(b, _)| out.cost < b.cost) {
                best = Some((out, lambda_g));
            }
        }
        let (best, best_lambda_g) = best.ok_or_else(|| BenchError::Config("empty lambda_g grid".into()))?;
        Ok(OracleDeepc { best, best_lambda_g, costs })
    }
}
