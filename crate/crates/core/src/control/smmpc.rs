use nalgebra::DVector;

use super::{TrackingSolver, Weight};
use crate::estimator::{lambda_weight, pinv_solution, OneStepPredictor};
use crate::lti::NoiseModel;
use crate::signal_matrix::SignalMatrixSet;
use crate::{Error, Result};

/// Predictive control with the signal matrix model as predictor.
///
/// The SMM iteration is warm-started from the previous time step and
/// truncated to a single SQP step, so the prediction
/// `y = Yf (P y_ini + Q col(u_ini, u))` is affine in `u`.
#[derive(Clone, Debug)]
pub struct SmmPredictiveControl {
    set: SignalMatrixSet,
    q: Weight,
    r: Weight,
    noise: NoiseModel,
    g_prev: Option<DVector<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SmmPcStep {
    pub u: DVector<f64>,
    pub y_pred: DVector<f64>,
    /// One-step SMM combination for the chosen input, the next warm start.
    pub g: DVector<f64>,
}

impl SmmPredictiveControl {
    pub fn new(set: &SignalMatrixSet, q: &Weight, r: &Weight, noise: NoiseModel) -> Result<Self> {
        set.require_siso()?;
        q.diagonal(set.lp())?;
        r.diagonal(set.lp())?;
        Ok(Self { set: set.clone(), q: q.clone(), r: r.clone(), noise, g_prev: None })
    }

    /// Number of free parameters in `g`: `2L` after compression.
    pub fn decision_dimension(&self) -> usize {
        self.set.m()
    }

    pub fn warm_start(&self) -> Option<&DVector<f64>> {
        self.g_prev.as_ref()
    }

    pub fn set_warm_start(&mut self, g: Option<DVector<f64>>) {
        self.g_prev = g;
    }

    pub fn step(&mut self, u_ini: &DVector<f64>, y_ini: &DVector<f64>, r: &DVector<f64>) -> Result<SmmPcStep> {
        let g_prev = match self.g_prev.take() {
            Some(g) => g,
            None => pinv_solution(&self.set, u_ini, y_ini, &DVector::zeros(self.set.lp()))?.g,
        };
        let out = smmpc_step(&self.set, u_ini, y_ini, r, &self.q, &self.r, &self.noise, &g_prev);
        match &out {
            Ok(step) => self.g_prev = Some(step.g.clone()),
            Err(_) => self.g_prev = Some(g_prev),
        }
        out
    }
}

/// One SMM-PC solve with the predictor linearized at `g_prev`.
#[allow(clippy::too_many_arguments)]
pub fn smmpc_step(
    set: &SignalMatrixSet,
    u_ini: &DVector<f64>,
    y_ini: &DVector<f64>,
    r: &DVector<f64>,
    q: &Weight,
    rw: &Weight,
    noise: &NoiseModel,
    g_prev: &DVector<f64>,
) -> Result<SmmPcStep> {
    set.require_siso()?;
    let (l0, lp) = (set.l0(), set.lp());
    if u_ini.len() != l0 || y_ini.len() != l0 || r.len() != lp {
        return Err(Error::Dimension("online data do not match the data matrices".into()));
    }
    if g_prev.len() != set.m() {
        return Err(Error::Dimension(format!("warm start has length {}, expected {}", g_prev.len(), set.m())));
    }
    let lambda = lambda_weight(g_prev, noise, l0, lp)?;
    let pred = OneStepPredictor::new(set, lambda)?;
    let q_ini = pred.q.columns(0, l0);
    let q_u = pred.q.columns(l0, lp).into_owned();
    let g_offset = &pred.p * y_ini + q_ini * u_ini;
    let offset = &set.yf * &g_offset;
    let solver = TrackingSolver::new(&set.yf * &q_u, q.diagonal(lp)?, &rw.diagonal(lp)?)?;
    let u = solver.solve(&offset, r)?;
    let g = g_offset + q_u * &u;
    let y_pred = &set.yf * &g;
    Ok(SmmPcStep { u, y_pred, g })
}
