use nalgebra::{DMatrix, DVector};

use super::{TrackingSolver, Weight};
use crate::linalg;
use crate::signal_matrix::SignalMatrixSet;
use crate::Result;

/// Subspace predictive control: the output is predicted with the
/// pseudoinverse combination `g_pinv(u; u_ini, y_ini)`, which is linear in
/// all three arguments.
#[derive(Clone, Debug)]
pub struct SubspacePredictiveControl {
    on_u_ini: DMatrix<f64>,
    on_y_ini: DMatrix<f64>,
    solver: TrackingSolver,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubPcStep {
    pub u: DVector<f64>,
    pub y_pred: DVector<f64>,
}

impl SubspacePredictiveControl {
    pub fn new(set: &SignalMatrixSet, q: &Weight, r: &Weight) -> Result<Self> {
        let k = &set.yf * linalg::pinv(&set.conditioning_matrix());
        let (nu0, ny0, nuf) = (set.up.nrows(), set.yp.nrows(), set.uf.nrows());
        let on_u_ini = k.columns(0, nu0).into_owned();
        let on_y_ini = k.columns(nu0, ny0).into_owned();
        let gain = k.columns(nu0 + ny0, nuf).into_owned();
        let solver = TrackingSolver::new(gain, q.diagonal(set.yf.nrows())?, &r.diagonal(nuf)?)?;
        Ok(Self { on_u_ini, on_y_ini, solver })
    }

    pub fn step(&self, u_ini: &DVector<f64>, y_ini: &DVector<f64>, r: &DVector<f64>) -> Result<SubPcStep> {
        let offset = &self.on_u_ini * u_ini + &self.on_y_ini * y_ini;
        let u = self.solver.solve(&offset, r)?;
        let y_pred = offset + self.solver.gain() * &u;
        Ok(SubPcStep { u, y_pred })
    }

    /// Output prediction for an arbitrary input plan.
    pub fn predict(&self, u_ini: &DVector<f64>, y_ini: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.on_u_ini * u_ini + &self.on_y_ini * y_ini + self.solver.gain() * u
    }
}

/// Single Sub-PC solve without reusing factorizations.
pub fn subpc_step(
    set: &SignalMatrixSet,
    u_ini: &DVector<f64>,
    y_ini: &DVector<f64>,
    r: &DVector<f64>,
    q: &Weight,
    rw: &Weight,
) -> Result<SubPcStep> {
    SubspacePredictiveControl::new(set, q, rw)?.step(u_ini, y_ini, r)
}
