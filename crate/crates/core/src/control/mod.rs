//! Receding-horizon predictive control with data-driven predictors.
//!
//! Every controller here solves an unconstrained convex quadratic in closed
//! form. Sub-PC, SMM-PC and ideal MPC reduce to an affine output prediction
//! `y = offset + gain * u`; regularized DeePC optimizes over `g` directly.

mod closed_loop;
mod deepc;
mod mpc;
mod smmpc;
mod subpc;

pub use closed_loop::{receding_horizon_run, ClosedLoopResult, ControllerConfig, ControllerKind, Reference, StepStatus};
pub use deepc::{deepc_step, DeepcStep, RegularizedDeepc};
pub use mpc::{ideal_mpc_step, IdealMpc};
pub use smmpc::{smmpc_step, SmmPcStep, SmmPredictiveControl};
pub use subpc::{subpc_step, SubPcStep, SubspacePredictiveControl};

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::{Error, Result};

/// Cost weight: the same value on every horizon entry, or an explicit diagonal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Weight {
    Scalar(f64),
    Diagonal(Vec<f64>),
}

impl Weight {
    pub fn diagonal(&self, len: usize) -> Result<DVector<f64>> {
        let d = match self {
            Weight::Scalar(w) => DVector::from_element(len, *w),
            Weight::Diagonal(v) if v.len() == len => DVector::from_column_slice(v),
            Weight::Diagonal(v) => {
                return Err(Error::Dimension(format!("weight has {} entries, expected {len}", v.len())))
            }
        };
        if d.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidArgument("cost weights must be nonnegative".into()));
        }
        Ok(d)
    }

    /// Weight of the first horizon entry, used for the realized stage cost.
    pub fn stage(&self) -> f64 {
        match self {
            Weight::Scalar(w) => *w,
            Weight::Diagonal(v) => v.first().copied().unwrap_or(0.0),
        }
    }
}

/// `sum_k |y_k - r_k|_Q^2 + |u_k|_R^2` with diagonal weights.
pub fn control_cost(u: &DVector<f64>, y: &DVector<f64>, r: &DVector<f64>, q: &Weight, rw: &Weight) -> Result<f64> {
    if y.len() != r.len() {
        return Err(Error::Dimension(format!("y has length {}, r has {}", y.len(), r.len())));
    }
    let qd = q.diagonal(y.len())?;
    let rd = rw.diagonal(u.len())?;
    Ok(linalg::weighted_sq_norm(&(y - r), &qd) + linalg::weighted_sq_norm(u, &rd))
}

/// Minimizer of `|offset + gain u - r|_Q^2 + |u|_R^2` for a fixed `gain`.
#[derive(Clone, Debug)]
pub(crate) struct TrackingSolver {
    gain: DMatrix<f64>,
    qd: DVector<f64>,
    chol: Cholesky<f64, Dyn>,
}

impl TrackingSolver {
    pub(crate) fn new(gain: DMatrix<f64>, qd: DVector<f64>, rd: &DVector<f64>) -> Result<Self> {
        if gain.nrows() != qd.len() || gain.ncols() != rd.len() {
            return Err(Error::Dimension("prediction gain does not match the cost weights".into()));
        }
        let qg = DMatrix::from_fn(gain.nrows(), gain.ncols(), |i, j| qd[i] * gain[(i, j)]);
        let mut h = gain.transpose() * qg;
        for i in 0..rd.len() {
            h[(i, i)] += rd[i];
        }
        linalg::symmetrize(&mut h);
        let chol = linalg::cholesky(h, "reduced tracking Hessian")?;
        Ok(Self { gain, qd, chol })
    }

    pub(crate) fn solve(&self, offset: &DVector<f64>, r: &DVector<f64>) -> Result<DVector<f64>> {
        if offset.len() != r.len() || r.len() != self.qd.len() {
            return Err(Error::Dimension(format!("reference has length {}, expected {}", r.len(), self.qd.len())));
        }
        let e = (r - offset).component_mul(&self.qd);
        Ok(self.chol.solve(&(self.gain.transpose() * e)))
    }

    pub(crate) fn gain(&self) -> &DMatrix<f64> {
        &self.gain
    }
}
