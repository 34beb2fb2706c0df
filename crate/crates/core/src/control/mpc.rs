use nalgebra::{DMatrix, DVector};

use super::{TrackingSolver, Weight};
use crate::lti::LtiSystem;
use crate::{Error, Result};

/// Model predictive control with the true model and exact state.
#[derive(Clone, Debug)]
pub struct IdealMpc {
    observability: DMatrix<f64>,
    solver: TrackingSolver,
}

impl IdealMpc {
    pub fn new(system: &LtiSystem, horizon: usize, q: &Weight, r: &Weight) -> Result<Self> {
        let (observability, toeplitz) = condensed_prediction(system, horizon)?;
        let solver = TrackingSolver::new(
            toeplitz,
            q.diagonal(horizon * system.ny())?,
            &r.diagonal(horizon * system.nu())?,
        )?;
        Ok(Self { observability, solver })
    }

    pub fn step(&self, x: &DVector<f64>, r: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.observability.ncols() {
            return Err(Error::Dimension(format!("state has length {}, expected {}", x.len(), self.observability.ncols())));
        }
        self.solver.solve(&(&self.observability * x), r)
    }

    pub fn predict(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.observability * x + self.solver.gain() * u
    }
}

/// Stacked `y = O x + T u` over `horizon` steps.
pub fn condensed_prediction(system: &LtiSystem, horizon: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (nx, nu, ny) = (system.nx(), system.nu(), system.ny());
    let markov = system.impulse_response(horizon.max(1))?;
    let mut obs = DMatrix::zeros(horizon * ny, nx);
    let mut toeplitz = DMatrix::zeros(horizon * ny, horizon * nu);
    let mut cak = system.c().clone();
    for k in 0..horizon {
        obs.rows_mut(k * ny, ny).copy_from(&cak);
        cak *= system.a();
        for j in 0..=k {
            toeplitz.view_mut((k * ny, j * nu), (ny, nu)).copy_from(&markov[k - j]);
        }
    }
    Ok((obs, toeplitz))
}

/// Single ideal-MPC solve.
pub fn ideal_mpc_step(system: &LtiSystem, x: &DVector<f64>, r: &DVector<f64>, q: &Weight, rw: &Weight) -> Result<DVector<f64>> {
    let horizon = r.len() / system.ny().max(1);
    IdealMpc::new(system, horizon, q, rw)?.step(x, r)
}
