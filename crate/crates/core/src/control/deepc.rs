use nalgebra::{DMatrix, DVector};

use super::Weight;
use crate::linalg;
use crate::signal_matrix::SignalMatrixSet;
use crate::{Error, Result};

/// Regularized DeePC with quadratic penalties on `g` and on the past-output slack.
///
/// Substituting `u = Uf g`, `y = Yf g` and `y_hat_ini = Yp g` leaves
///
/// ```text
/// min_g |Yf g - r|_Q^2 + |Uf g|_R^2 + lambda_g |g|^2 + lambda_y |Yp g - y_ini|^2
/// s.t.  Up g = u_ini
/// ```
///
/// The constraint is eliminated with `g = Up^+ u_ini + N z`, `N` an
/// orthonormal null-space basis of `Up`, and the remaining least-squares
/// problem in `z` is solved by QR. Working on the stacked residual rather
/// than the normal equations keeps extreme weight ratios usable. The
/// factorization does not depend on the online data and is computed once.
#[derive(Clone, Debug)]
pub struct RegularizedDeepc {
    uf: DMatrix<f64>,
    yp: DMatrix<f64>,
    yf: DMatrix<f64>,
    // square roots of the cost weights
    sqrt_q: DVector<f64>,
    sqrt_r: DVector<f64>,
    sqrt_lg: f64,
    sqrt_ly: f64,
    up_pinv: DMatrix<f64>,
    null_basis: DMatrix<f64>,
    /// Stacked residual operator restricted to the null space, as `Q1 R1`.
    q1: DMatrix<f64>,
    r1: DMatrix<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeepcStep {
    pub u: DVector<f64>,
    pub y_pred: DVector<f64>,
    pub g: DVector<f64>,
    pub yhat_ini: DVector<f64>,
}

impl RegularizedDeepc {
    pub fn new(set: &SignalMatrixSet, q: &Weight, r: &Weight, lambda_g: f64, lambda_y: f64) -> Result<Self> {
        if !(lambda_g > 0.0 && lambda_y > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "DeePC weights must be positive, got lambda_g={lambda_g}, lambda_y={lambda_y}"
            )));
        }
        let sqrt_q = q.diagonal(set.yf.nrows())?.map(f64::sqrt);
        let sqrt_r = r.diagonal(set.uf.nrows())?.map(f64::sqrt);
        let (sqrt_lg, sqrt_ly) = (lambda_g.sqrt(), lambda_y.sqrt());
        let (m, nc) = (set.m(), set.up.nrows());
        let rank = linalg::rank(&set.up);
        if rank < nc {
            return Err(Error::SingularConstraint { rank, expected: nc });
        }

        // Full orthogonal factor of Up^T; its trailing columns span ker(Up).
        let mut qt = DMatrix::identity(m, m);
        set.up.transpose().qr().q_tr_mul(&mut qt);
        let null_basis = qt.rows(nc, m - nc).transpose();

        let mut stacked = DMatrix::zeros(set.yf.nrows() + set.uf.nrows() + m + set.yp.nrows(), m - nc);
        let mut row = 0;
        for block in [
            DMatrix::from_diagonal(&sqrt_q) * &set.yf * &null_basis,
            DMatrix::from_diagonal(&sqrt_r) * &set.uf * &null_basis,
            &null_basis * sqrt_lg,
            &set.yp * &null_basis * sqrt_ly,
        ] {
            stacked.rows_mut(row, block.nrows()).copy_from(&block);
            row += block.nrows();
        }
        let qr = stacked.qr();
        let r1 = qr.r();
        if (0..r1.nrows()).any(|i| r1[(i, i)] == 0.0) {
            return Err(Error::Singular("DeePC least-squares operator is rank deficient".into()));
        }
        Ok(Self {
            uf: set.uf.clone(),
            yp: set.yp.clone(),
            yf: set.yf.clone(),
            sqrt_q,
            sqrt_r,
            sqrt_lg,
            sqrt_ly,
            up_pinv: linalg::pinv(&set.up),
            null_basis,
            q1: qr.q(),
            r1,
        })
    }

    pub fn step(&self, u_ini: &DVector<f64>, y_ini: &DVector<f64>, r: &DVector<f64>) -> Result<DeepcStep> {
        if u_ini.len() != self.up_pinv.ncols() || y_ini.len() != self.yp.nrows() || r.len() != self.yf.nrows() {
            return Err(Error::Dimension("online data do not match the data matrices".into()));
        }
        let g0 = &self.up_pinv * u_ini;
        // Residual targets minus the contribution of the particular solution.
        let target = linalg::vcat(&[
            &(r - &self.yf * &g0).component_mul(&self.sqrt_q),
            &(-(&self.uf * &g0).component_mul(&self.sqrt_r)),
            &(-&g0 * self.sqrt_lg),
            &((y_ini - &self.yp * &g0) * self.sqrt_ly),
        ]);
        let z = self
            .r1
            .solve_upper_triangular(&(self.q1.transpose() * target))
            .ok_or_else(|| Error::Singular("DeePC triangular factor".into()))?;
        let g = g0 + &self.null_basis * z;
        Ok(DeepcStep { u: &self.uf * &g, y_pred: &self.yf * &g, yhat_ini: &self.yp * &g, g })
    }
}

/// Single DeePC solve without reusing factorizations.
#[allow(clippy::too_many_arguments)]
pub fn deepc_step(
    set: &SignalMatrixSet,
    u_ini: &DVector<f64>,
    y_ini: &DVector<f64>,
    r: &DVector<f64>,
    q: &Weight,
    rw: &Weight,
    lambda_g: f64,
    lambda_y: f64,
) -> Result<DeepcStep> {
    RegularizedDeepc::new(set, q, rw, lambda_g, lambda_y)?.step(u_ini, y_ini, r)
}
