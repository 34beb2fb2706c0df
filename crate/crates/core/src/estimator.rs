//! Pseudoinverse predictor, output covariance and the signal matrix model.
//!
//! The SMM estimate of the combination vector `g` minimizes the diagonal
//! approximation of the negative log-likelihood
//!
//! ```text
//! L' log|g|^2 + L0 log(s2 |g|^2 + sp2) + |Yp g - y_ini|^2 / (s2 |g|^2 + sp2)
//! ```
//!
//! over `{g : U g = col(u_ini, u)}`. Each SQP iteration freezes the weight
//! `lambda(g) = L' sp2 / |g|^2 + L s2` and solves the equality-constrained
//! ridge problem `min lambda |g|^2 + |Yp g - y_ini|^2` in closed form, giving
//! `g+ = P y_ini + Q col(u_ini, u)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::linalg::{self, RANK_TOL};
use crate::lti::NoiseModel;
use crate::signal_matrix::{MatrixKind, SignalMatrixSet};
use crate::{Error, Result};

pub const DEFAULT_EPS: f64 = 1e-6;
pub const DEFAULT_MAX_ITERS: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Pinv,
    SmmConverged,
    SmmOneStep,
}

/// Trajectory-combination vector `g` and how it was obtained.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterVector {
    pub g: DVector<f64>,
    pub provenance: Provenance,
    pub iters: usize,
    pub lambda: f64,
}

/// Covariance of the stacked past residual and future output, `L x L`.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputCovariance {
    pub sigma_y: DMatrix<f64>,
    /// Only the diagonal is meaningful (compressed data, where the noise
    /// correlation structure of the raw matrices is no longer available).
    pub diag_only: bool,
}

impl OutputCovariance {
    /// Trailing `lp x lp` block, the covariance of the predicted outputs.
    pub fn future_block(&self, lp: usize) -> DMatrix<f64> {
        let l = self.sigma_y.nrows();
        self.sigma_y.view((l - lp, l - lp), (lp, lp)).into_owned()
    }

    /// The diagonal approximation with all off-diagonal entries zeroed.
    pub fn diagonal(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.sigma_y.diagonal())
    }
}

/// Online conditioning data and tolerances for one SMM simulation.
#[derive(Clone, Debug)]
pub struct SmmProblem<'a> {
    pub set: &'a SignalMatrixSet,
    pub u_ini: DVector<f64>,
    pub y_ini: DVector<f64>,
    pub u: DVector<f64>,
    pub noise: NoiseModel,
    pub eps: f64,
    pub max_iters: usize,
}

impl<'a> SmmProblem<'a> {
    pub fn new(
        set: &'a SignalMatrixSet,
        u_ini: DVector<f64>,
        y_ini: DVector<f64>,
        u: DVector<f64>,
        noise: NoiseModel,
    ) -> Result<Self> {
        check_conditioning_dims(set, &u_ini, &y_ini, &u)?;
        Ok(Self { set, u_ini, y_ini, u, noise, eps: DEFAULT_EPS, max_iters: DEFAULT_MAX_ITERS })
    }

    pub fn with_tolerance(mut self, eps: f64, max_iters: usize) -> Result<Self> {
        if !(eps > 0.0) || max_iters == 0 {
            return Err(Error::InvalidArgument(format!(
                "need eps > 0 and max_iters >= 1, got eps={eps}, max_iters={max_iters}"
            )));
        }
        self.eps = eps;
        self.max_iters = max_iters;
        Ok(self)
    }
}

fn check_conditioning_dims(
    set: &SignalMatrixSet,
    u_ini: &DVector<f64>,
    y_ini: &DVector<f64>,
    u: &DVector<f64>,
) -> Result<()> {
    let want = [(set.up.nrows(), u_ini.len(), "u_ini"), (set.yp.nrows(), y_ini.len(), "y_ini"), (set.uf.nrows(), u.len(), "u")];
    for (rows, len, name) in want {
        if rows != len {
            return Err(Error::Dimension(format!("{name} has length {len}, expected {rows}")));
        }
    }
    Ok(())
}

/// Minimum-norm least-squares solution of `col(Up, Yp, Uf) g = col(u_ini, y_ini, u)`.
pub fn pinv_solution(
    set: &SignalMatrixSet,
    u_ini: &DVector<f64>,
    y_ini: &DVector<f64>,
    u: &DVector<f64>,
) -> Result<ParameterVector> {
    check_conditioning_dims(set, u_ini, y_ini, u)?;
    let a = set.conditioning_matrix();
    let b = linalg::vcat(&[u_ini, y_ini, u]);
    let g = linalg::pinv(&a) * b;
    Ok(ParameterVector { g, provenance: Provenance::Pinv, iters: 0, lambda: 0.0 })
}

/// Full output covariance `Sigma_y(g)`.
///
/// Hankel data give the Toeplitz autocorrelation structure
/// `s2 * sum_k g_k g_{k+|i-j|}`; Page data have independent noise in every
/// entry, so only the diagonal `s2 |g|^2` survives. For compressed data only
/// the diagonal is defined. The online variance is added to the first `L0`
/// diagonal entries.
pub fn sigma_y(g: &DVector<f64>, noise: &NoiseModel, l0: usize, lp: usize, kind: MatrixKind) -> OutputCovariance {
    let l = l0 + lp;
    let m = g.len();
    let mut s = DMatrix::zeros(l, l);
    let norm2 = g.norm_squared();
    match kind {
        MatrixKind::Hankel => {
            for d in 0..l {
                let acf: f64 = if d < m { (0..m - d).map(|k| g[k] * g[k + d]).sum() } else { 0.0 };
                let v = noise.sigma2 * acf;
                for i in 0..l - d {
                    s[(i, i + d)] = v;
                    s[(i + d, i)] = v;
                }
            }
        }
        MatrixKind::Page | MatrixKind::Compressed => {
            s.fill_diagonal(noise.sigma2 * norm2);
        }
    }
    for i in 0..l0 {
        s[(i, i)] += noise.sigma_p2;
    }
    OutputCovariance { sigma_y: s, diag_only: kind == MatrixKind::Compressed }
}

/// SQP weight `lambda(g) = L' sp2 / |g|^2 + L s2`.
pub fn lambda_weight(g: &DVector<f64>, noise: &NoiseModel, l0: usize, lp: usize) -> Result<f64> {
    let l = (l0 + lp) as f64;
    if noise.sigma_p2 == 0.0 {
        return Ok(l * noise.sigma2);
    }
    let n2 = g.norm_squared();
    if n2 == 0.0 {
        return Err(Error::ZeroPseudoinverse);
    }
    Ok(lp as f64 * noise.sigma_p2 / n2 + l * noise.sigma2)
}

/// Diagonal-approximation negative log-likelihood minimized by the SMM.
pub fn mle_objective(g: &DVector<f64>, set: &SignalMatrixSet, y_ini: &DVector<f64>, noise: &NoiseModel) -> f64 {
    let n2 = g.norm_squared();
    let past_var = noise.sigma2 * n2 + noise.sigma_p2;
    let resid = (&set.yp * g - y_ini).norm_squared();
    set.lp() as f64 * n2.ln() + set.l0() as f64 * past_var.ln() + resid / past_var
}

/// Affine one-step map `g+ = P y_ini + Q col(u_ini, u)` for a frozen weight.
#[derive(Clone, Debug)]
pub struct OneStepPredictor {
    /// `M x L0` gain on `y_ini`.
    pub p: DMatrix<f64>,
    /// `M x L` gain on `col(u_ini, u)`.
    pub q: DMatrix<f64>,
    pub lambda: f64,
}

impl OneStepPredictor {
    /// Closed-form minimizer of `lambda |g|^2 + |Yp g - y_ini|^2` subject to `U g = col(u_ini, u)`.
    ///
    /// For `lambda > 0` the inverse of `F = lambda I + Yp^T Yp` is applied
    /// through the `L0 x L0` matrix `lambda I + Yp Yp^T`, so the cost is
    /// linear in the column count. When `lambda` is negligible against
    /// `|Yp|^2` the minimum-norm limit is computed on the null space of `U`.
    pub fn new(set: &SignalMatrixSet, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) {
            return Err(Error::InvalidArgument(format!("lambda must be nonnegative, got {lambda}")));
        }
        let yp = &set.yp;
        let u = set.u();
        let smax = if yp.is_empty() { 0.0 } else { yp.singular_values().max() };
        if lambda <= RANK_TOL * smax * smax || lambda == 0.0 {
            return Self::null_space_limit(yp, &u, lambda);
        }

        let l0 = yp.nrows();
        let mut k = yp * yp.transpose();
        for i in 0..l0 {
            k[(i, i)] += lambda;
        }
        let k = linalg::cholesky(k, "lambda I + Yp Yp^T")?;
        let f_inv = |x: &DMatrix<f64>| -> DMatrix<f64> {
            let correction = yp.transpose() * k.solve(&(yp * x));
            (x - correction) / lambda
        };

        let f_ut = f_inv(&u.transpose());
        let mut gram = &u * &f_ut;
        linalg::symmetrize(&mut gram);
        let gram = linalg::cholesky(gram, "U F^-1 U^T").map_err(|_| Error::SingularConstraint {
            rank: linalg::rank(&u),
            expected: u.nrows(),
        })?;
        let q = gram.solve(&f_ut.transpose()).transpose();
        let f_ypt = f_inv(&yp.transpose());
        let p = &f_ypt - &q * (&u * &f_ypt);
        Ok(Self { p, q, lambda })
    }

    fn null_space_limit(yp: &DMatrix<f64>, u: &DMatrix<f64>, lambda: f64) -> Result<Self> {
        let rank = linalg::rank(u);
        if rank < u.nrows() {
            return Err(Error::SingularConstraint { rank, expected: u.nrows() });
        }
        let u_pinv = linalg::pinv(u);
        let yp_up = yp * &u_pinv;
        // Yp restricted to the null space of U
        let b = yp - &yp_up * u;
        let p = linalg::pinv(&b);
        let q = &u_pinv - &p * yp_up;
        Ok(Self { p, q, lambda })
    }

    pub fn apply(&self, y_ini: &DVector<f64>, u_tilde: &DVector<f64>) -> DVector<f64> {
        &self.p * y_ini + &self.q * u_tilde
    }
}

/// One SQP iteration from `g_prev`.
#[derive(Clone, Debug)]
pub struct SqpStep {
    pub g_next: DVector<f64>,
    pub predictor: OneStepPredictor,
}

pub fn sqp_step(
    g_prev: &DVector<f64>,
    set: &SignalMatrixSet,
    u_ini: &DVector<f64>,
    y_ini: &DVector<f64>,
    u: &DVector<f64>,
    noise: &NoiseModel,
) -> Result<SqpStep> {
    set.require_siso()?;
    check_conditioning_dims(set, u_ini, y_ini, u)?;
    let lambda = lambda_weight(g_prev, noise, set.l0(), set.lp())?;
    let predictor = OneStepPredictor::new(set, lambda)?;
    let g_next = predictor.apply(y_ini, &linalg::vcat(&[u_ini, u]));
    Ok(SqpStep { g_next, predictor })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Converged,
    MaxIterations,
}

/// Output of [`smm_simulate`].
#[derive(Clone, Debug)]
pub struct SmmResult {
    pub g: ParameterVector,
    pub y: DVector<f64>,
    pub cov: OutputCovariance,
    pub status: SolveStatus,
    /// `|g^k|` for `k = 0..=iters`, starting at the pseudoinverse solution.
    pub norm_history: Vec<f64>,
}

/// Serializable summary of an [`SmmResult`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmmRecord {
    pub g: Vec<f64>,
    pub y: Vec<f64>,
    pub sigma_y_diag: Vec<f64>,
    pub iters: usize,
    pub lambda: f64,
    pub status: SolveStatus,
}

impl SmmResult {
    pub fn record(&self) -> SmmRecord {
        SmmRecord {
            g: self.g.g.iter().copied().collect(),
            y: self.y.iter().copied().collect(),
            sigma_y_diag: self.cov.sigma_y.diagonal().iter().copied().collect(),
            iters: self.g.iters,
            lambda: self.g.lambda,
            status: self.status,
        }
    }
}

/// Maximum-likelihood data-driven simulation.
///
/// Starts from the pseudoinverse solution and repeats [`sqp_step`] until
/// `|g^k - g^{k-1}| < eps |g^{k-1}|`. Without online noise the weight does
/// not depend on `g`, so a single iteration is exact. Hitting `max_iters`
/// is reported through [`SolveStatus`], not as an error.
pub fn smm_simulate(problem: &SmmProblem<'_>) -> Result<SmmResult> {
    let set = problem.set;
    set.require_siso()?;
    let noise = &problem.noise;
    let g0 = pinv_solution(set, &problem.u_ini, &problem.y_ini, &problem.u)?.g;
    if noise.sigma_p2 > 0.0 && g0.norm_squared() == 0.0 {
        return Err(Error::ZeroPseudoinverse);
    }
    let u_tilde = linalg::vcat(&[&problem.u_ini, &problem.u]);
    let fixed_weight = noise.sigma_p2 == 0.0;

    let mut g = g0;
    let mut norms = vec![g.norm()];
    let mut status = SolveStatus::MaxIterations;
    let mut lambda = 0.0;
    let mut iters = 0;
    while iters < problem.max_iters {
        lambda = lambda_weight(&g, noise, set.l0(), set.lp())?;
        let next = OneStepPredictor::new(set, lambda)?.apply(&problem.y_ini, &u_tilde);
        iters += 1;
        let change = (&next - &g).norm();
        let prev_norm = g.norm();
        g = next;
        norms.push(g.norm());
        if fixed_weight || change < problem.eps * prev_norm {
            status = SolveStatus::Converged;
            break;
        }
    }
    let y = &set.yf * &g;
    let cov = sigma_y(&g, noise, set.l0(), set.lp(), set.kind());
    Ok(SmmResult {
        g: ParameterVector { g, provenance: Provenance::SmmConverged, iters, lambda },
        y,
        cov,
        status,
        norm_history: norms,
    })
}
