//! Hankel and Page data matrices built from offline trajectories.

use std::io::Write;

use nalgebra::{DMatrix, SVD};
use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::lti::Signal;
use crate::{Error, Result};

/// How the data matrices were built.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixKind {
    /// Overlapping windows, `M = N - L + 1`.
    Hankel,
    /// Disjoint windows, `M = floor(N / L)`.
    Page,
    /// `2L`-column SVD compression of a Hankel or Page set.
    Compressed,
}

/// Block Hankel matrix of depth `depth`: block row `i`, column `j` holds sample `i + j`.
pub fn build_hankel(signal: &Signal, depth: usize) -> Result<DMatrix<f64>> {
    let (n, len) = signal.shape();
    if depth == 0 || len < depth {
        return Err(Error::InsufficientData { needed: depth.max(1), got: len });
    }
    let m = len - depth + 1;
    let mut out = DMatrix::zeros(depth * n, m);
    for j in 0..m {
        for i in 0..depth {
            out.view_mut((i * n, j), (n, 1)).copy_from(&signal.column(i + j));
        }
    }
    Ok(out)
}

/// Page matrix: column `j` is the window starting at `j * depth`. Trailing samples are dropped.
pub fn build_page(signal: &Signal, depth: usize) -> Result<DMatrix<f64>> {
    let (n, len) = signal.shape();
    if depth == 0 || len < depth {
        return Err(Error::InsufficientData { needed: depth.max(1), got: len });
    }
    let m = len / depth;
    let mut out = DMatrix::zeros(depth * n, m);
    for j in 0..m {
        for i in 0..depth {
            out.view_mut((i * n, j), (n, 1)).copy_from(&signal.column(j * depth + i));
        }
    }
    Ok(out)
}

/// Whether `signal` is persistently exciting of order `order`.
pub fn persistency_order(signal: &Signal, order: usize) -> bool {
    let (n, len) = signal.shape();
    if order == 0 || n == 0 || len + 1 < order * (n + 1) {
        return false;
    }
    match build_hankel(signal, order) {
        Ok(h) => linalg::rank(&h) == order * n,
        Err(_) => false,
    }
}

/// Partitioned data matrices `U_p, U_f, Y_p, Y_f`.
#[derive(Clone, Debug, PartialEq)]
pub struct SignalMatrixSet {
    pub up: DMatrix<f64>,
    pub uf: DMatrix<f64>,
    pub yp: DMatrix<f64>,
    pub yf: DMatrix<f64>,
    l0: usize,
    lp: usize,
    nu: usize,
    ny: usize,
    kind: MatrixKind,
}

/// Rank report from [`SignalMatrixSet::check_rank_conditions`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RankReport {
    pub rank_uy: usize,
    pub full_row_rank_u: bool,
    pub consistent_with_nx: bool,
}

impl SignalMatrixSet {
    /// Split depth-`L0 + Lp` data matrices of `u` and `y` into past and future blocks.
    pub fn partition(u: &Signal, y: &Signal, l0: usize, lp: usize, kind: MatrixKind) -> Result<Self> {
        if u.ncols() != y.ncols() {
            return Err(Error::Dimension(format!("u has {} samples, y has {}", u.ncols(), y.ncols())));
        }
        if lp == 0 {
            return Err(Error::InvalidArgument("future window must be at least 1".into()));
        }
        let depth = l0 + lp;
        let (hu, hy) = match kind {
            MatrixKind::Hankel => (build_hankel(u, depth)?, build_hankel(y, depth)?),
            MatrixKind::Page => (build_page(u, depth)?, build_page(y, depth)?),
            MatrixKind::Compressed => {
                return Err(Error::InvalidArgument("compressed sets are produced by compress()".into()))
            }
        };
        let (nu, ny) = (u.nrows(), y.nrows());
        Ok(Self {
            up: hu.rows(0, l0 * nu).into_owned(),
            uf: hu.rows(l0 * nu, lp * nu).into_owned(),
            yp: hy.rows(0, l0 * ny).into_owned(),
            yf: hy.rows(l0 * ny, lp * ny).into_owned(),
            l0,
            lp,
            nu,
            ny,
            kind,
        })
    }

    /// Assemble a set from explicit blocks.
    pub fn from_blocks(
        up: DMatrix<f64>,
        uf: DMatrix<f64>,
        yp: DMatrix<f64>,
        yf: DMatrix<f64>,
        l0: usize,
        lp: usize,
        kind: MatrixKind,
    ) -> Result<Self> {
        let m = up.ncols();
        if [uf.ncols(), yp.ncols(), yf.ncols()].iter().any(|&c| c != m) {
            return Err(Error::Dimension("all data matrices must have the same column count".into()));
        }
        if lp == 0 || !uf.nrows().is_multiple_of(lp) || !yf.nrows().is_multiple_of(lp) {
            return Err(Error::Dimension("future blocks must have Lp * channels rows".into()));
        }
        let nu = uf.nrows() / lp;
        let ny = yf.nrows() / lp;
        if up.nrows() != l0 * nu || yp.nrows() != l0 * ny {
            return Err(Error::Dimension("past blocks must have L0 * channels rows".into()));
        }
        Ok(Self { up, uf, yp, yf, l0, lp, nu, ny, kind })
    }

    pub fn l0(&self) -> usize {
        self.l0
    }
    pub fn lp(&self) -> usize {
        self.lp
    }
    /// Total window length `L = L0 + Lp`.
    pub fn depth(&self) -> usize {
        self.l0 + self.lp
    }
    pub fn m(&self) -> usize {
        self.up.ncols()
    }
    pub fn nu(&self) -> usize {
        self.nu
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    pub fn require_siso(&self) -> Result<()> {
        if self.nu != 1 || self.ny != 1 {
            return Err(Error::NotSiso { nu: self.nu, ny: self.ny });
        }
        Ok(())
    }

    /// `col(U_p, U_f)`.
    pub fn u(&self) -> DMatrix<f64> {
        linalg::vstack(&[&self.up, &self.uf])
    }

    /// `col(Y_p, Y_f)`.
    pub fn y(&self) -> DMatrix<f64> {
        linalg::vstack(&[&self.yp, &self.yf])
    }

    /// `col(U, Y)`.
    pub fn uy(&self) -> DMatrix<f64> {
        linalg::vstack(&[&self.up, &self.uf, &self.yp, &self.yf])
    }

    /// `col(U_p, Y_p, U_f)`, the matrix of the conditioning equations.
    pub fn conditioning_matrix(&self) -> DMatrix<f64> {
        linalg::vstack(&[&self.up, &self.yp, &self.uf])
    }

    /// Numerical rank of `col(U, Y)` and input excitation.
    pub fn check_rank_conditions(&self, nx_hint: usize) -> RankReport {
        let rank_uy = linalg::rank(&self.uy());
        let u = self.u();
        RankReport {
            rank_uy,
            full_row_rank_u: linalg::rank(&u) == u.nrows(),
            consistent_with_nx: rank_uy == nx_hint + self.nu * self.depth(),
        }
    }

    /// Replace the data by `W S_{2L}` from the SVD of `col(U, Y)`.
    ///
    /// The result has exactly `2L` columns; the right singular vectors are discarded.
    pub fn compress(&self) -> Result<Self> {
        self.require_siso()?;
        if self.kind == MatrixKind::Compressed {
            return Err(Error::InvalidArgument("set is already compressed".into()));
        }
        let l = self.depth();
        let rows = 2 * l;
        if self.m() < rows {
            return Err(Error::CompressionNotApplicable { needed: rows, got: self.m() });
        }
        let svd = SVD::new(self.uy(), true, false);
        let w = svd.u.expect("left singular vectors requested");
        let mut ws = w.columns(0, rows).into_owned();
        for (k, s) in svd.singular_values.iter().take(rows).enumerate() {
            ws.column_mut(k).scale_mut(*s);
        }
        let (l0, lp) = (self.l0, self.lp);
        Ok(Self {
            up: ws.rows(0, l0).into_owned(),
            uf: ws.rows(l0, lp).into_owned(),
            yp: ws.rows(l, l0).into_owned(),
            yf: ws.rows(l + l0, lp).into_owned(),
            l0,
            lp,
            nu: 1,
            ny: 1,
            kind: MatrixKind::Compressed,
        })
    }
}

/// Writes a matrix as `# rows cols` followed by comma-separated rows.
pub fn write_matrix_csv<W: Write>(m: &DMatrix<f64>, mut w: W) -> std::io::Result<()> {
    writeln!(w, "# {} {}", m.nrows(), m.ncols())?;
    for i in 0..m.nrows() {
        let row: Vec<String> = m.row(i).iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}
