//! Discrete-time LTI systems with additive output noise.
//!
//! Signals are stored as `channels x samples` matrices: column `t` holds the
//! vector sample at time `t`.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::rng::{stream_rng, Stream};
use crate::{Error, Result};

/// A multichannel signal, one column per time index.
pub type Signal = DMatrix<f64>;

/// Wrap a scalar sequence as a single-channel [`Signal`].
pub fn siso_signal(samples: &[f64]) -> Signal {
    DMatrix::from_row_slice(1, samples.len(), samples)
}

/// i.i.d. standard normal signal drawn from `stream` under `seed`.
pub fn gaussian_signal(channels: usize, len: usize, seed: u64, stream: Stream) -> Signal {
    let mut rng = stream_rng(seed, stream);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    DMatrix::from_fn(channels, len, |_, _| normal.sample(&mut rng))
}

/// State-space realization `x+ = A x + B u`, `y = C x + D u`.
#[derive(Clone, Debug, PartialEq)]
pub struct LtiSystem {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    d: DMatrix<f64>,
}

/// Controllability/observability report from [`LtiSystem::check_minimality`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Minimality {
    pub controllable: bool,
    pub observable: bool,
}

impl Minimality {
    pub fn is_minimal(&self) -> bool {
        self.controllable && self.observable
    }
}

impl LtiSystem {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        let nx = a.nrows();
        if a.ncols() != nx {
            return Err(Error::Dimension(format!("A must be square, got {}x{}", nx, a.ncols())));
        }
        if b.nrows() != nx {
            return Err(Error::Dimension(format!("B has {} rows, expected {nx}", b.nrows())));
        }
        if c.ncols() != nx {
            return Err(Error::Dimension(format!("C has {} columns, expected {nx}", c.ncols())));
        }
        if d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(Error::Dimension(format!(
                "D is {}x{}, expected {}x{}",
                d.nrows(),
                d.ncols(),
                c.nrows(),
                b.ncols()
            )));
        }
        Ok(Self { a, b, c, d })
    }

    /// Controllable canonical realization of a SISO transfer function.
    ///
    /// Coefficients are in descending powers of `z`. The denominator is
    /// normalized to be monic; a static gain yields a system with no states.
    pub fn from_transfer_function(num: &[f64], den: &[f64]) -> Result<Self> {
        let den = strip_leading_zeros(den);
        let num = strip_leading_zeros(num);
        if den.is_empty() || den[0] == 0.0 {
            return Err(Error::ZeroLeadingCoefficient);
        }
        let n = den.len() - 1;
        let num_deg = num.len().saturating_sub(1);
        if num_deg > n {
            return Err(Error::Improper { num: num_deg, den: n });
        }
        let lead = den[0];
        let den: Vec<f64> = den.iter().map(|v| v / lead).collect();
        // numerator padded to the denominator length
        let mut b = vec![0.0; n + 1 - num.len()];
        b.extend(num.iter().map(|v| v / lead));

        let d0 = b[0];
        // strictly proper remainder: b - d0 * den, drop the leading term
        let rem: Vec<f64> = (1..=n).map(|k| b[k] - d0 * den[k]).collect();

        let mut a = DMatrix::zeros(n, n);
        for j in 0..n {
            a[(0, j)] = -den[j + 1];
        }
        for i in 1..n {
            a[(i, i - 1)] = 1.0;
        }
        let mut bm = DMatrix::zeros(n, 1);
        if n > 0 {
            bm[(0, 0)] = 1.0;
        }
        let c = DMatrix::from_row_slice(1, n, &rem);
        let d = DMatrix::from_element(1, 1, d0);
        Self::new(a, bm, c, d)
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }
    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }
    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }
    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }
    pub fn nx(&self) -> usize {
        self.a.nrows()
    }
    pub fn nu(&self) -> usize {
        self.b.ncols()
    }
    pub fn ny(&self) -> usize {
        self.c.nrows()
    }

    /// Noise-free response to `input` (`n_u x N`) from initial state `x0`.
    pub fn simulate(&self, input: &Signal, x0: &DVector<f64>) -> Result<Trajectory> {
        if input.nrows() != self.nu() {
            return Err(Error::Dimension(format!(
                "input has {} channels, system has {}",
                input.nrows(),
                self.nu()
            )));
        }
        if x0.len() != self.nx() {
            return Err(Error::Dimension(format!("x0 has length {}, expected {}", x0.len(), self.nx())));
        }
        let n = input.ncols();
        if n == 0 {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        let mut x = x0.clone();
        let mut xs = DMatrix::zeros(self.nx(), n);
        let mut ys = DMatrix::zeros(self.ny(), n);
        for t in 0..n {
            let u = input.column(t);
            xs.set_column(t, &x);
            ys.set_column(t, &(&self.c * &x + &self.d * u));
            x = &self.a * &x + &self.b * u;
        }
        Ok(Trajectory { u: input.clone(), y: ys, x: Some(xs) })
    }

    /// State after applying `u` at state `x`, together with the output at that step.
    pub fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let y = &self.c * x + &self.d * u;
        let next = &self.a * x + &self.b * u;
        (next, y)
    }

    /// Markov parameters `h_0 = D`, `h_k = C A^{k-1} B`.
    pub fn impulse_response(&self, n: usize) -> Result<Vec<DMatrix<f64>>> {
        if n == 0 {
            return Err(Error::InvalidArgument("impulse response length must be at least 1".into()));
        }
        let mut out = Vec::with_capacity(n);
        out.push(self.d.clone());
        let mut akb = self.b.clone();
        for _ in 1..n {
            out.push(&self.c * &akb);
            akb = &self.a * akb;
        }
        Ok(out)
    }

    /// Scalar impulse response of a SISO system.
    pub fn impulse_response_siso(&self, n: usize) -> Result<DVector<f64>> {
        if self.nu() != 1 || self.ny() != 1 {
            return Err(Error::NotSiso { nu: self.nu(), ny: self.ny() });
        }
        let h = self.impulse_response(n)?;
        Ok(DVector::from_iterator(n, h.iter().map(|m| m[(0, 0)])))
    }

    /// Rank tests on the controllability and observability matrices.
    pub fn check_minimality(&self) -> Minimality {
        let nx = self.nx();
        if nx == 0 {
            return Minimality { controllable: true, observable: true };
        }
        let (nu, ny) = (self.nu(), self.ny());
        let mut ctrb = DMatrix::zeros(nx, nx * nu);
        let mut obsv = DMatrix::zeros(nx * ny, nx);
        let mut akb = self.b.clone();
        let mut cak = self.c.clone();
        for k in 0..nx {
            ctrb.columns_mut(k * nu, nu).copy_from(&akb);
            obsv.rows_mut(k * ny, ny).copy_from(&cak);
            akb = &self.a * akb;
            cak *= &self.a;
        }
        Minimality {
            controllable: linalg::rank(&ctrb) == nx,
            observable: linalg::rank(&obsv) == nx,
        }
    }
}

fn strip_leading_zeros(p: &[f64]) -> &[f64] {
    let first = p.iter().position(|&v| v != 0.0).unwrap_or(p.len());
    if first == p.len() && !p.is_empty() {
        // keep a single zero so "0" stays a valid (zero) polynomial
        &p[p.len() - 1..]
    } else {
        &p[first..]
    }
}

/// Fourth-order slow test system `0.1159 (z^3 + 0.5 z) / (z^4 - 2.2 z^3 + 2.42 z^2 - 1.87 z + 0.7225)`.
pub fn g1() -> LtiSystem {
    let k = 0.1159;
    LtiSystem::from_transfer_function(&[k, 0.0, 0.5 * k, 0.0], &[1.0, -2.2, 2.42, -1.87, 0.7225])
        .expect("valid transfer function")
}

/// Second-order fast test system `0.9183 z / (z^2 + 0.24 z + 0.36)`.
pub fn g2() -> LtiSystem {
    LtiSystem::from_transfer_function(&[0.9183, 0.0], &[1.0, 0.24, 0.36]).expect("valid transfer function")
}

/// Output-noise variances for the offline dataset and the online measurements.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub sigma2: f64,
    pub sigma_p2: f64,
}

impl NoiseModel {
    pub fn new(sigma2: f64, sigma_p2: f64) -> Result<Self> {
        if !(sigma2 >= 0.0 && sigma_p2 >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "noise variances must be nonnegative, got sigma2={sigma2}, sigma_p2={sigma_p2}"
            )));
        }
        Ok(Self { sigma2, sigma_p2 })
    }

    pub fn noise_free() -> Self {
        Self { sigma2: 0.0, sigma_p2: 0.0 }
    }
}

/// Finite input/output (and optionally state) record.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub u: Signal,
    pub y: Signal,
    pub x: Option<Signal>,
}

impl Trajectory {
    pub fn new(u: Signal, y: Signal) -> Result<Self> {
        if u.ncols() != y.ncols() {
            return Err(Error::Dimension(format!("u has {} samples, y has {}", u.ncols(), y.ncols())));
        }
        if u.ncols() == 0 {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        Ok(Self { u, y, x: None })
    }

    pub fn len(&self) -> usize {
        self.u.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.u.ncols() == 0
    }

    /// Samples `start..start+len` of every stored signal.
    pub fn window(&self, start: usize, len: usize) -> Trajectory {
        Trajectory {
            u: self.u.columns(start, len).into_owned(),
            y: self.y.columns(start, len).into_owned(),
            x: self.x.as_ref().map(|x| x.columns(start, len).into_owned()),
        }
    }

    /// Adds i.i.d. `N(0, sigma2)` noise to every output sample.
    pub fn add_noise(&self, sigma2: f64, seed: u64) -> Trajectory {
        let mut out = self.clone();
        if sigma2 == 0.0 {
            return out;
        }
        let mut rng = stream_rng(seed, Stream::OfflineNoise);
        let normal = Normal::new(0.0, sigma2.sqrt()).expect("finite variance");
        for v in out.y.iter_mut() {
            *v += normal.sample(&mut rng);
        }
        out
    }

    /// Writes `t,u_1..u_nu,y_1..y_ny` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let (nu, ny) = (self.u.nrows(), self.y.nrows());
        let mut header = vec!["t".to_string()];
        header.extend((1..=nu).map(|i| format!("u_{i}")));
        header.extend((1..=ny).map(|i| format!("y_{i}")));
        wr.write_record(&header)?;
        for t in 0..self.len() {
            let mut row = vec![t.to_string()];
            row.extend(self.u.column(t).iter().map(|v| format!("{v:.16e}")));
            row.extend(self.y.column(t).iter().map(|v| format!("{v:.16e}")));
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let header = rd.headers()?.clone();
        let nu = header.iter().filter(|h| h.starts_with("u_")).count();
        let ny = header.iter().filter(|h| h.starts_with("y_")).count();
        if header.len() != 1 + nu + ny || nu == 0 || ny == 0 {
            return Err(Error::InvalidArgument(format!("unexpected trajectory header: {header:?}")));
        }
        let mut cols: Vec<Vec<f64>> = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let vals = rec
                .iter()
                .skip(1)
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::InvalidArgument(format!("bad number in trajectory csv: {e}")))?;
            if vals.len() != nu + ny {
                return Err(Error::Dimension(format!("row has {} values, expected {}", vals.len(), nu + ny)));
            }
            cols.push(vals);
        }
        let n = cols.len();
        let u = DMatrix::from_fn(nu, n, |i, t| cols[t][i]);
        let y = DMatrix::from_fn(ny, n, |i, t| cols[t][nu + i]);
        Trajectory::new(u, y)
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Impulse response of num/den by polynomial long division in `z^{-1}`.
    fn long_division(num: &[f64], den: &[f64], n: usize) -> Vec<f64> {
        // shift to powers of z^{-1}: pad numerator to denominator length
        let mut b = vec![0.0; den.len() - num.len()];
        b.extend_from_slice(num);
        let mut h = vec![0.0; n];
        for k in 0..n {
            let mut acc = if k < b.len() { b[k] } else { 0.0 };
            for j in 1..den.len().min(k + 1) {
                acc -= den[j] * h[k - j];
            }
            h[k] = acc / den[0];
        }
        h
    }

    const G1_NUM: [f64; 4] = [0.1159, 0.0, 0.5 * 0.1159, 0.0];
    const G1_DEN: [f64; 5] = [1.0, -2.2, 2.42, -1.87, 0.7225];

    #[test]
    fn g2_realization_first_markov_parameter() {
        let sys = g2();
        assert_eq!(sys.nx(), 2);
        let cb = (sys.c() * sys.b())[(0, 0)];
        assert!((cb - 0.9183).abs() < 1e-15);
        assert_eq!(sys.d()[(0, 0)], 0.0);
    }

    #[test]
    fn static_gain_has_no_states() {
        let sys = LtiSystem::from_transfer_function(&[1.0], &[1.0]).unwrap();
        assert_eq!(sys.nx(), 0);
        assert_eq!(sys.d()[(0, 0)], 1.0);
        let h = sys.impulse_response_siso(4).unwrap();
        assert_eq!(h.as_slice(), &[1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn g1_matches_long_division() {
        let sys = g1();
        assert_eq!(sys.nx(), 4);
        let h = sys.impulse_response_siso(20).unwrap();
        let oracle = long_division(&G1_NUM, &G1_DEN, 20);
        for (a, b) in h.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn biproper_transfer_function_has_feedthrough() {
        // (2z + 1) / (z - 0.5) = 2 + 2 / (z - 0.5)
        let sys = LtiSystem::from_transfer_function(&[2.0, 1.0], &[1.0, -0.5]).unwrap();
        let h = sys.impulse_response_siso(5).unwrap();
        let oracle = long_division(&[2.0, 1.0], &[1.0, -0.5], 5);
        for (a, b) in h.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn non_monic_denominator_is_normalized() {
        let a = LtiSystem::from_transfer_function(&[2.0], &[2.0, -1.0]).unwrap();
        let b = LtiSystem::from_transfer_function(&[1.0], &[1.0, -0.5]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn transfer_function_errors() {
        assert!(matches!(
            LtiSystem::from_transfer_function(&[1.0, 0.0, 0.0], &[1.0, 0.5]),
            Err(Error::Improper { num: 2, den: 1 })
        ));
        assert!(matches!(
            LtiSystem::from_transfer_function(&[1.0], &[0.0]),
            Err(Error::ZeroLeadingCoefficient)
        ));
    }

    #[test]
    fn g2_impulse_response_prefix() {
        let h = g2().impulse_response_siso(3).unwrap();
        assert_eq!(h[0], 0.0);
        assert!((h[1] - 0.9183).abs() < 1e-15);
        assert!((h[2] + 0.220392).abs() < 1e-12);
    }

    #[test]
    fn g1_has_long_tail() {
        let h = g1().impulse_response_siso(11).unwrap();
        assert!(h[10].abs() > 0.01, "h_10 = {}", h[10]);
    }

    #[test]
    fn zero_input_zero_output() {
        let sys = g1();
        let traj = sys.simulate(&DMatrix::zeros(1, 30), &DVector::zeros(4)).unwrap();
        assert!(traj.y.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn simulate_impulse_of_g2() {
        let mut u = DMatrix::zeros(1, 5);
        u[(0, 0)] = 1.0;
        let traj = g2().simulate(&u, &DVector::zeros(2)).unwrap();
        assert_eq!(traj.y[(0, 0)], 0.0);
        assert!((traj.y[(0, 1)] - 0.9183).abs() < 1e-15);
    }

    #[test]
    fn simulate_matches_convolution() {
        let sys = g1();
        let n = 50;
        let u = gaussian_signal(1, n, 3, Stream::OfflineInput);
        let traj = sys.simulate(&u, &DVector::zeros(4)).unwrap();
        let h = long_division(&G1_NUM, &G1_DEN, n);
        for t in 0..n {
            let conv: f64 = (0..=t).map(|i| h[i] * u[(0, t - i)]).sum();
            assert!((conv - traj.y[(0, t)]).abs() < 1e-10);
        }
    }

    #[test]
    fn simulate_dimension_errors() {
        let sys = g1();
        assert!(sys.simulate(&DMatrix::zeros(2, 5), &DVector::zeros(4)).is_err());
        assert!(sys.simulate(&DMatrix::zeros(1, 5), &DVector::zeros(3)).is_err());
        assert!(sys.simulate(&DMatrix::zeros(1, 0), &DVector::zeros(4)).is_err());
    }

    #[test]
    fn new_rejects_inconsistent_dimensions() {
        let r = LtiSystem::new(DMatrix::zeros(2, 3), DMatrix::zeros(2, 1), DMatrix::zeros(1, 2), DMatrix::zeros(1, 1));
        assert!(r.is_err());
        let r = LtiSystem::new(DMatrix::zeros(2, 2), DMatrix::zeros(2, 1), DMatrix::zeros(1, 2), DMatrix::zeros(1, 2));
        assert!(r.is_err());
    }

    #[test]
    fn add_noise_contract() {
        let sys = g2();
        let u = gaussian_signal(1, 20, 1, Stream::OfflineInput);
        let traj = sys.simulate(&u, &DVector::zeros(2)).unwrap();
        assert_eq!(traj.add_noise(0.0, 9), traj);
        let a = traj.add_noise(0.5, 9);
        let b = traj.add_noise(0.5, 9);
        assert_eq!(a, b);
        assert_eq!(a.u, traj.u);
        assert_eq!(a.x, traj.x);
        assert_ne!(a.y, traj.y);
    }

    #[test]
    fn add_noise_variance() {
        let n = 100_000;
        let traj = Trajectory::new(DMatrix::zeros(1, n), DMatrix::zeros(1, n)).unwrap();
        let noisy = traj.add_noise(1.0, 42);
        let mean = noisy.y.mean();
        let var = noisy.y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        assert!((0.98..=1.02).contains(&var), "variance {var}");
    }

    #[test]
    fn minimality_checks() {
        let one = DMatrix::from_element(1, 1, 1.0);
        let zero = DMatrix::zeros(1, 1);
        let sys = LtiSystem::new(zero.clone(), one.clone(), one.clone(), zero.clone()).unwrap();
        assert!(sys.check_minimality().is_minimal());
        let sys = LtiSystem::new(zero.clone(), one.clone(), zero.clone(), zero.clone()).unwrap();
        assert!(!sys.check_minimality().observable);
        assert!(g1().check_minimality().is_minimal());
        assert!(g2().check_minimality().is_minimal());
    }

    #[test]
    fn g1_minimality_by_svd_oracle() {
        let sys = g1();
        let mut ctrb = DMatrix::zeros(4, 4);
        let mut obsv = DMatrix::zeros(4, 4);
        for k in 0..4 {
            let ak = sys.a().pow(k as u32);
            ctrb.set_column(k, &(&ak * sys.b()).column(0));
            obsv.set_row(k, &(sys.c() * &ak).row(0));
        }
        let sc = ctrb.singular_values();
        let so = obsv.singular_values();
        assert!(sc.min() > 1e-10 * sc.max());
        assert!(so.min() > 1e-10 * so.max());
    }

    #[test]
    fn trajectory_csv_round_trip() {
        let sys = g2();
        let u = gaussian_signal(1, 7, 5, Stream::OfflineInput);
        let traj = sys.simulate(&u, &DVector::zeros(2)).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,u_1,y_1\n"));
        let back = Trajectory::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.u, traj.u);
        assert_eq!(back.y, traj.y);
    }

    #[test]
    fn trajectory_length_invariant() {
        assert!(Trajectory::new(DMatrix::zeros(1, 3), DMatrix::zeros(1, 4)).is_err());
        assert!(Trajectory::new(DMatrix::zeros(1, 0), DMatrix::zeros(1, 0)).is_err());
    }

    #[test]
    fn noise_model_rejects_negative() {
        assert!(NoiseModel::new(-1.0, 0.0).is_err());
        assert!(NoiseModel::new(0.0, f64::NAN).is_err());
        assert!(NoiseModel::new(0.0, 0.0).is_ok());
    }
}
