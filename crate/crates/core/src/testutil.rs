//! Shared fixtures for unit tests.

use nalgebra::{DMatrix, DVector};

use crate::lti::{gaussian_signal, LtiSystem};
use crate::rng::{stream_rng, Stream};
use crate::signal_matrix::{MatrixKind, SignalMatrixSet};
use rand_distr::{Distribution, Normal};

/// Hankel set from an i.i.d. input experiment on `sys` with output noise `sigma2`.
pub fn dataset(sys: &LtiSystem, n: usize, l0: usize, lp: usize, sigma2: f64, seed: u64) -> SignalMatrixSet {
    let u = gaussian_signal(1, n, seed, Stream::OfflineInput);
    let traj = sys.simulate(&u, &DVector::zeros(sys.nx())).unwrap().add_noise(sigma2, seed);
    SignalMatrixSet::partition(&traj.u, &traj.y, l0, lp, MatrixKind::Hankel).unwrap()
}

/// A noise-free trajectory of length `l0 + lp` from a random initial state,
/// split into `(u_ini, y_ini, u, y)`.
pub fn fresh_window(sys: &LtiSystem, l0: usize, lp: usize, seed: u64) -> (DVector<f64>, DVector<f64>, DVector<f64>, DVector<f64>) {
    let mut rng = stream_rng(seed, Stream::Custom(77));
    let normal = Normal::new(0.0, 1.0).unwrap();
    let x0 = DVector::from_fn(sys.nx(), |_, _| normal.sample(&mut rng));
    let u = DMatrix::from_fn(1, l0 + lp, |_, _| normal.sample(&mut rng));
    let traj = sys.simulate(&u, &x0).unwrap();
    let uu = DVector::from_iterator(l0 + lp, u.iter().copied());
    let yy = DVector::from_iterator(l0 + lp, traj.y.iter().copied());
    (uu.rows(0, l0).into_owned(), yy.rows(0, l0).into_owned(), uu.rows(l0, lp).into_owned(), yy.rows(l0, lp).into_owned())
}

pub fn random_vector(n: usize, seed: u64) -> DVector<f64> {
    let mut rng = stream_rng(seed, Stream::Custom(78));
    let normal = Normal::new(0.0, 1.0).unwrap();
    DVector::from_fn(n, |_, _| normal.sample(&mut rng))
}

pub fn random_matrix(r: usize, c: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = stream_rng(seed, Stream::Custom(79));
    let normal = Normal::new(0.0, 1.0).unwrap();
    DMatrix::from_fn(r, c, |_, _| normal.sample(&mut rng))
}
