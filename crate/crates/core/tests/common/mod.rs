#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use psd_bundle::linalg::hermitian_part;
use psd_bundle::{PsdMatrix, Scalar};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn diag(v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_row_slice(v))
}

/// Random orthonormal `n x r` frame.
pub fn random_frame<T: Scalar>(n: usize, r: usize, rng: &mut ChaCha8Rng) -> DMatrix<T> {
    let g = DMatrix::<T>::from_fn(n, r, |_, _| T::normal(rng));
    g.qr().q()
}

/// Random PD matrix with eigenvalues in `[lo, hi]`.
pub fn random_pd_in<T: Scalar>(n: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> DMatrix<T> {
    let q = random_frame::<T>(n, n, rng);
    let vals: Vec<f64> = (0..n).map(|_| rng.random_range(lo..hi)).collect();
    let mut scaled = q.clone();
    for (j, &v) in vals.iter().enumerate() {
        for x in scaled.column_mut(j).iter_mut() {
            *x = x.scale(v);
        }
    }
    hermitian_part(&(scaled * q.adjoint()))
}

pub fn random_pd<T: Scalar>(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<T> {
    random_pd_in(n, 0.2, 5.0, rng)
}

/// `F M F*` as a PSD matrix.
pub fn psd_on<T: Scalar>(frame: &DMatrix<T>, m: &DMatrix<T>) -> PsdMatrix<T> {
    PsdMatrix::new(hermitian_part(&(frame * m * frame.adjoint()))).unwrap()
}

/// Random PSD matrix of size `n` and rank `r`.
pub fn random_psd<T: Scalar>(n: usize, r: usize, rng: &mut ChaCha8Rng) -> PsdMatrix<T> {
    let f = random_frame::<T>(n, r, rng);
    let m = random_pd::<T>(r, rng);
    psd_on(&f, &m)
}

pub fn min_eig(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.min()
}

pub fn max_eig(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.max()
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, x| a.max(x.abs()))
}
