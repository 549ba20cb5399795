//! Sampling and local parameterization of unitary (orthogonal) groups.

use crate::scalar::{Field, Scalar};
use nalgebra::DMatrix;
use rand::Rng;
use std::f64::consts::PI;

/// Haar-distributed element of `U(k)` (or `O(k)` over the reals).
pub fn haar_unitary<T: Scalar, R: Rng + ?Sized>(k: usize, rng: &mut R) -> DMatrix<T> {
    if k == 0 {
        return DMatrix::zeros(0, 0);
    }
    let g = DMatrix::<T>::from_fn(k, k, |_, _| T::normal(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..k {
        let ph = r[(j, j)].phase();
        for i in 0..k {
            q[(i, j)] *= ph;
        }
    }
    q
}

/// Matrix exponential by scaling and squaring of a Taylor polynomial.
pub fn expm<T: Scalar>(a: &DMatrix<T>) -> DMatrix<T> {
    let n = a.nrows();
    let norm = a.iter().map(|x| x.modulus()).sum::<f64>();
    let mut squarings = 0;
    let mut scale = 1.0;
    while norm * scale > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }
    let x = a.map(|v| v.scale(scale));
    let mut term = DMatrix::<T>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..=16 {
        term = (&term * &x).map(|v| v.unscale(k as f64));
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Real dimension of the Lie algebra of `U(k)` / `O(k)`.
pub fn skew_dim<T: Scalar>(k: usize) -> usize {
    match T::FIELD {
        Field::Real => k * k.saturating_sub(1) / 2,
        Field::Complex => k * k,
    }
}

/// Skew-Hermitian matrix from `skew_dim` real parameters.
pub fn skew_from_params<T: Scalar>(k: usize, params: &[f64]) -> DMatrix<T> {
    let mut m = DMatrix::<T>::zeros(k, k);
    let mut pos = 0;
    if T::FIELD == Field::Complex {
        for i in 0..k {
            m[(i, i)] = T::from_parts(0.0, params[pos]);
            pos += 1;
        }
    }
    for i in 0..k {
        for j in i + 1..k {
            let v = match T::FIELD {
                Field::Real => {
                    pos += 1;
                    T::from_parts(params[pos - 1], 0.0)
                }
                Field::Complex => {
                    pos += 2;
                    T::from_parts(params[pos - 2], params[pos - 1])
                }
            };
            m[(i, j)] = v;
            m[(j, i)] = -v.conjugate();
        }
    }
    m
}

/// `base · exp(K(params))`.
pub fn unitary_from_params<T: Scalar>(base: &DMatrix<T>, params: &[f64]) -> DMatrix<T> {
    let k = base.nrows();
    if k == 0 || params.iter().all(|&p| p == 0.0) {
        return base.clone();
    }
    base * expm(&skew_from_params::<T>(k, params))
}

fn rotation<T: Scalar>(phi: f64, flip: bool) -> DMatrix<T> {
    let (s, c) = phi.sin_cos();
    let f = if flip { -1.0 } else { 1.0 };
    DMatrix::from_row_slice(
        2,
        2,
        &[
            T::from_real(c),
            T::from_real(-s * f),
            T::from_real(s),
            T::from_real(c * f),
        ],
    )
}

fn round_up4(v: usize) -> usize {
    v.div_ceil(4).max(1) * 4
}

/// About `count` points covering `U(k)` (`O(k)` over the reals): exact for
/// `O(1)`, regular grids on `O(2)` and `U(1)`, identity plus Haar samples otherwise.
pub fn group_grid<T: Scalar, R: Rng + ?Sized>(k: usize, count: usize, rng: &mut R) -> Vec<DMatrix<T>> {
    if k == 0 {
        return vec![DMatrix::zeros(0, 0)];
    }
    match (T::FIELD, k) {
        (Field::Real, 1) => vec![
            DMatrix::from_element(1, 1, T::one()),
            DMatrix::from_element(1, 1, -T::one()),
        ],
        (Field::Real, 2) => {
            let m = round_up4(count / 2);
            let mut out = Vec::with_capacity(2 * m);
            for flip in [false, true] {
                for j in 0..m {
                    out.push(rotation(PI * j as f64 / m as f64, flip));
                }
            }
            out
        }
        (Field::Complex, 1) => {
            let m = round_up4(count);
            (0..m)
                .map(|j| {
                    let phi = 2.0 * PI * j as f64 / m as f64;
                    DMatrix::from_element(1, 1, T::from_parts(phi.cos(), phi.sin()))
                })
                .collect()
        }
        _ => {
            let mut out = vec![DMatrix::identity(k, k)];
            while out.len() < count.max(1) {
                out.push(haar_unitary(k, rng));
            }
            out
        }
    }
}

/// `blkdiag(I_{n-k}, t)`.
pub fn embed_trailing<T: Scalar>(n: usize, t: &DMatrix<T>) -> DMatrix<T> {
    let k = t.nrows();
    let mut m = DMatrix::identity(n, n);
    m.view_mut((n - k, n - k), (k, k)).copy_from(t);
    m
}
