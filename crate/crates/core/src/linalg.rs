use crate::error::{Error, Result};
use crate::scalar::{Field, Scalar};
use faer::{c64, Mat, MatRef, Side as FaerSide};
use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use std::cmp::Ordering;

/// Entrywise tolerance for the Hermitian check, relative to `1 + max|a_ij|`.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Orthonormality tolerance for user supplied frames.
pub const FRAME_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Eigenvalues above `rank * lambda_max` count towards the rank.
    pub rank: f64,
    /// Smallest admissible eigenvalue is `-psd * (1 + lambda_max)`.
    pub psd: f64,
    /// Cosines at or below this value are right principal angles.
    pub stratum: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rank: 1e-10,
            psd: 1e-8,
            stratum: 1e-10,
        }
    }
}

pub fn max_abs<T: Scalar>(m: &DMatrix<T>) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.modulus()))
}

/// Largest entry of `|m - m*|`.
pub fn asymmetry<T: Scalar>(m: &DMatrix<T>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conjugate()).modulus());
        }
    }
    worst
}

pub fn hermitian_part<T: Scalar>(m: &DMatrix<T>) -> DMatrix<T> {
    let n = m.nrows();
    DMatrix::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conjugate()).unscale(2.0))
}

fn check_square<T: Scalar>(m: &DMatrix<T>, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!(
            "{what} is {}x{}, expected square",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Hermitian eigendecomposition with eigenvalues in descending order.
#[derive(Clone, Debug)]
pub struct Eigh<T: Scalar> {
    pub values: Vec<f64>,
    pub vectors: DMatrix<T>,
}

impl<T: Scalar> Eigh<T> {
    /// `V f(Λ) V*`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> DMatrix<T> {
        let mut scaled = self.vectors.clone();
        for (j, &v) in self.values.iter().enumerate() {
            let s = f(v);
            for x in scaled.column_mut(j).iter_mut() {
                *x = x.scale(s);
            }
        }
        hermitian_part(&(scaled * self.vectors.adjoint()))
    }
}

pub fn eigh<T: Scalar>(m: &DMatrix<T>) -> Result<Eigh<T>> {
    check_square(m, "matrix")?;
    let n = m.nrows();
    if n == 0 {
        return Ok(Eigh {
            values: Vec::new(),
            vectors: DMatrix::zeros(0, 0),
        });
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    let h = hermitian_part(m);
    let (raw_values, raw_vectors) = match small_eigh(&h) {
        Some(e) => e,
        None => faer_eigh(&h)?,
    };
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| raw_values[b].partial_cmp(&raw_values[a]).unwrap_or(Ordering::Equal));
    let values = idx.iter().map(|&i| raw_values[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| raw_vectors[(r, idx[c])]);
    Ok(Eigh { values, vectors })
}

/// `M^p` for Hermitian PSD `M`; negative powers require positive definiteness.
pub fn psd_power<T: Scalar>(m: &DMatrix<T>, p: f64) -> Result<DMatrix<T>> {
    let e = eigh(m)?;
    if p < 0.0 && e.values.last().is_some_and(|&v| v <= 0.0) {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(e.apply(|x| x.max(0.0).powf(p)))
}

/// Lower Cholesky factor of a positive definite matrix.
pub fn cholesky_lower<T: Scalar>(m: &DMatrix<T>) -> Result<DMatrix<T>> {
    check_square(m, "matrix")?;
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    Cholesky::new(hermitian_part(m))
        .map(|c| c.unpack())
        .ok_or(Error::NotPositiveDefinite)
}

/// Eigenvalues (descending) and `X`-orthonormal eigenvectors of `X^{-1} Y`.
pub fn pencil_eigh<T: Scalar>(x: &DMatrix<T>, y: &DMatrix<T>) -> Result<Eigh<T>> {
    check_square(y, "pencil right matrix")?;
    if x.shape() != y.shape() {
        return Err(Error::Dimension(format!(
            "pencil of {}x{} and {}x{}",
            x.nrows(),
            x.ncols(),
            y.nrows(),
            y.ncols()
        )));
    }
    let l = cholesky_lower(x)?;
    let fail = || Error::Numerical("triangular solve failed".into());
    let a = l.solve_lower_triangular(y).ok_or_else(fail)?;
    let m = l.solve_lower_triangular(&a.adjoint()).ok_or_else(fail)?;
    let e = eigh(&m)?;
    let w = l.adjoint().solve_upper_triangular(&e.vectors).ok_or_else(fail)?;
    Ok(Eigh {
        values: e.values,
        vectors: w,
    })
}

/// Eigenvalues of `X^{-1} Y` for `X` positive definite, descending.
pub fn pencil_eigenvalues<T: Scalar>(x: &DMatrix<T>, y: &DMatrix<T>) -> Result<Vec<f64>> {
    check_square(y, "pencil right matrix")?;
    if x.shape() != y.shape() {
        return Err(Error::Dimension(format!(
            "pencil of {}x{} and {}x{}",
            x.nrows(),
            x.ncols(),
            y.nrows(),
            y.ncols()
        )));
    }
    let l = cholesky_lower(x)?;
    let fail = || Error::Numerical("triangular solve failed".into());
    let a = l.solve_lower_triangular(y).ok_or_else(fail)?;
    let m = l.solve_lower_triangular(&a.adjoint()).ok_or_else(fail)?;
    Ok(eigh(&m)?.values)
}

/// Extends an orthonormal `n x k` frame to a unitary `n x n` matrix.
pub fn complete_basis<T: Scalar>(m: &DMatrix<T>) -> DMatrix<T> {
    let (n, k) = m.shape();
    let mut cols: Vec<DVector<T>> = m.column_iter().map(|c| c.into_owned()).collect();
    let mut used = vec![false; n];
    while cols.len() < n {
        let mut best: Option<(usize, DVector<T>, f64)> = None;
        for j in (0..n).filter(|&j| !used[j]) {
            let mut v = DVector::zeros(n);
            v[j] = T::one();
            for _ in 0..2 {
                for c in &cols {
                    let coef = c.dotc(&v);
                    v.axpy(-coef, c, T::one());
                }
            }
            let nv = v.norm();
            if best.as_ref().is_none_or(|b| nv > b.2) {
                best = Some((j, v, nv));
            }
        }
        let (j, v, nv) = best.expect("basis completion candidate");
        used[j] = true;
        cols.push(v.unscale(nv));
    }
    if k == n {
        return m.clone();
    }
    DMatrix::from_columns(&cols)
}

/// Full SVD `W = P diag(σ) Q*` with unitary `P`, `Q` and `σ` descending.
pub fn full_svd<T: Scalar>(w: &DMatrix<T>) -> Result<(DMatrix<T>, Vec<f64>, DMatrix<T>)> {
    let (r, s) = w.shape();
    let k = r.min(s);
    if k == 0 {
        return Ok((DMatrix::identity(r, r), Vec::new(), DMatrix::identity(s, s)));
    }
    if w.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    let (u, sv, v) = faer_svd(w)?;
    let mut idx: Vec<usize> = (0..k).collect();
    idx.sort_by(|&a, &b| sv[b].partial_cmp(&sv[a]).unwrap_or(Ordering::Equal));
    let mut pu = u.clone();
    let mut pv = v.clone();
    for (c, &i) in idx.iter().enumerate() {
        pu.set_column(c, &u.column(i));
        pv.set_column(c, &v.column(i));
    }
    let sigma = idx.iter().map(|&i| sv[i]).collect();
    Ok((pu, sigma, pv))
}

fn to_faer<T: Scalar, F: faer::traits::ComplexField>(m: &DMatrix<T>, conv: impl Fn(T) -> F) -> Mat<F> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| conv(m[(i, j)]))
}

fn from_faer<T: Scalar, F: Copy>(m: MatRef<'_, F>, conv: impl Fn(F) -> T) -> DMatrix<T> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| conv(m[(i, j)]))
}

const SMALL_EIGH: usize = 8;

/// Cheap path for tiny inputs, accepted only if the factorization checks out.
fn small_eigh<T: Scalar>(h: &DMatrix<T>) -> Option<(Vec<f64>, DMatrix<T>)> {
    let n = h.nrows();
    if n > SMALL_EIGH {
        return None;
    }
    let e = SymmetricEigen::try_new(h.clone(), f64::EPSILON, 0)?;
    let scale = h.iter().fold(0.0f64, |acc, x| acc.max(x.modulus()));
    let tol = 64.0 * f64::EPSILON * n as f64;
    let v = &e.eigenvectors;
    let mut resid = h * v;
    for (j, &l) in e.eigenvalues.iter().enumerate() {
        resid.column_mut(j).axpy(T::from_parts(-l, 0.0), &v.column(j), T::one());
    }
    if resid.iter().any(|x| !(x.modulus() <= tol * scale)) {
        return None;
    }
    let gram = v.adjoint() * v - DMatrix::<T>::identity(n, n);
    if gram.iter().any(|x| !(x.modulus() <= tol)) {
        return None;
    }
    Some((e.eigenvalues.iter().copied().collect(), e.eigenvectors))
}

/// Hermitian eigendecomposition (unordered values, unitary vectors).
fn faer_eigh<T: Scalar>(m: &DMatrix<T>) -> Result<(Vec<f64>, DMatrix<T>)> {
    let fail = |_| Error::Numerical("eigendecomposition did not converge".into());
    match T::FIELD {
        Field::Real => {
            let e = to_faer(m, |x: T| x.re())
                .self_adjoint_eigen(FaerSide::Lower)
                .map_err(fail)?;
            let s = e.S().column_vector();
            let values = (0..m.nrows()).map(|i| s[i]).collect();
            Ok((values, from_faer(e.U(), |x: f64| T::from_parts(x, 0.0))))
        }
        Field::Complex => {
            let e = to_faer(m, |x: T| c64::new(x.re(), x.im()))
                .self_adjoint_eigen(FaerSide::Lower)
                .map_err(fail)?;
            let s = e.S().column_vector();
            let values = (0..m.nrows()).map(|i| s[i].re).collect();
            Ok((values, from_faer(e.U(), |x: c64| T::from_parts(x.re, x.im))))
        }
    }
}

/// Full SVD `W = U diag(σ) V*` (unordered σ, unitary `U`, `V`).
fn faer_svd<T: Scalar>(w: &DMatrix<T>) -> Result<(DMatrix<T>, Vec<f64>, DMatrix<T>)> {
    let fail = |_| Error::Numerical("SVD did not converge".into());
    let k = w.nrows().min(w.ncols());
    match T::FIELD {
        Field::Real => {
            let d = to_faer(w, |x: T| x.re()).svd().map_err(fail)?;
            let s = d.S().column_vector();
            let sv = (0..k).map(|i| s[i]).collect();
            let conv = |x: f64| T::from_parts(x, 0.0);
            Ok((from_faer(d.U(), conv), sv, from_faer(d.V(), conv)))
        }
        Field::Complex => {
            let d = to_faer(w, |x: T| c64::new(x.re(), x.im())).svd().map_err(fail)?;
            let s = d.S().column_vector();
            let sv = (0..k).map(|i| s[i].re).collect();
            let conv = |x: c64| T::from_parts(x.re, x.im);
            Ok((from_faer(d.U(), conv), sv, from_faer(d.V(), conv)))
        }
    }
}

/// Orthonormal frame of a linear subspace.
#[derive(Clone, Debug)]
pub struct Subspace<T: Scalar> {
    frame: DMatrix<T>,
}

impl<T: Scalar> Subspace<T> {
    pub fn from_frame(frame: DMatrix<T>) -> Result<Self> {
        if frame.ncols() > frame.nrows() {
            return Err(Error::Dimension(format!(
                "frame is {}x{}",
                frame.nrows(),
                frame.ncols()
            )));
        }
        if frame.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        let gram = frame.adjoint() * &frame;
        let k = gram.nrows();
        let resid = max_abs(&(gram - DMatrix::<T>::identity(k, k)));
        if resid > FRAME_TOL {
            return Err(Error::NotOrthonormal(resid));
        }
        Ok(Subspace { frame })
    }

    pub(crate) fn from_frame_unchecked(frame: DMatrix<T>) -> Self {
        Subspace { frame }
    }

    pub fn frame(&self) -> &DMatrix<T> {
        &self.frame
    }

    pub fn ambient(&self) -> usize {
        self.frame.nrows()
    }

    pub fn dim(&self) -> usize {
        self.frame.ncols()
    }

    pub fn projector(&self) -> DMatrix<T> {
        &self.frame * self.frame.adjoint()
    }

    /// Same subspace in `C^n`, `n >= ambient`, via zero rows.
    pub fn padded(&self, n: usize) -> Result<Self> {
        Ok(Subspace {
            frame: pad_rows(&self.frame, n)?,
        })
    }
}

pub(crate) fn pad_rows<T: Scalar>(m: &DMatrix<T>, n: usize) -> Result<DMatrix<T>> {
    if n < m.nrows() {
        return Err(Error::Dimension(format!("cannot pad {} rows to {n}", m.nrows())));
    }
    let mut out = DMatrix::zeros(n, m.ncols());
    out.view_mut((0, 0), m.shape()).copy_from(m);
    Ok(out)
}

/// Validated Hermitian positive semidefinite matrix with its spectrum.
#[derive(Clone, Debug)]
pub struct PsdMatrix<T: Scalar> {
    entries: DMatrix<T>,
    eig: Eigh<T>,
}

impl<T: Scalar> PsdMatrix<T> {
    pub fn new(m: DMatrix<T>) -> Result<Self> {
        Self::with_tolerances(m, &Tolerances::default())
    }

    pub fn with_tolerances(m: DMatrix<T>, tol: &Tolerances) -> Result<Self> {
        check_square(&m, "matrix")?;
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        let asym = asymmetry(&m);
        if asym > HERMITIAN_TOL * (1.0 + max_abs(&m)) {
            return Err(Error::NotHermitian(asym));
        }
        let eig = eigh(&m)?;
        let lmax = eig.values.first().copied().unwrap_or(0.0).max(0.0);
        let lmin = eig.values.last().copied().unwrap_or(0.0);
        if lmin < -tol.psd * (1.0 + lmax) {
            return Err(Error::NotPsd(lmin));
        }
        Ok(PsdMatrix { entries: m, eig })
    }

    pub fn entries(&self) -> &DMatrix<T> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<T> {
        self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn field(&self) -> Field {
        T::FIELD
    }

    pub fn eigen(&self) -> &Eigh<T> {
        &self.eig
    }

    pub fn rank(&self, tol_rank: f64) -> usize {
        let lmax = self.eig.values.first().copied().unwrap_or(0.0);
        if lmax <= 0.0 {
            return 0;
        }
        self.eig.values.iter().take_while(|&&v| v > tol_rank * lmax).count()
    }

    /// Eigenvector frame of the range and the positive eigenvalues.
    pub fn compact(&self, tol_rank: f64) -> (DMatrix<T>, Vec<f64>) {
        let r = self.rank(tol_rank);
        (
            self.eig.vectors.columns(0, r).into_owned(),
            self.eig.values[..r].to_vec(),
        )
    }

    pub fn range(&self, tol_rank: f64) -> Subspace<T> {
        Subspace::from_frame_unchecked(self.compact(tol_rank).0)
    }
}

pub fn range_subspace<T: Scalar>(a: &PsdMatrix<T>, tol_rank: f64) -> Subspace<T> {
    a.range(tol_rank)
}

/// `blkdiag(A, 0)` in dimension `n`.
pub fn embed_pad<T: Scalar>(a: &PsdMatrix<T>, n: usize) -> Result<PsdMatrix<T>> {
    let m = a.dim();
    if n < m {
        return Err(Error::Dimension(format!("cannot embed {m} into {n}")));
    }
    let mut entries = DMatrix::zeros(n, n);
    entries.view_mut((0, 0), (m, m)).copy_from(&a.entries);
    let mut values = a.eig.values.clone();
    values.extend(std::iter::repeat_n(0.0, n - m));
    let mut vectors = DMatrix::zeros(n, n);
    vectors.view_mut((0, 0), (m, m)).copy_from(&a.eig.vectors);
    for j in m..n {
        vectors[(j, j)] = T::one();
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&x, &y| values[y].partial_cmp(&values[x]).unwrap_or(Ordering::Equal));
    let eig = Eigh {
        values: idx.iter().map(|&i| values[i]).collect(),
        vectors: DMatrix::from_fn(n, n, |r, c| vectors[(r, idx[c])]),
    };
    Ok(PsdMatrix { entries, eig })
}

/// Principal angles and aligned principal vectors of two subspaces.
#[derive(Clone, Debug)]
pub struct PrincipalSystem<T: Scalar> {
    /// Cosines, descending, `min(r, s)` entries.
    pub sigma: Vec<f64>,
    /// Sines of the same angles.
    pub sines: Vec<f64>,
    /// Angles, ascending.
    pub theta: Vec<f64>,
    /// `r x r` unitary with `U* V = P Σ Q*`.
    pub p: DMatrix<T>,
    /// `s x s` unitary.
    pub q: DMatrix<T>,
    /// `U P`.
    pub left_frame: DMatrix<T>,
    /// `V Q`.
    pub right_frame: DMatrix<T>,
}

pub fn principal_system<T: Scalar>(u: &Subspace<T>, v: &Subspace<T>) -> Result<PrincipalSystem<T>> {
    principal_frames(u.frame(), v.frame())
}

pub(crate) fn principal_frames<T: Scalar>(u: &DMatrix<T>, v: &DMatrix<T>) -> Result<PrincipalSystem<T>> {
    if u.nrows() != v.nrows() {
        return Err(Error::Dimension(format!(
            "subspaces live in dimensions {} and {}",
            u.nrows(),
            v.nrows()
        )));
    }
    let w = u.adjoint() * v;
    let (p, mut sigma, q) = full_svd(&w)?;
    for s in sigma.iter_mut() {
        *s = s.clamp(0.0, 1.0);
    }
    let left_frame = u * &p;
    let right_frame = v * &q;
    let sines: Vec<f64> = sigma
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let a = left_frame.column(i);
            let b = right_frame.column(i);
            (b - a * T::from_real(c)).norm().min(1.0)
        })
        .collect();
    let theta = sigma.iter().zip(&sines).map(|(&c, &s)| s.atan2(c)).collect();
    Ok(PrincipalSystem {
        sigma,
        sines,
        theta,
        p,
        q,
        left_frame,
        right_frame,
    })
}

/// Number of principal cosines at or below `tol` (cosines live on a unit scale).
pub fn stratum_index<T: Scalar>(ps: &PrincipalSystem<T>, tol: f64) -> usize {
    let top = ps.sigma.first().copied().unwrap_or(0.0).max(1.0);
    ps.sigma.iter().filter(|&&s| s <= tol * top).count()
}

/// Matrix of `A` restricted to its range, written in the given orthonormal basis.
pub fn fiber_representation<T: Scalar>(a: &PsdMatrix<T>, basis: &DMatrix<T>, tol: f64) -> Result<DMatrix<T>> {
    if basis.nrows() != a.dim() {
        return Err(Error::Dimension(format!(
            "basis has {} rows for a {}x{} matrix",
            basis.nrows(),
            a.dim(),
            a.dim()
        )));
    }
    let rep = hermitian_part(&(basis.adjoint() * a.entries() * basis));
    let back = basis * &rep * basis.adjoint();
    let resid = max_abs(&(back - a.entries()));
    if resid > tol * (1.0 + max_abs(a.entries())) {
        return Err(Error::BasisMismatch(resid));
    }
    Ok(rep)
}
