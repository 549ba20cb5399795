//! Curves on the bundle of fixed-rank PSD matrices over the Grassmannian:
//! horizontal lifts of subspace geodesics, parallel transport, quasi-geodesics.

use crate::error::{Error, Result};
use crate::linalg::{
    eigh, fiber_representation, hermitian_part, pencil_eigenvalues, principal_system, psd_power, PrincipalSystem,
    PsdMatrix, Subspace, Tolerances,
};
use crate::scalar::Scalar;
use nalgebra::DMatrix;
use std::f64::consts::FRAC_PI_2;

/// Angles within this distance of a right angle make the geodesic non-unique.
pub const RIGHT_ANGLE_MARGIN: f64 = 1e-8;

/// Default number of uniform samples on `[0, 1]`.
pub const DEFAULT_SAMPLES: usize = 11;

/// Uniform parameters `0, 1/(count-1), ..., 1`.
pub fn uniform_times(count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..count).map(|k| k as f64 / (count - 1) as f64).collect(),
    }
}

/// Geodesic between two equal-dimensional subspaces, with its horizontal lift
/// `c(t)` to orthonormal frames.
#[derive(Clone, Debug)]
pub struct SubspaceGeodesic<T: Scalar> {
    pub start: Subspace<T>,
    pub end: Subspace<T>,
    pub principal: PrincipalSystem<T>,
    a: DMatrix<T>,
    w: DMatrix<T>,
    theta: Vec<f64>,
}

impl<T: Scalar> SubspaceGeodesic<T> {
    /// Fails with [`Error::RightAngle`] on a right principal angle unless
    /// `allow_completion`, in which case the computed principal vectors fix one
    /// of the many geodesics.
    pub fn new(start: Subspace<T>, end: Subspace<T>, allow_completion: bool) -> Result<Self> {
        if start.ambient() != end.ambient() {
            return Err(Error::Dimension(format!(
                "subspaces live in dimensions {} and {}",
                start.ambient(),
                end.ambient()
            )));
        }
        if start.dim() != end.dim() {
            return Err(Error::Dimension(format!(
                "subspace dimensions {} and {} differ",
                start.dim(),
                end.dim()
            )));
        }
        let principal = principal_system(&start, &end)?;
        let r = start.dim();
        let n = start.ambient();
        if !allow_completion && principal.theta.iter().any(|&t| t >= FRAC_PI_2 - RIGHT_ANGLE_MARGIN) {
            return Err(Error::RightAngle);
        }
        let a = principal.left_frame.columns(0, r).into_owned();
        let b = principal.right_frame.columns(0, r).into_owned();
        let mut w = DMatrix::<T>::zeros(n, r);
        let mut theta = vec![0.0; r];
        for i in 0..r {
            let s = principal.sines[i];
            if s > 1e-15 {
                let col = (b.column(i) - a.column(i) * T::from_real(principal.sigma[i])).unscale(s);
                w.set_column(i, &col);
                theta[i] = principal.theta[i];
            }
        }
        Ok(SubspaceGeodesic {
            start,
            end,
            principal,
            a,
            w,
            theta,
        })
    }

    pub fn ambient(&self) -> usize {
        self.a.nrows()
    }

    pub fn dim(&self) -> usize {
        self.a.ncols()
    }

    /// Principal angles used by the lift, ascending.
    pub fn angles(&self) -> &[f64] {
        &self.theta
    }

    /// Arc length, the geodesic Grassmann distance of the endpoints.
    pub fn length(&self) -> f64 {
        self.theta.iter().map(|t| t * t).sum::<f64>().sqrt()
    }

    /// Lifted frame `c(t)`; columns `a_i cos(θ_i t) + w_i sin(θ_i t)`.
    pub fn frame_at(&self, t: f64) -> DMatrix<T> {
        let mut c = self.a.clone();
        for i in 0..self.dim() {
            let (s, co) = (self.theta[i] * t).sin_cos();
            let col = self.a.column(i) * T::from_real(co) + self.w.column(i) * T::from_real(s);
            c.set_column(i, &col);
        }
        c
    }

    /// Derivative `dc/dt`.
    pub fn velocity_at(&self, t: f64) -> DMatrix<T> {
        let mut c = DMatrix::<T>::zeros(self.ambient(), self.dim());
        for i in 0..self.dim() {
            let th = self.theta[i];
            let (s, co) = (th * t).sin_cos();
            let col = self.w.column(i) * T::from_real(th * co) - self.a.column(i) * T::from_real(th * s);
            c.set_column(i, &col);
        }
        c
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CurveKind {
    ParallelTransport,
    QuasiGeodesic,
}

/// Curve of PSD matrices of constant rank over a subspace geodesic.
#[derive(Clone, Debug)]
pub struct PsdCurve<T: Scalar> {
    pub kind: CurveKind,
    pub geodesic: SubspaceGeodesic<T>,
    start: PsdMatrix<T>,
    /// Fiber matrix at `t = 0`.
    fiber_start: DMatrix<T>,
    /// `(C^{1/2}, eigen of C^{-1/2} D' C^{-1/2})` for the fiber geodesic.
    fiber_path: Option<(DMatrix<T>, crate::linalg::Eigh<T>)>,
}

impl<T: Scalar> PsdCurve<T> {
    /// Fiber matrix in the lifted frame at time `t`.
    pub fn fiber_at(&self, t: f64) -> DMatrix<T> {
        match &self.fiber_path {
            None => self.fiber_start.clone(),
            Some((half, e)) => hermitian_part(&(half * e.apply(|x| x.max(0.0).powf(t)) * half)),
        }
    }

    /// Entries of the curve at time `t`.
    pub fn entries_at(&self, t: f64) -> DMatrix<T> {
        if t == 0.0 {
            return self.start.entries().clone();
        }
        let c = self.geodesic.frame_at(t);
        hermitian_part(&(&c * self.fiber_at(t) * c.adjoint()))
    }

    pub fn at(&self, t: f64) -> Result<PsdMatrix<T>> {
        if t == 0.0 {
            return Ok(self.start.clone());
        }
        PsdMatrix::new(self.entries_at(t))
    }

    pub fn sample(&self, count: usize) -> Result<Vec<PsdMatrix<T>>> {
        uniform_times(count).into_iter().map(|t| self.at(t)).collect()
    }
}

/// Parallel transport of `a` along `geo`; the range of `a` must be `geo.start`.
pub fn transport_curve<T: Scalar>(
    a: &PsdMatrix<T>,
    geo: &SubspaceGeodesic<T>,
    tol: &Tolerances,
) -> Result<PsdCurve<T>> {
    if a.dim() != geo.ambient() {
        return Err(Error::Dimension(format!(
            "matrix is {}x{} but the geodesic lives in dimension {}",
            a.dim(),
            a.dim(),
            geo.ambient()
        )));
    }
    let rank = a.rank(tol.rank);
    if rank != geo.dim() {
        return Err(Error::Dimension(format!(
            "matrix has rank {rank} but the geodesic moves {}-dimensional subspaces",
            geo.dim()
        )));
    }
    let fiber_start = fiber_representation(a, &geo.frame_at(0.0), tol.psd)?;
    Ok(PsdCurve {
        kind: CurveKind::ParallelTransport,
        geodesic: geo.clone(),
        start: a.clone(),
        fiber_start,
        fiber_path: None,
    })
}

/// `c(t) M c(t)*`, with `M` the fiber of `a` in the basis `c(0)`.
pub fn parallel_transport<T: Scalar>(a: &PsdMatrix<T>, geo: &SubspaceGeodesic<T>, t: f64) -> Result<PsdMatrix<T>> {
    transport_curve(a, geo, &Tolerances::default())?.at(t)
}

/// Orthogonal projection of a tangent matrix onto the vertical space at a
/// point whose range has orthonormal frame `frame`.
pub fn vertical_part<T: Scalar>(frame: &DMatrix<T>, tangent: &DMatrix<T>) -> DMatrix<T> {
    let p = frame * frame.adjoint();
    &p * tangent * &p
}

fn checked_pair<T: Scalar>(a: &PsdMatrix<T>, b: &PsdMatrix<T>, tol: &Tolerances) -> Result<SubspaceGeodesic<T>> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension(format!(
            "ambient dimensions {} and {} differ",
            a.dim(),
            b.dim()
        )));
    }
    let (ra, rb) = (a.rank(tol.rank), b.rank(tol.rank));
    if ra != rb {
        return Err(Error::Dimension(format!("ranks {ra} and {rb} differ")));
    }
    if ra == 0 {
        return Err(Error::ZeroRank);
    }
    SubspaceGeodesic::new(a.range(tol.rank), b.range(tol.rank), false)
}

/// Quasi-geodesic from `a` to `b`: the horizontal lift of the range geodesic
/// carrying the affine-invariant geodesic between the endpoint fibers.
pub fn quasi_geodesic_curve<T: Scalar>(a: &PsdMatrix<T>, b: &PsdMatrix<T>, tol: &Tolerances) -> Result<PsdCurve<T>> {
    let geo = checked_pair(a, b, tol)?;
    let c = fiber_representation(a, &geo.frame_at(0.0), tol.psd)?;
    let d = fiber_representation(b, &geo.frame_at(1.0), tol.psd)?;
    let half = psd_power(&c, 0.5)?;
    let inv_half = psd_power(&c, -0.5)?;
    let inner = eigh(&hermitian_part(&(&inv_half * d * &inv_half)))?;
    Ok(PsdCurve {
        kind: CurveKind::QuasiGeodesic,
        geodesic: geo,
        start: a.clone(),
        fiber_start: c,
        fiber_path: Some((half, inner)),
    })
}

pub fn quasi_geodesic<T: Scalar>(a: &PsdMatrix<T>, b: &PsdMatrix<T>, t: f64) -> Result<PsdMatrix<T>> {
    quasi_geodesic_curve(a, b, &Tolerances::default())?.at(t)
}

/// `sqrt(d² + k δ²)` with `d` the geodesic Grassmann distance of the ranges and
/// `δ` the affine-invariant distance of the endpoint fibers.
pub fn quasi_geodesic_length<T: Scalar>(a: &PsdMatrix<T>, b: &PsdMatrix<T>, k: f64, tol: &Tolerances) -> Result<f64> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::Domain(format!("length weight k = {k} must be positive")));
    }
    let geo = checked_pair(a, b, tol)?;
    let c = fiber_representation(a, &geo.frame_at(0.0), tol.psd)?;
    let d = fiber_representation(b, &geo.frame_at(1.0), tol.psd)?;
    let delta2: f64 = pencil_eigenvalues(&c, &d)?.iter().map(|l| l.ln().powi(2)).sum();
    let d2 = geo.length().powi(2);
    Ok((d2 + k * delta2).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodistance::{gd, GdOptions, MetricSpec};
    use crate::linalg::max_abs;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_frame<T: Scalar>(n: usize, r: usize, rng: &mut ChaCha8Rng) -> DMatrix<T> {
        let g = DMatrix::<T>::from_fn(n, r, |_, _| T::normal(rng));
        g.qr().q()
    }

    fn random_psd<T: Scalar>(frame: &DMatrix<T>, rng: &mut ChaCha8Rng) -> PsdMatrix<T> {
        let r = frame.ncols();
        let g = DMatrix::<T>::from_fn(r, r, |_, _| T::normal(rng));
        let m = &g * g.adjoint() + DMatrix::identity(r, r).scale(0.3);
        PsdMatrix::new(hermitian_part(&(frame * m * frame.adjoint()))).unwrap()
    }

    #[test]
    fn planar_rotation_moves_at_constant_rate() {
        let th: f64 = 0.7;
        let u = Subspace::from_frame(DMatrix::from_column_slice(2, 1, &[1.0, 0.0])).unwrap();
        let v = Subspace::from_frame(DMatrix::from_column_slice(2, 1, &[th.cos(), th.sin()])).unwrap();
        let geo = SubspaceGeodesic::new(u, v, false).unwrap();
        assert!((geo.length() - th).abs() < 1e-14);
        for t in uniform_times(DEFAULT_SAMPLES) {
            let c = geo.frame_at(t);
            let ang = c[(1, 0)].atan2(c[(0, 0)]);
            assert!((ang - th * t).abs() < 1e-14);
        }
    }

    #[test]
    fn lift_is_orthonormal_horizontal_and_equiangular() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let u = Subspace::from_frame(random_frame::<Complex64>(7, 3, &mut rng)).unwrap();
            let v = Subspace::from_frame(random_frame::<Complex64>(7, 3, &mut rng)).unwrap();
            let geo = SubspaceGeodesic::new(u.clone(), v.clone(), false).unwrap();
            for t in uniform_times(DEFAULT_SAMPLES) {
                let c = geo.frame_at(t);
                let gram = c.adjoint() * &c - DMatrix::identity(3, 3);
                assert!(max_abs(&gram) < 1e-9);
                let h = 1e-5;
                let dc = (geo.frame_at(t + h) - geo.frame_at(t - h)).unscale(2.0 * h);
                assert!(max_abs(&(c.adjoint() * dc)) < 1e-6);
                let ps = principal_system(&u, &Subspace::from_frame(c).unwrap()).unwrap();
                for (x, y) in ps.theta.iter().zip(geo.angles()) {
                    assert!((x - t * y).abs() < 1e-6);
                }
            }
            let end = Subspace::from_frame(geo.frame_at(1.0)).unwrap();
            assert!(max_abs(&(end.projector() - v.projector())) < 1e-8);
        }
    }

    #[test]
    fn right_angle_needs_completion() {
        let u = Subspace::<f64>::from_frame(DMatrix::from_column_slice(2, 1, &[1.0, 0.0])).unwrap();
        let v = Subspace::from_frame(DMatrix::from_column_slice(2, 1, &[0.0, 1.0])).unwrap();
        assert!(matches!(
            SubspaceGeodesic::new(u.clone(), v.clone(), false),
            Err(Error::RightAngle)
        ));
        let geo = SubspaceGeodesic::new(u, v, true).unwrap();
        assert!((geo.length() - FRAC_PI_2).abs() < 1e-14);
    }

    #[test]
    fn transport_starts_at_input_and_keeps_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let fa = random_frame::<f64>(6, 2, &mut rng);
        let a = random_psd(&fa, &mut rng);
        let v = Subspace::from_frame(random_frame::<f64>(6, 2, &mut rng)).unwrap();
        let geo = SubspaceGeodesic::new(a.range(1e-10), v, false).unwrap();
        assert_eq!(parallel_transport(&a, &geo, 0.0).unwrap().entries(), a.entries());
        let spec0 = a.eigen().values[..2].to_vec();
        for t in uniform_times(DEFAULT_SAMPLES) {
            let p = parallel_transport(&a, &geo, t).unwrap();
            assert_eq!(p.rank(1e-10), 2);
            for (x, y) in p.eigen().values[..2].iter().zip(&spec0) {
                assert!((x - y).abs() < 1e-10);
            }
        }
        let same = SubspaceGeodesic::new(a.range(1e-10), a.range(1e-10), false).unwrap();
        let p = parallel_transport(&a, &same, 0.6).unwrap();
        assert!(max_abs(&(p.entries() - a.entries())) < 1e-12);
    }

    #[test]
    fn quasi_geodesic_endpoints_and_length() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let a = random_psd(&random_frame::<f64>(5, 2, &mut rng), &mut rng);
        let b = random_psd(&random_frame::<f64>(5, 2, &mut rng), &mut rng);
        let tol = Tolerances::default();
        let curve = quasi_geodesic_curve(&a, &b, &tol).unwrap();
        assert!(max_abs(&(curve.entries_at(0.0) - a.entries())) < 1e-9);
        assert!(max_abs(&(curve.entries_at(1.0) - b.entries())) < 1e-9);
        let l1 = quasi_geodesic_length(&a, &b, 1.0, &tol).unwrap();
        let l2 = quasi_geodesic_length(&a, &b, 2.0, &tol).unwrap();
        let d = curve.geodesic.length();
        let fib = l1 * l1 - d * d;
        assert!((l2 * l2 - (d * d + 2.0 * fib)).abs() < 1e-10);
        let g = gd(&a, &b, &MetricSpec::geodesic(), &GdOptions::default()).unwrap();
        assert!((g.total - l1).abs() < 1e-8);
        assert!(quasi_geodesic_length(&a, &a, 1.0, &tol).unwrap() < 1e-7);
        assert!(quasi_geodesic_length(&a, &b, 0.0, &tol).is_err());
    }
}
