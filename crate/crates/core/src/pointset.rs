//! Divergences between positive definite matrices of different sizes,
//! obtained by optimizing over ellipsoid-containment sets
//! `Ω₋(D) = {X ⪰ D₁₁}` and `Ω₊(C) = {Y : Y₁₁ ⪯ C}`.

use crate::divergence::{divergence, geodesic_ab_is_distance_check, DivergenceKind, FiberDivergence};
use crate::error::{Error, Result};
use crate::linalg::{cholesky_lower, eigh, hermitian_part, pencil_eigenvalues};
use crate::optim::{minimize, LocalOptions};
use crate::qp::solve_qp;
use crate::scalar::{Field, Scalar};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Minus,
    Plus,
}

#[derive(Clone, Debug)]
pub struct PointSetValue<T: Scalar> {
    pub value: f64,
    pub side: Side,
    /// `max{1, λ_k(C^{-1} D₁₁)}`, descending.
    pub clamped_spectrum: Vec<f64>,
    /// `D₋` for the minus side, `C₊` for the plus side.
    pub witness: DMatrix<T>,
}

fn dims<T: Scalar>(c: &DMatrix<T>, d: &DMatrix<T>) -> Result<(usize, usize)> {
    let (r, s) = (c.nrows(), d.nrows());
    if c.ncols() != r || d.ncols() != s {
        return Err(Error::Dimension("point-set inputs must be square".into()));
    }
    if r == 0 || r > s {
        return Err(Error::Dimension(format!("need 1 <= r <= s, got r = {r}, s = {s}")));
    }
    Ok((r, s))
}

pub(crate) fn upper_left<T: Scalar>(d: &DMatrix<T>, r: usize) -> DMatrix<T> {
    d.view((0, 0), (r, r)).into_owned()
}

/// Raw pencil spectrum `λ(C^{-1} D₁₁)` (descending) and its clamp `max{1, λ}`.
pub fn clamped_pencil<T: Scalar>(c: &DMatrix<T>, d: &DMatrix<T>) -> Result<(Vec<f64>, Vec<f64>)> {
    let (r, _) = dims(c, d)?;
    cholesky_lower(d)?;
    let raw = pencil_eigenvalues(c, &upper_left(d, r))?;
    if raw.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::NotPositiveDefinite);
    }
    let clamped = raw.iter().map(|&l| l.max(1.0)).collect();
    Ok((raw, clamped))
}

fn require_separable(spec: &FiberDivergence) -> Result<()> {
    if spec.is_separable() {
        Ok(())
    } else {
        Err(Error::InvalidSpec(
            "geodesic family with beta != 0: use alpha_beta_pointset".into(),
        ))
    }
}

/// `δ_r(C, Ω₋(D)) = min_{X ⪰ D₁₁} δ(C, X)`.
pub fn pointset_minus<T: Scalar>(spec: &FiberDivergence, c: &DMatrix<T>, d: &DMatrix<T>) -> Result<PointSetValue<T>> {
    require_separable(spec)?;
    let (_, clamped) = clamped_pencil(c, d)?;
    let value = spec.evaluate_spectrum(&clamped)?;
    Ok(PointSetValue {
        value,
        side: Side::Minus,
        witness: project_minus(c, d)?.d_minus,
        clamped_spectrum: clamped,
    })
}

/// `δ_s(Ω₊(C), D) = min_{Y₁₁ ⪯ C} δ(Y, D)`; equal to the minus side.
pub fn pointset_plus<T: Scalar>(spec: &FiberDivergence, c: &DMatrix<T>, d: &DMatrix<T>) -> Result<PointSetValue<T>> {
    require_separable(spec)?;
    let (r, s) = dims(c, d)?;
    let (_, clamped) = clamped_pencil(c, d)?;
    let mut full = clamped.clone();
    full.extend(std::iter::repeat_n(1.0, s - r));
    let value = spec.evaluate_spectrum(&full)?;
    Ok(PointSetValue {
        value,
        side: Side::Plus,
        witness: lift_plus(c, d)?.c_plus,
        clamped_spectrum: clamped,
    })
}

#[derive(Clone, Debug)]
pub struct ProjectionWitness<T: Scalar> {
    /// Closest point of `Ω₋(D)` to `C`.
    pub d_minus: DMatrix<T>,
    /// `max{1, λ}` for `λ = eig(C^{-1/2} D₁₁ C^{-1/2})`, descending.
    pub lambda: Vec<f64>,
    /// Unitary with `C^{-1/2} D₁₁ C^{-1/2} = Q* diag(λ) Q`.
    pub q: DMatrix<T>,
}

/// Projection `π₋(C, D) = C^{1/2} Q* max{1, Λ} Q C^{1/2}`.
pub fn project_minus<T: Scalar>(c: &DMatrix<T>, d: &DMatrix<T>) -> Result<ProjectionWitness<T>> {
    let (r, _) = dims(c, d)?;
    let d11 = upper_left(d, r);
    let ec = eigh(c)?;
    if ec.values.last().is_some_and(|&v| v <= 0.0) {
        return Err(Error::NotPositiveDefinite);
    }
    let c_half = ec.apply(f64::sqrt);
    let c_mhalf = ec.apply(|v| 1.0 / v.sqrt());
    let em = eigh(&hermitian_part(&(&c_mhalf * &d11 * &c_mhalf)))?;
    let lambda: Vec<f64> = em.values.iter().map(|&v| v.max(1.0)).collect();
    let d_minus = if em.values.iter().all(|&v| v >= 1.0) {
        d11
    } else {
        hermitian_part(&(&c_half * em.apply(|v| v.max(1.0)) * &c_half))
    };
    Ok(ProjectionWitness {
        d_minus,
        lambda,
        q: em.vectors.adjoint(),
    })
}

struct Whitening<T: Scalar> {
    z: DMatrix<T>,
    /// `λ(D₁₁^{-1} C)`, descending.
    sigma: Vec<f64>,
}

fn whitening<T: Scalar>(c: &DMatrix<T>, d: &DMatrix<T>) -> Result<Whitening<T>> {
    let (r, s) = dims(c, d)?;
    let d11 = upper_left(d, r);
    let e11 = eigh(&d11)?;
    if e11.values.last().is_some_and(|&v| v <= 0.0) {
        return Err(Error::NotPositiveDefinite);
    }
    let d11_mhalf = e11.apply(|v| 1.0 / v.sqrt());
    let em = eigh(&hermitian_part(&(&d11_mhalf * c * &d11_mhalf)))?;
    if em.values.last().is_some_and(|&v| v <= 0.0) {
        return Err(Error::NotPositiveDefinite);
    }
    let p = em.vectors.adjoint();
    let mut z = DMatrix::<T>::zeros(s, s);
    z.view_mut((0, 0), (r, r)).copy_from(&(&p * &d11_mhalf));
    if s > r {
        let d11_inv = e11.apply(|v| 1.0 / v);
        let d12 = d.view((0, r), (r, s - r)).into_owned();
        let d22 = d.view((r, r), (s - r, s - r)).into_owned();
        let schur = hermitian_part(&(d22 - d12.adjoint() * &d11_inv * &d12));
        let es = eigh(&schur)?;
        if es.values.last().is_some_and(|&v| v <= 0.0) {
            return Err(Error::NotPositiveDefinite);
        }
        let w = es.apply(|v| 1.0 / v.sqrt());
        let z21 = -(&w * d12.adjoint() * &d11_inv);
        z.view_mut((r, 0), (s - r, r)).copy_from(&z21);
        z.view_mut((r, r), (s - r, s - r)).copy_from(&w);
    }
    Ok(Whitening { z, sigma: em.values })
}

/// Block lower-triangular `Z` with `Z D Z* = I_s` and `Z₁₁ C Z₁₁*` diagonal.
pub fn whitening_factor<T: Scalar>(c: &DMatrix<T>, d: &DMatrix<T>) -> Result<DMatrix<T>> {
    Ok(whitening(c, d)?.z)
}

#[derive(Clone, Debug)]
pub struct LiftWitness<T: Scalar> {
    /// Closest point of `Ω₊(C)` to `D`.
    pub c_plus: DMatrix<T>,
    pub z: DMatrix<T>,
    /// `diag(min{1, λ_k(D₁₁^{-1} C)}, 1, …, 1)`.
    pub lambda: Vec<f64>,
}

/// Lift `π₊(C, D) = Z^{-1} Λ Z^{-*}`.
pub fn lift_plus<T: Scalar>(c: &DMatrix<T>, d: &DMatrix<T>) -> Result<LiftWitness<T>> {
    let (_, s) = dims(c, d)?;
    let wh = whitening(c, d)?;
    let mut lambda: Vec<f64> = wh.sigma.iter().map(|&v| v.min(1.0)).collect();
    lambda.resize(s, 1.0);
    let c_plus = if wh.sigma.iter().all(|&v| v >= 1.0) {
        d.clone()
    } else {
        let zinv =
            wh.z.clone()
                .try_inverse()
                .ok_or_else(|| Error::Numerical("whitening factor is singular".into()))?;
        let mut scaled = zinv.clone();
        for (j, &l) in lambda.iter().enumerate() {
            for x in scaled.column_mut(j).iter_mut() {
                *x = x.scale(l);
            }
        }
        hermitian_part(&(scaled * zinv.adjoint()))
    };
    Ok(LiftWitness {
        c_plus,
        z: wh.z,
        lambda,
    })
}

/// Geodesic α,β family across dimensions:
/// minus side `min tᵀ(αI_r + βJ_r)t` over `t₁ ≥ … ≥ t_r`, `t_k ≥ log λ_k`;
/// plus side the same form in `s` variables with the last `s - r` free.
/// Returns the square root of the optimum.
pub fn alpha_beta_pointset<T: Scalar>(
    c: &DMatrix<T>,
    d: &DMatrix<T>,
    alpha: f64,
    beta: f64,
    side: Side,
) -> Result<f64> {
    let (r, s) = dims(c, d)?;
    if !geodesic_ab_is_distance_check(alpha, beta, s) {
        return Err(Error::InvalidSpec(format!(
            "need alpha > 0 and beta > -alpha/s, got ({alpha}, {beta}) with s = {s}"
        )));
    }
    let (raw, _) = clamped_pencil(c, d)?;
    let logs: Vec<f64> = raw.iter().map(|l| l.ln()).collect();
    let n = match side {
        Side::Minus => r,
        Side::Plus => s,
    };
    let g = (DMatrix::identity(n, n) * alpha + DMatrix::from_element(n, n, beta)) * 2.0;
    let m = 2 * r - 1;
    let mut a = DMatrix::<f64>::zeros(m, n);
    let mut b = vec![0.0; m];
    for k in 0..r {
        a[(k, k)] = 1.0;
        b[k] = logs[k];
    }
    for k in 0..r - 1 {
        a[(r + k, k)] = 1.0;
        a[(r + k, k + 1)] = -1.0;
    }
    let mut x0 = vec![0.0; n];
    x0[..r].copy_from_slice(&logs);
    let sol = solve_qp(&g, &vec![0.0; n], &a, &b, &x0)?;
    Ok(sol.objective.max(0.0).sqrt())
}

fn lower_count<T: Scalar>(k: usize) -> usize {
    k + k * k.saturating_sub(1) / 2 * T::real_dim()
}

fn lower_from<T: Scalar>(k: usize, p: &[f64], pos: &mut usize, exp_diag: bool) -> DMatrix<T> {
    let mut m = DMatrix::<T>::zeros(k, k);
    for i in 0..k {
        let v = p[*pos];
        *pos += 1;
        m[(i, i)] = T::from_real(if exp_diag { v.exp() } else { v });
        for j in 0..i {
            m[(i, j)] = entry::<T>(p, pos);
        }
    }
    m
}

fn entry<T: Scalar>(p: &[f64], pos: &mut usize) -> T {
    match T::FIELD {
        Field::Real => {
            *pos += 1;
            T::from_real(p[*pos - 1])
        }
        Field::Complex => {
            *pos += 2;
            T::from_parts(p[*pos - 2], p[*pos - 1])
        }
    }
}

/// Minimizes the divergence directly over `Ω₋(D)` (`X = D₁₁ + LL*`) or
/// `Ω₊(C)` (`Y₁₁ = C^{1/2}(I + NN*)^{-1}C^{1/2}`, `Y₁₂ = Y₁₁G`,
/// `Y₂₂ = G*Y₁₁G + RR*`) by multi-start BFGS. Best effort: never below
/// the true minimum beyond solver tolerance.
pub fn oracle_min_over_omega<T: Scalar>(
    spec: &FiberDivergence,
    c: &DMatrix<T>,
    d: &DMatrix<T>,
    side: Side,
    restarts: usize,
    seed: u64,
) -> Result<f64> {
    let (r, s) = dims(c, d)?;
    cholesky_lower(c)?;
    cholesky_lower(d)?;
    let squared = matches!(spec.kind, DivergenceKind::GeodesicAB { .. });
    let d11 = upper_left(d, r);
    let ec = eigh(c)?;
    let c_half = ec.apply(f64::sqrt);
    let t = s - r;
    let nparams = match side {
        Side::Minus => lower_count::<T>(r),
        Side::Plus => lower_count::<T>(r) + r * t * T::real_dim() + lower_count::<T>(t),
    };
    let build = |p: &[f64]| -> DMatrix<T> {
        let mut pos = 0;
        match side {
            Side::Minus => {
                let l = lower_from::<T>(r, p, &mut pos, false);
                hermitian_part(&(&d11 + &l * l.adjoint()))
            }
            Side::Plus => {
                let n = lower_from::<T>(r, p, &mut pos, false);
                let inner = DMatrix::<T>::identity(r, r) + &n * n.adjoint();
                let inv = inner.try_inverse().unwrap_or_else(|| DMatrix::zeros(r, r));
                let y11 = hermitian_part(&(&c_half * inv * &c_half));
                let mut y = DMatrix::<T>::zeros(s, s);
                y.view_mut((0, 0), (r, r)).copy_from(&y11);
                if t > 0 {
                    let g = DMatrix::<T>::from_fn(r, t, |_, _| entry::<T>(p, &mut pos));
                    let rr = lower_from::<T>(t, p, &mut pos, true);
                    let y12 = &y11 * &g;
                    let y22 = hermitian_part(&(g.adjoint() * &y12 + &rr * rr.adjoint()));
                    y.view_mut((0, r), (r, t)).copy_from(&y12);
                    y.view_mut((r, 0), (t, r)).copy_from(&y12.adjoint());
                    y.view_mut((r, r), (t, t)).copy_from(&y22);
                }
                y
            }
        }
    };
    let objective = |p: &[f64]| -> f64 {
        let m = build(p);
        let v = match side {
            Side::Minus => divergence(spec, c, &m),
            Side::Plus => divergence(spec, &m, d),
        };
        match v {
            Ok(v) if squared => v * v,
            Ok(v) => v,
            Err(_) => f64::INFINITY,
        }
    };
    let opts = LocalOptions::default();
    let best = (0..restarts.max(1))
        .into_par_iter()
        .map(|i| {
            let x0: Vec<f64> = if i == 0 {
                vec![0.0; nparams]
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64 * 0x9E37_79B9));
                (0..nparams).map(|_| f64::normal(&mut rng)).collect()
            };
            minimize(objective, &x0, &opts).value
        })
        .reduce(|| f64::INFINITY, f64::min);
    if !best.is_finite() {
        return Err(Error::NonConvergence("no restart reached a feasible point".into()));
    }
    Ok(if squared { best.max(0.0).sqrt() } else { best })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;
    use nalgebra::DVector;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_row_slice(v))
    }

    #[test]
    fn geodesic_clamped_example() {
        let c = DMatrix::<f64>::identity(2, 2);
        let d = diag(&[4.0, 2.0, 7.0]);
        let v = pointset_minus(&FiberDivergence::geodesic(), &c, &d).unwrap();
        let want = (4f64.ln().powi(2) + 2f64.ln().powi(2)).sqrt();
        assert!((v.value - want).abs() < 1e-14);
        assert_eq!(v.clamped_spectrum, vec![4.0, 2.0]);
        let p = pointset_plus(&FiberDivergence::geodesic(), &c, &d).unwrap();
        assert_eq!(p.value, v.value);
    }

    #[test]
    fn contained_ellipsoid_gives_zero() {
        let c = diag(&[2.0, 3.0]);
        let d = diag(&[1.0, 1.0, 5.0]);
        for s in ["kl", "geo", "ab:0.5,0.5", "stein:0.5"] {
            let spec: FiberDivergence = s.parse().unwrap();
            assert_eq!(pointset_minus(&spec, &c, &d).unwrap().value, 0.0);
        }
    }

    #[test]
    fn projection_special_cases() {
        let c = diag(&[1.0, 2.0]);
        let d = diag(&[3.0, 5.0, 1.0]);
        let w = project_minus(&c, &d).unwrap();
        assert_eq!(w.d_minus, diag(&[3.0, 5.0]));
        let half = diag(&[0.5, 1.0, 9.0]);
        let w = project_minus(&c, &half).unwrap();
        assert!(max_abs(&(w.d_minus - &c)) < 1e-14);
        assert_eq!(w.lambda, vec![1.0, 1.0]);
    }

    #[test]
    fn whitening_of_identity_is_block_unitary() {
        let c = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let d = DMatrix::<f64>::identity(3, 3);
        let z = whitening_factor(&c, &d).unwrap();
        assert!(max_abs(&(&z * &d * z.transpose() - DMatrix::identity(3, 3))) < 1e-14);
        assert!((z[(2, 2)] - 1.0).abs() < 1e-14 && z[(2, 0)] == 0.0 && z[(0, 2)] == 0.0);
        let zc = z.view((0, 0), (2, 2)) * &c * z.view((0, 0), (2, 2)).transpose();
        assert!(zc[(0, 1)].abs() < 1e-14);
    }

    #[test]
    fn lift_is_identity_when_contained() {
        let c = diag(&[5.0, 6.0]);
        let d = DMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.1, 0.2, 1.0, 0.0, 0.1, 0.0, 2.0]);
        assert_eq!(lift_plus(&c, &d).unwrap().c_plus, d);
    }

    #[test]
    fn alpha_beta_gap_example() {
        let e = std::f64::consts::E;
        let c = DMatrix::<f64>::identity(1, 1);
        let d = diag(&[e, 1.0]);
        let minus = alpha_beta_pointset(&c, &d, 1.0, 1.0, Side::Minus).unwrap();
        let plus = alpha_beta_pointset(&c, &d, 1.0, 1.0, Side::Plus).unwrap();
        assert!((minus - 2f64.sqrt()).abs() < 1e-12);
        assert!((plus - 1.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn alpha_beta_region() {
        let c = DMatrix::<f64>::identity(1, 1);
        let d = DMatrix::<f64>::identity(2, 2);
        assert!(alpha_beta_pointset(&c, &d, 1.0, -0.6, Side::Plus).is_err());
        assert!(alpha_beta_pointset(&c, &d, 0.0, 0.0, Side::Minus).is_err());
    }

    #[test]
    fn rejects_nonseparable_and_bad_shapes() {
        let c = DMatrix::<f64>::identity(2, 2);
        let d = DMatrix::<f64>::identity(3, 3);
        let geoab = FiberDivergence::geodesic_ab(1.0, 0.5).unwrap();
        assert!(matches!(pointset_minus(&geoab, &c, &d), Err(Error::InvalidSpec(_))));
        assert!(matches!(
            pointset_minus(&FiberDivergence::kl(), &d, &c),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn oracle_agrees_on_small_case() {
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 2.0]);
        let d = DMatrix::from_row_slice(3, 3, &[3.0, 0.2, 0.5, 0.2, 0.5, 0.1, 0.5, 0.1, 2.0]);
        let spec = FiberDivergence::kl();
        let closed = pointset_minus(&spec, &c, &d).unwrap().value;
        for side in [Side::Minus, Side::Plus] {
            let o = oracle_min_over_omega(&spec, &c, &d, side, 8, 1).unwrap();
            assert!((o - closed).abs() < 1e-6 * closed.max(1e-3), "{side:?} {o} {closed}");
        }
    }
}
