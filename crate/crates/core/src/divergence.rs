use crate::error::{Error, Result};
use crate::linalg::pencil_eigenvalues;
use crate::scalar::Scalar;
use nalgebra::DMatrix;
use std::fmt;
use std::str::FromStr;

/// Divergence family between positive definite matrices of equal size,
/// expressed through the pencil spectrum `λ = eig(X^{-1} Y)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DivergenceKind {
    /// `(1/(αβ)) Σ log((α λ^β + β λ^{-α}) / (α + β))`.
    AlphaBetaLogDet { alpha: f64, beta: f64 },
    /// `(1/α²) Σ (λ^{-α} + α log λ - 1)`.
    SteinLoss { alpha: f64 },
    /// `(1/α²) Σ (λ^α - α log λ - 1)`.
    Burg { alpha: f64 },
    /// `(1/α²) Σ (u - log(1 + u))` with `u = -α log λ`.
    ItakuraSaito { alpha: f64 },
    /// `(1/2) Σ (λ^{-1} + log λ - 1)`.
    KullbackLeibler,
    /// `sqrt(α Σ log²λ + β (Σ log λ)²)`.
    GeodesicAB { alpha: f64, beta: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundTransform {
    None,
    /// `t / (1 + t)`.
    Ratio,
    /// `min(ε, t)`.
    Clamp(f64),
}

impl BoundTransform {
    pub fn apply(self, t: f64) -> f64 {
        match self {
            BoundTransform::None => t,
            BoundTransform::Ratio => {
                if t.is_infinite() {
                    1.0
                } else {
                    t / (1.0 + t)
                }
            }
            BoundTransform::Clamp(eps) => t.min(eps),
        }
    }
}

pub const DEFAULT_CLAMP: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FiberDivergence {
    pub kind: DivergenceKind,
    pub symmetrized: bool,
    pub bound: BoundTransform,
}

fn nonzero(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() || v == 0.0 {
        return Err(Error::InvalidSpec(format!(
            "{name} must be finite and nonzero, got {v}"
        )));
    }
    Ok(())
}

/// Whether the geodesic α,β family is a distance on `m x m` matrices.
pub fn geodesic_ab_is_distance_check(alpha: f64, beta: f64, m: usize) -> bool {
    alpha > 0.0 && m > 0 && beta > -alpha / m as f64
}

impl FiberDivergence {
    pub fn new(kind: DivergenceKind) -> Result<Self> {
        match kind {
            DivergenceKind::AlphaBetaLogDet { alpha, beta } => {
                nonzero("alpha", alpha)?;
                nonzero("beta", beta)?;
                nonzero("alpha + beta", alpha + beta)?;
            }
            DivergenceKind::SteinLoss { alpha }
            | DivergenceKind::Burg { alpha }
            | DivergenceKind::ItakuraSaito { alpha } => nonzero("alpha", alpha)?,
            DivergenceKind::KullbackLeibler => {}
            DivergenceKind::GeodesicAB { alpha, beta } => {
                if !(alpha > 0.0 && alpha.is_finite()) || !beta.is_finite() {
                    return Err(Error::InvalidSpec(format!(
                        "geodesic family needs alpha > 0, got ({alpha}, {beta})"
                    )));
                }
            }
        }
        Ok(FiberDivergence {
            kind,
            symmetrized: false,
            bound: BoundTransform::None,
        })
    }

    pub fn kl() -> Self {
        FiberDivergence::new(DivergenceKind::KullbackLeibler).expect("valid preset")
    }

    pub fn bhattacharyya() -> Self {
        FiberDivergence::alpha_beta(0.5, 0.5).expect("valid preset")
    }

    pub fn geodesic() -> Self {
        FiberDivergence::geodesic_ab(1.0, 0.0).expect("valid preset")
    }

    pub fn renyi(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidSpec(format!(
                "renyi order must lie in (0, 1), got {alpha}"
            )));
        }
        FiberDivergence::alpha_beta(alpha, 1.0 - alpha)
    }

    pub fn beta_logdet(beta: f64) -> Result<Self> {
        FiberDivergence::alpha_beta(1.0, beta)
    }

    pub fn alpha_beta(alpha: f64, beta: f64) -> Result<Self> {
        FiberDivergence::new(DivergenceKind::AlphaBetaLogDet { alpha, beta })
    }

    pub fn stein(alpha: f64) -> Result<Self> {
        FiberDivergence::new(DivergenceKind::SteinLoss { alpha })
    }

    pub fn burg(alpha: f64) -> Result<Self> {
        FiberDivergence::new(DivergenceKind::Burg { alpha })
    }

    pub fn itakura_saito(alpha: f64) -> Result<Self> {
        FiberDivergence::new(DivergenceKind::ItakuraSaito { alpha })
    }

    pub fn geodesic_ab(alpha: f64, beta: f64) -> Result<Self> {
        FiberDivergence::new(DivergenceKind::GeodesicAB { alpha, beta })
    }

    pub fn symmetrize(mut self) -> Self {
        self.symmetrized = true;
        self
    }

    pub fn with_bound(mut self, bound: BoundTransform) -> Result<Self> {
        if let BoundTransform::Clamp(eps) = bound {
            if !(eps > 0.0) {
                return Err(Error::InvalidSpec(format!("clamp level must be positive, got {eps}")));
            }
        }
        self.bound = bound;
        Ok(self)
    }

    /// Exponent `a` in `(Σ g(λ))^a`.
    pub fn outer_exponent(&self) -> f64 {
        match self.kind {
            DivergenceKind::GeodesicAB { .. } => 0.5,
            _ => 1.0,
        }
    }

    /// False only for the geodesic family with `β ≠ 0`.
    pub fn is_separable(&self) -> bool {
        !matches!(self.kind, DivergenceKind::GeodesicAB { beta, .. } if beta != 0.0)
    }

    /// Per-eigenvalue summand `g(λ)`.
    pub fn term(&self, l: f64) -> Result<f64> {
        if !(l > 0.0) || !l.is_finite() {
            return Err(Error::Domain(format!("pencil eigenvalue {l} is not positive")));
        }
        let ln = l.ln();
        let v = match self.kind {
            DivergenceKind::AlphaBetaLogDet { alpha, beta } => {
                let arg = (alpha * l.powf(beta) + beta * l.powf(-alpha)) / (alpha + beta);
                if !(arg > 0.0) {
                    return Err(Error::Domain(format!(
                        "alpha-beta log-det argument {arg} at eigenvalue {l}"
                    )));
                }
                arg.ln() / (alpha * beta)
            }
            DivergenceKind::SteinLoss { alpha } => (l.powf(-alpha) + alpha * ln - 1.0) / (alpha * alpha),
            DivergenceKind::Burg { alpha } => (l.powf(alpha) - alpha * ln - 1.0) / (alpha * alpha),
            DivergenceKind::ItakuraSaito { alpha } => {
                let u = -alpha * ln;
                if !(1.0 + u > 0.0) {
                    return Err(Error::Domain(format!(
                        "Itakura-Saito needs 1 - alpha log(lambda) > 0 at eigenvalue {l}"
                    )));
                }
                (u - u.ln_1p()) / (alpha * alpha)
            }
            DivergenceKind::KullbackLeibler => (1.0 / l + ln - 1.0) / 2.0,
            DivergenceKind::GeodesicAB { alpha, beta } => {
                if beta != 0.0 {
                    return Err(Error::InvalidSpec(
                        "geodesic family with beta != 0 has no per-eigenvalue form".into(),
                    ));
                }
                alpha * ln * ln
            }
        };
        if v.is_nan() {
            return Err(Error::Domain(format!("undefined value at eigenvalue {l}")));
        }
        Ok(v)
    }

    fn raw(&self, lambda: &[f64]) -> Result<f64> {
        match self.kind {
            DivergenceKind::GeodesicAB { alpha, beta } => {
                let m = lambda.len();
                if beta != 0.0 && !geodesic_ab_is_distance_check(alpha, beta, m) {
                    return Err(Error::InvalidSpec(format!(
                        "geodesic family needs beta > -alpha/m = {}, got {beta}",
                        -alpha / m as f64
                    )));
                }
                let mut sq = 0.0;
                let mut sum = 0.0;
                for &l in lambda {
                    if !(l > 0.0) || !l.is_finite() {
                        return Err(Error::Domain(format!("pencil eigenvalue {l} is not positive")));
                    }
                    let ln = l.ln();
                    sq += ln * ln;
                    sum += ln;
                }
                Ok((alpha * sq + beta * sum * sum).max(0.0).sqrt())
            }
            _ => {
                let mut acc = 0.0;
                for &l in lambda {
                    acc += self.term(l)?;
                }
                Ok(acc)
            }
        }
    }

    /// Value from a full pencil spectrum, including symmetrization and bound.
    pub fn evaluate_spectrum(&self, lambda: &[f64]) -> Result<f64> {
        let mut v = self.raw(lambda)?;
        if self.symmetrized {
            let inv: Vec<f64> = lambda.iter().map(|l| 1.0 / l).collect();
            v = 0.5 * (v + self.raw(&inv)?);
        }
        Ok(self.bound.apply(v))
    }
}

/// `δ(X, Y)` for positive definite `X`, `Y` of equal size.
pub fn divergence<T: Scalar>(spec: &FiberDivergence, x: &DMatrix<T>, y: &DMatrix<T>) -> Result<f64> {
    let lambda = pencil_eigenvalues(x, y)?;
    if lambda.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::NotPositiveDefinite);
    }
    spec.evaluate_spectrum(&lambda)
}

fn parse_params(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidSpec(format!("bad parameter '{p}'")))
        })
        .collect()
}

impl FromStr for FiberDivergence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.trim().split('+');
        let head = parts.next().unwrap_or("").trim().to_ascii_lowercase();
        let (name, params) = match head.split_once(':') {
            Some((n, p)) => (n.trim().to_string(), parse_params(p)?),
            None => (head.clone(), Vec::new()),
        };
        let want = |k: usize| -> Result<()> {
            if params.len() != k {
                return Err(Error::InvalidSpec(format!(
                    "'{name}' takes {k} parameter(s), got {}",
                    params.len()
                )));
            }
            Ok(())
        };
        let mut spec = match name.replace(['-', '_'], "").as_str() {
            "kl" => {
                want(0)?;
                FiberDivergence::kl()
            }
            "bhattacharyya" | "bhat" => {
                want(0)?;
                FiberDivergence::bhattacharyya()
            }
            "geo" | "geodesic" => {
                want(0)?;
                FiberDivergence::geodesic()
            }
            "renyi" => {
                want(1)?;
                FiberDivergence::renyi(params[0])?
            }
            "betalogdet" | "blogdet" => {
                want(1)?;
                FiberDivergence::beta_logdet(params[0])?
            }
            "ab" | "alphabeta" => {
                want(2)?;
                FiberDivergence::alpha_beta(params[0], params[1])?
            }
            "stein" => {
                want(1)?;
                FiberDivergence::stein(params[0])?
            }
            "burg" => {
                want(1)?;
                FiberDivergence::burg(params[0])?
            }
            "is" | "itakurasaito" => {
                want(1)?;
                FiberDivergence::itakura_saito(params[0])?
            }
            "geoab" => {
                want(2)?;
                FiberDivergence::geodesic_ab(params[0], params[1])?
            }
            other => return Err(Error::InvalidSpec(format!("unknown divergence '{other}'"))),
        };
        for m in parts {
            let m = m.trim().to_ascii_lowercase();
            match m.split_once('=') {
                None if m == "sym" => spec = spec.symmetrize(),
                None if m == "ratio" => spec = spec.with_bound(BoundTransform::Ratio)?,
                None if m == "clamp" => spec = spec.with_bound(BoundTransform::Clamp(DEFAULT_CLAMP))?,
                Some(("clamp", v)) => {
                    let eps = v
                        .trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidSpec(format!("bad clamp level '{v}'")))?;
                    spec = spec.with_bound(BoundTransform::Clamp(eps))?;
                }
                _ => return Err(Error::InvalidSpec(format!("unknown modifier '+{m}'"))),
            }
        }
        Ok(spec)
    }
}

impl fmt::Display for FiberDivergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            DivergenceKind::AlphaBetaLogDet { alpha, beta } => write!(f, "ab:{alpha},{beta}")?,
            DivergenceKind::SteinLoss { alpha } => write!(f, "stein:{alpha}")?,
            DivergenceKind::Burg { alpha } => write!(f, "burg:{alpha}")?,
            DivergenceKind::ItakuraSaito { alpha } => write!(f, "is:{alpha}")?,
            DivergenceKind::KullbackLeibler => write!(f, "kl")?,
            DivergenceKind::GeodesicAB { alpha, beta } => {
                if alpha == 1.0 && beta == 0.0 {
                    write!(f, "geo")?
                } else {
                    write!(f, "geoab:{alpha},{beta}")?
                }
            }
        }
        if self.symmetrized {
            write!(f, "+sym")?;
        }
        match self.bound {
            BoundTransform::None => Ok(()),
            BoundTransform::Ratio => write!(f, "+ratio"),
            BoundTransform::Clamp(eps) => write!(f, "+clamp={eps}"),
        }
    }
}
