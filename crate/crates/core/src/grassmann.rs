use crate::error::{Error, Result};
use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

const ANGLE_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GrassmannMetric {
    Asimov,
    BinetCauchy,
    Chordal,
    FubiniStudy,
    Martin,
    Procrustes,
    Projection,
    Spectral,
    Geodesic,
}

impl GrassmannMetric {
    pub const ALL: [GrassmannMetric; 9] = [
        GrassmannMetric::Asimov,
        GrassmannMetric::BinetCauchy,
        GrassmannMetric::Chordal,
        GrassmannMetric::FubiniStudy,
        GrassmannMetric::Martin,
        GrassmannMetric::Procrustes,
        GrassmannMetric::Projection,
        GrassmannMetric::Spectral,
        GrassmannMetric::Geodesic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GrassmannMetric::Asimov => "asimov",
            GrassmannMetric::BinetCauchy => "binetcauchy",
            GrassmannMetric::Chordal => "chordal",
            GrassmannMetric::FubiniStudy => "fubinistudy",
            GrassmannMetric::Martin => "martin",
            GrassmannMetric::Procrustes => "procrustes",
            GrassmannMetric::Projection => "projection",
            GrassmannMetric::Spectral => "spectral",
            GrassmannMetric::Geodesic => "geodesic",
        }
    }
}

impl fmt::Display for GrassmannMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GrassmannMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace(['-', '_'], "");
        GrassmannMetric::ALL
            .into_iter()
            .find(|m| m.name() == key)
            .ok_or_else(|| Error::InvalidSpec(format!("unknown Grassmann metric '{s}'")))
    }
}

/// Distance from principal angles (ascending or not). Only the `min(r, s)`
/// angles enter; an empty list gives zero.
pub fn grassmann_distance(metric: GrassmannMetric, angles: &[f64]) -> Result<f64> {
    let mut th = Vec::with_capacity(angles.len());
    for &a in angles {
        if !(0.0..=FRAC_PI_2 + ANGLE_SLACK).contains(&a) {
            return Err(Error::AngleRange(a));
        }
        th.push(a.min(FRAC_PI_2));
    }
    let largest = th.iter().copied().fold(0.0, f64::max);
    let sum_sin2: f64 = th.iter().map(|t| t.sin().powi(2)).sum();
    let prod_cos: f64 = th.iter().map(|t| t.cos()).product();
    let value = match metric {
        GrassmannMetric::Asimov => largest,
        GrassmannMetric::BinetCauchy => (1.0 - prod_cos * prod_cos).max(0.0).sqrt(),
        GrassmannMetric::Chordal => sum_sin2.sqrt(),
        GrassmannMetric::FubiniStudy => prod_cos.clamp(-1.0, 1.0).acos(),
        GrassmannMetric::Martin => {
            if th.iter().any(|&t| t >= FRAC_PI_2) {
                f64::INFINITY
            } else {
                (-2.0 * th.iter().map(|t| t.cos().ln()).sum::<f64>()).max(0.0).sqrt()
            }
        }
        GrassmannMetric::Procrustes => 2.0 * th.iter().map(|t| (t / 2.0).sin().powi(2)).sum::<f64>().sqrt(),
        GrassmannMetric::Projection => largest.sin(),
        GrassmannMetric::Spectral => 2.0 * (largest / 2.0).sin(),
        GrassmannMetric::Geodesic => th.iter().map(|t| t * t).sum::<f64>().sqrt(),
    };
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn names_roundtrip() {
        for m in GrassmannMetric::ALL {
            assert_eq!(m.to_string().parse::<GrassmannMetric>().unwrap(), m);
        }
        assert_eq!(
            "Binet-Cauchy".parse::<GrassmannMetric>().unwrap(),
            GrassmannMetric::BinetCauchy
        );
        assert!("hamming".parse::<GrassmannMetric>().is_err());
    }

    #[test]
    fn zero_angles_give_zero() {
        for m in GrassmannMetric::ALL {
            assert_eq!(grassmann_distance(m, &[0.0, 0.0]).unwrap(), 0.0);
        }
    }

    #[test]
    fn right_angle_values() {
        let th = [0.0, PI / 2.0];
        let g = |m| grassmann_distance(m, &th).unwrap();
        assert!((g(GrassmannMetric::Asimov) - PI / 2.0).abs() < 1e-15);
        assert!((g(GrassmannMetric::Projection) - 1.0).abs() < 1e-15);
        assert!((g(GrassmannMetric::Spectral) - 2f64.sqrt()).abs() < 1e-15);
        assert!((g(GrassmannMetric::Chordal) - 1.0).abs() < 1e-15);
        assert!((g(GrassmannMetric::BinetCauchy) - 1.0).abs() < 1e-15);
        assert!((g(GrassmannMetric::FubiniStudy) - PI / 2.0).abs() < 1e-15);
        assert!((g(GrassmannMetric::Procrustes) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(g(GrassmannMetric::Martin), f64::INFINITY);
    }

    #[test]
    fn single_angle_martin() {
        let t = 0.7f64;
        let v = grassmann_distance(GrassmannMetric::Martin, &[t]).unwrap();
        assert!((v * v - (-2.0 * t.cos().ln())).abs() < 1e-14);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(grassmann_distance(GrassmannMetric::Geodesic, &[-0.1]).is_err());
        assert!(grassmann_distance(GrassmannMetric::Geodesic, &[2.0]).is_err());
        assert!(grassmann_distance(GrassmannMetric::Geodesic, &[f64::NAN]).is_err());
        assert!(grassmann_distance(GrassmannMetric::Geodesic, &[PI / 2.0 + 1e-13]).is_ok());
    }
}
