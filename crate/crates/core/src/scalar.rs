use nalgebra::ComplexField;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Field {
    Real,
    Complex,
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Real => f.write_str("real"),
            Field::Complex => f.write_str("complex"),
        }
    }
}

/// Matrix entry type: `f64` or `Complex64`.
pub trait Scalar: ComplexField<RealField = f64> + Copy + Send + Sync + 'static {
    const FIELD: Field;

    fn from_parts(re: f64, im: f64) -> Self;
    fn re(self) -> f64;
    fn im(self) -> f64;

    /// Standard normal sample (unit variance overall for the complex case).
    fn normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Unit-modulus scalar with the phase of `self` (1 for zero).
    fn phase(self) -> Self {
        let m = self.modulus();
        if m == 0.0 {
            Self::one()
        } else {
            self.unscale(m)
        }
    }

    /// Real degrees of freedom per entry.
    fn real_dim() -> usize {
        match Self::FIELD {
            Field::Real => 1,
            Field::Complex => 2,
        }
    }
}

impl Scalar for f64 {
    const FIELD: Field = Field::Real;

    fn from_parts(re: f64, _im: f64) -> Self {
        re
    }
    fn re(self) -> f64 {
        self
    }
    fn im(self) -> f64 {
        0.0
    }
    fn normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }
}

impl Scalar for Complex64 {
    const FIELD: Field = Field::Complex;

    fn from_parts(re: f64, im: f64) -> Self {
        Complex64::new(re, im)
    }
    fn re(self) -> f64 {
        self.re
    }
    fn im(self) -> f64 {
        self.im
    }
    fn normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.sample(StandardNormal);
        Complex64::new(a, b) * std::f64::consts::FRAC_1_SQRT_2
    }
}
