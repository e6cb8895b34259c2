//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Complex amplitude type over a real scalar `T`.
pub type Cplx<T> = nalgebra::Complex<T>;

/// Real floating point scalar: `f32` or `f64`.
///
/// Besides the arithmetic from [`RealField`], every scalar carries the
/// numerical tolerances used by the structural checks (Hermiticity,
/// unitarity, normalisation). They are scaled to the precision of the type so
/// the same generic code can run in single precision with looser guarantees.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Display + Debug + FromStr + Send + Sync + 'static
{
    /// Tolerance on `max|M - M^dagger|` for a matrix flagged Hermitian.
    const HERMITIAN_TOL: f64;
    /// Tolerance on `max|U^dagger U - I|` for a matrix flagged unitary.
    const UNITARY_TOL: f64;
    /// Tolerance on `|norm - 1|` for a state vector.
    const NORM_TOL: f64;

    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self;

    fn to_f64_lossy(self) -> f64;
}

impl Real for f64 {
    const HERMITIAN_TOL: f64 = 1e-12;
    const UNITARY_TOL: f64 = 1e-10;
    const NORM_TOL: f64 = 1e-12;

    #[inline]
    fn lit(x: f64) -> Self {
        x
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self
    }
}

impl Real for f32 {
    const HERMITIAN_TOL: f64 = 1e-5;
    const UNITARY_TOL: f64 = 1e-4;
    const NORM_TOL: f64 = 1e-5;

    #[inline]
    fn lit(x: f64) -> Self {
        x as f32
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self as f64
    }
}

/// `n!` as a real number.
pub fn factorial<T: Real>(n: u32) -> T {
    (1..=n).fold(T::one(), |acc, k| acc * T::lit(k as f64))
}

/// `e^{i theta}`.
#[inline]
pub fn cis<T: Real>(theta: T) -> Cplx<T> {
    Cplx::new(theta.cos(), theta.sin())
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_phase<T: Real>(phi: T) -> T {
    let two_pi = T::two_pi();
    let mut x = phi % two_pi;
    if x <= -T::pi() {
        x += two_pi;
    } else if x > T::pi() {
        x -= two_pi;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorials() {
        assert_eq!(factorial::<f64>(0), 1.0);
        assert_eq!(factorial::<f64>(3), 6.0);
        assert_eq!(factorial::<f32>(5), 120.0);
    }

    #[test]
    fn wrap_phase_range() {
        use std::f64::consts::PI;
        for k in -20..20 {
            let x = 0.37 * k as f64;
            let w = wrap_phase(x);
            assert!(w > -PI && w <= PI);
            assert!(
                ((x - w) / (2.0 * PI)).fract().abs() < 1e-12
                    || (((x - w) / (2.0 * PI)).fract().abs() - 1.0).abs() < 1e-12
            );
        }
        assert!((wrap_phase(3.0 * PI) - PI).abs() < 1e-12);
    }
}
