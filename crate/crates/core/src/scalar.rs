//! Scalar abstraction: the whole crate is generic over the floating-point
//! type through this trait, with `f64` as the working precision for the
//! tolerances quoted throughout.

use std::fmt::{Debug, Display, LowerExp};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use rustfft::FftNum;

/// Real scalar usable everywhere in the crate: IEEE float with the constants,
/// conversions and FFT support the spectral engine needs.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + NumAssign + FftNum + Display + LowerExp + Debug
{
}

impl<T> Scalar for T where
    T: Float + FloatConst + FromPrimitive + NumAssign + FftNum + Display + LowerExp + Debug
{
}

/// Shorthand for the complex type built over a [`Scalar`].
pub type C<T> = Complex<T>;

/// Converts an `f64` literal into the working scalar type.
///
/// Conversions of finite literals into `f32`/`f64` cannot fail, so this
/// panics only on a genuinely broken `Scalar` impl.
#[inline]
pub fn lit<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("finite f64 literal must convert into the scalar type")
}

/// Converts a `usize` into the working scalar type.
#[inline]
pub fn lit_usize<T: Scalar>(x: usize) -> T {
    T::from_usize(x).expect("usize must convert into the scalar type")
}

/// Complex unit with zero imaginary part.
#[inline]
pub fn cplx<T: Scalar>(re: f64, im: f64) -> C<T> {
    Complex::new(lit(re), lit(im))
}

/// Relative deviation |a - b| / max(|a|, |b|, floor).
pub fn rel_err<T: Scalar>(a: C<T>, b: C<T>, floor: T) -> T {
    let scale = a.norm().max(b.norm()).max(floor);
    (a - b).norm() / scale
}

/// Relative deviation for real quantities.
pub fn rel_err_real<T: Scalar>(a: T, b: T, floor: T) -> T {
    let scale = a.abs().max(b.abs()).max(floor);
    (a - b).abs() / scale
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_roundtrip() {
        let x: f64 = lit(0.25);
        assert_eq!(x, 0.25);
        let y: f32 = lit(0.5);
        assert_eq!(y, 0.5f32);
    }

    #[test]
    fn rel_err_uses_floor_for_tiny_values() {
        let a = cplx::<f64>(1e-30, 0.0);
        let b = cplx::<f64>(0.0, 0.0);
        assert!(rel_err(a, b, 1e-12) < 1e-17);
    }
}
