//! Scalar abstraction over the two coefficient fields the pipeline supports:
//! `f64` and `Complex<f64>`.

use nalgebra::ComplexField;
use num_complex::Complex;

/// Scalar type for signals and basis coefficients.
///
/// Everything downstream of the eigenmodel (inner products, SVD factors,
/// transforms, detectors) is generic over this trait so that real and
/// complex pipelines share one implementation.
pub trait Field: ComplexField<RealField = f64> + Copy + 'static {
    const IS_COMPLEX: bool;

    /// Builds a scalar from real and imaginary parts. Returns `None` when a
    /// nonzero imaginary part is requested on the real field.
    fn from_re_im(re: f64, im: f64) -> Option<Self>;
}

impl Field for f64 {
    const IS_COMPLEX: bool = false;

    fn from_re_im(re: f64, im: f64) -> Option<Self> {
        (im == 0.0).then_some(re)
    }
}

impl Field for Complex<f64> {
    const IS_COMPLEX: bool = true;

    fn from_re_im(re: f64, im: f64) -> Option<Self> {
        Some(Complex::new(re, im))
    }
}
