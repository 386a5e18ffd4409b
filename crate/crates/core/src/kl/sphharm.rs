//! Associated Legendre functions and complex spherical harmonics.

use std::f64::consts::PI;

use num_complex::Complex;

use crate::error::{Error, Result};

/// a! / b! as a floating-point product. Safe for the degree range used here
/// (l up to a few hundred).
fn factorial_quotient(a: usize, b: usize) -> f64 {
    if a >= b {
        ((b + 1)..=a).map(|j| j as f64).product()
    } else {
        1.0 / factorial_quotient(b, a)
    }
}

/// Associated Legendre function P_l^m(x) with the Condon-Shortley phase.
///
/// Negative orders follow P_l^{-m} = (-1)^m (l-m)!/(l+m)! P_l^m.
pub fn legendre_assoc(l: usize, m: i64, x: f64) -> Result<f64> {
    let ma = m.unsigned_abs() as usize;
    if ma > l {
        return Err(Error::invalid(format!("order |{m}| exceeds degree {l}")));
    }
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::invalid(format!("argument {x} outside [-1, 1]")));
    }
    if m < 0 {
        let sign = if ma % 2 == 0 { 1.0 } else { -1.0 };
        let ratio = factorial_quotient(l - ma, l + ma);
        return Ok(sign * ratio * legendre_assoc(l, ma as i64, x)?);
    }
    let m = ma;
    // Seed P_m^m = (-1)^m (2m-1)!! (1-x²)^{m/2}, then raise the degree.
    let mut pmm = 1.0;
    if m > 0 {
        let somx2 = ((1.0 - x) * (1.0 + x)).sqrt();
        let mut odd = 1.0;
        for _ in 0..m {
            pmm *= -odd * somx2;
            odd += 2.0;
        }
    }
    if l == m {
        return Ok(pmm);
    }
    let mut pmm1 = x * (2.0 * m as f64 + 1.0) * pmm;
    if l == m + 1 {
        return Ok(pmm1);
    }
    let mut out = 0.0;
    for ll in (m + 2)..=l {
        let llf = ll as f64;
        let mf = m as f64;
        out = ((2.0 * llf - 1.0) * x * pmm1 - (llf + mf - 1.0) * pmm) / (llf - mf);
        pmm = pmm1;
        pmm1 = out;
    }
    Ok(out)
}

/// Complex spherical harmonic Y_l^m(θ, φ) with the orthonormalization
/// √((2l+1)/(4π) · (l-m)!/(l+m)!), θ the colatitude.
pub fn spherical_harmonic(l: usize, m: i64, theta: f64, phi: f64) -> Result<Complex<f64>> {
    if m.unsigned_abs() as usize > l {
        return Err(Error::invalid(format!("order |{m}| exceeds degree {l}")));
    }
    let p = legendre_assoc(l, m, theta.cos())?;
    let ratio = if m >= 0 {
        factorial_quotient(l - m as usize, l + m as usize)
    } else {
        let ma = (-m) as usize;
        factorial_quotient(l + ma, l - ma)
    };
    let norm = ((2.0 * l as f64 + 1.0) / (4.0 * PI) * ratio).sqrt();
    Ok(Complex::from_polar(1.0, m as f64 * phi) * (norm * p))
}
