//! Spectral expansion adapted to the squared-exponential covariance
//! exp(-(x-y)²/L_c²) on [0, τ]: a constant mode plus sine/cosine pairs with
//! super-exponentially decaying amplitudes
//! √λ_k = (√π L)^{1/2} exp(-(⌊k/2⌋ π L)² / 8), frequencies ⌊k/2⌋π/L_p, and
//! uniform coefficients on [-√3, √3].
//!
//! The periodization length defaults to L_p = max{τ, 2 L_c} with L = L_c/L_p.
//! The raw modes are not normalized on [0, τ]; stored pairs divide each mode
//! by its norm and scale the eigenvalue by the squared norm, so the stored
//! eigenvalue sequence sums to the mean-square energy of the field.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::kl::{CoefficientLaw, Domain, EigenModel, EigenPair, TailRule, TAIL_TERMS};

/// Unnormalized mode shape: 1 for k = 1, then sin(⌊k/2⌋πx/L_p) for even k
/// and cos(⌊k/2⌋πx/L_p) for odd k ≥ 3.
pub fn mode_shape(k: usize, x: f64, l_p: f64) -> f64 {
    let j = (k / 2) as f64;
    let arg = j * PI * x / l_p;
    match (k, k % 2) {
        (1, _) => 1.0,
        (_, 0) => arg.sin(),
        _ => arg.cos(),
    }
}

/// Raw squared amplitude λ_k = π L exp(-(⌊k/2⌋ π L)² / 4) for k ≥ 2; the
/// constant mode carries √λ_1 = (√π L / 2)^{1/2}.
fn raw_eigenvalue(k: usize, l: f64) -> f64 {
    if k == 1 {
        PI.sqrt() * l / 2.0
    } else {
        let j = (k / 2) as f64;
        PI.sqrt() * l * (-(j * PI * l).powi(2) / 4.0).exp()
    }
}

/// Squared L² norm of the unnormalized mode over [0, τ].
fn mode_norm_sq(k: usize, l_p: f64, tau: f64) -> f64 {
    if k == 1 {
        return tau;
    }
    let a = (k / 2) as f64 * PI / l_p;
    let osc = (2.0 * a * tau).sin() / (4.0 * a);
    if k % 2 == 0 {
        tau / 2.0 - osc
    } else {
        tau / 2.0 + osc
    }
}

/// Stored (normalized-mode) eigenvalue of the k-th pair.
pub(crate) fn eigenvalue(k: usize, l_p: f64, l: f64, tau: f64) -> f64 {
    raw_eigenvalue(k, l) * mode_norm_sq(k, l_p, tau)
}

/// Model on [0, τ] for correlation length l_c, with the periodization
/// L_p = max{τ, 2 l_c}. Mean is identically 1.
pub fn gauss_model(m: usize, l_c: f64, tau: f64) -> Result<EigenModel<f64>> {
    if l_c <= 0.0 || tau <= 0.0 {
        return Err(Error::invalid(
            "correlation length and interval length must be positive",
        ));
    }
    let l_p = tau.max(2.0 * l_c);
    gauss_model_with_scales(m, l_p, l_c / l_p, tau)
}

/// Model with the periodization length and ratio fixed directly, bypassing
/// the covariance-derived defaults.
pub fn gauss_model_with_scales(m: usize, l_p: f64, l: f64, tau: f64) -> Result<EigenModel<f64>> {
    if m == 0 {
        return Err(Error::invalid("model needs at least one mode"));
    }
    if l_p <= 0.0 || l <= 0.0 || tau <= 0.0 {
        return Err(Error::invalid("scales must be positive"));
    }
    let pairs = (1..=m)
        .map(|k| {
            let lambda = eigenvalue(k, l_p, l, tau);
            let inv_norm = 1.0 / mode_norm_sq(k, l_p, tau).sqrt();
            EigenPair::analytic(k, lambda, move |p| {
                mode_shape(k, p[0], l_p) * inv_norm
            })
        })
        .collect();
    Ok(EigenModel::new(
        Domain::Interval { a: 0.0, b: tau },
        pairs,
        CoefficientLaw::UniformSqrt3,
        Some(std::sync::Arc::new(|_| 1.0)),
        Some(TailRule::Gauss { l_p, l, tau }),
    ))
}

/// Smallest truncation whose tail drops to `tol` or below, capped at
/// `max_modes`.
pub fn modes_for_tail(l_p: f64, l: f64, tau: f64, tol: f64, max_modes: usize) -> usize {
    for m in 1..max_modes {
        if tail(m, l_p, l, tau) <= tol {
            return m;
        }
    }
    max_modes
}

/// Σ_{k > m} λ_k for the stored eigenvalue sequence.
///
/// Terms decay like exp(-(kπL)²/16), so the explicit sum hits f64 underflow
/// long before the term cap; a geometric majorant covers the remainder in
/// the extreme small-L case where it does not.
pub(crate) fn tail(m: usize, l_p: f64, l: f64, tau: f64) -> f64 {
    let mut sum = 0.0;
    let mut k = m + 1;
    let mut term = 0.0;
    while k <= m + TAIL_TERMS {
        term = eigenvalue(k, l_p, l, tau);
        sum += term;
        if term < 1e-300 {
            return sum;
        }
        k += 1;
    }
    let j = (k / 2) as f64;
    let ratio = (-((2.0 * j + 1.0) * (PI * l).powi(2)) / 4.0).exp();
    if ratio < 1.0 {
        sum += term * ratio / (1.0 - ratio);
    }
    sum
}
