//! Eigenpairs of standard Brownian motion on [0, 1]:
//! λ_k = 4 / ((2k-1)²π²), φ_k(t) = √2 sin((k - 1/2)πt), Y_k ~ N(0, 1).
//!
//! The eigenfunctions are already orthonormal, so the stored pairs coincide
//! with the textbook formulas.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::kl::{CoefficientLaw, Domain, EigenModel, EigenPair, TailRule, TAIL_TERMS};

/// k-th eigenvalue, k >= 1.
pub fn eigenvalue(k: usize) -> f64 {
    let odd = (2 * k - 1) as f64;
    4.0 / (odd * odd * PI * PI)
}

/// The k-th Brownian eigenpair on [0, 1].
pub fn brownian_eigenpair(k: usize) -> Result<EigenPair<f64>> {
    if k == 0 {
        return Err(Error::invalid("eigenpair index is 1-based"));
    }
    let omega = (k as f64 - 0.5) * PI;
    Ok(EigenPair::analytic(k, eigenvalue(k), move |p| {
        2.0_f64.sqrt() * (omega * p[0]).sin()
    }))
}

/// Brownian-motion model truncated to m modes.
pub fn brownian_model(m: usize) -> Result<EigenModel<f64>> {
    if m == 0 {
        return Err(Error::invalid("model needs at least one mode"));
    }
    let pairs = (1..=m)
        .map(brownian_eigenpair)
        .collect::<Result<Vec<_>>>()?;
    Ok(EigenModel::new(
        Domain::Interval { a: 0.0, b: 1.0 },
        pairs,
        CoefficientLaw::StandardNormal,
        None,
        Some(TailRule::Brownian),
    ))
}

/// Σ_{k > m} λ_k, by explicit partial sum plus a midpoint integral remainder.
///
/// Summing K terms leaves Σ_{k > m+K} 4/((2k-1)²π²) ≈ 1/(π²(m+K)) with an
/// O((m+K)⁻³) error, far below f64 resolution of the total.
pub(crate) fn tail(m: usize) -> f64 {
    let last = m + TAIL_TERMS;
    let mut sum = 0.0;
    for k in (m + 1..=last).rev() {
        let odd = (2 * k - 1) as f64;
        sum += 4.0 / (odd * odd * PI * PI);
    }
    sum + 1.0 / (PI * PI * last as f64)
}
