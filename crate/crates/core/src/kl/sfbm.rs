//! Spherical fractional Brownian motion: spectrum of the angular covariance
//! and its expansion over shifted spherical harmonics.
//!
//! The spectral coefficients are d_l = ∫_{-1}^{1} arccos(x) P_l(x) dx. Modes
//! of degree l carry amplitude √(-π d_l) and shape Y_l^m - Y_l^m(0, 0); the
//! shift keeps fixing the field at the north pole, which kills the l = 0
//! mode outright and makes the remaining zonal (m = 0) shapes non-constant.

use std::f64::consts::PI;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::kl::{
    sphharm::spherical_harmonic, CoefficientLaw, Domain, EigenModel, EigenPair, to_spherical,
};
use crate::quadrature::gauss_legendre;

/// Coefficients below this magnitude count as exact zeros of the spectrum.
pub const SPECTRUM_ZERO_TOL: f64 = 1e-10;

/// The angular spectrum d_0..d_{l_max} of arccos on [-1, 1].
#[derive(Clone, Debug)]
pub struct SfbmSpectrum {
    pub l_max: usize,
    pub quadrature_order: usize,
    d: Vec<f64>,
}

/// Computes d_l = ∫ arccos(x) P_l(x) dx for l = 0..l_max at the given
/// quadrature order.
///
/// The substitution x = cosθ turns the integrand into θ P_l(cosθ) sinθ,
/// which is smooth, so Gauss-Legendre converges at machine precision once
/// the order resolves the oscillation; `order ≥ 4 l_max` is ample. The raw
/// integrand's arccos endpoint slope would otherwise stall convergence.
pub fn sfbm_spectrum(l_max: usize, quadrature_order: usize) -> SfbmSpectrum {
    let order = quadrature_order.max(4);
    let (nodes, weights) = gauss_legendre(order);
    let mut d = vec![0.0; l_max + 1];
    for (&t, &w) in nodes.iter().zip(&weights) {
        // θ ranges over [0, π]; the map from [-1, 1] carries a π/2 Jacobian.
        let theta = 0.5 * PI * (t + 1.0);
        let x = theta.cos();
        let common = w * theta * theta.sin() * 0.5 * PI;
        // P_l(x) for all degrees at once via the recurrence.
        let mut prev = 1.0;
        let mut cur = x;
        d[0] += common * prev;
        if l_max >= 1 {
            d[1] += common * cur;
        }
        for l in 2..=l_max {
            let lf = l as f64;
            let next = ((2.0 * lf - 1.0) * x * cur - (lf - 1.0) * prev) / lf;
            prev = cur;
            cur = next;
            d[l] += common * cur;
        }
    }
    SfbmSpectrum {
        l_max,
        quadrature_order: order,
        d,
    }
}

/// Spectrum at the default order 4·l_max.
pub fn sfbm_spectrum_default(l_max: usize) -> SfbmSpectrum {
    sfbm_spectrum(l_max, (4 * l_max).max(16))
}

impl SfbmSpectrum {
    /// d_l; panics if l exceeds the computed range.
    pub fn d(&self, l: usize) -> f64 {
        self.d[l]
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.d
    }

    pub fn is_vanishing(&self, l: usize) -> bool {
        self.d[l].abs() <= SPECTRUM_ZERO_TOL
    }

    /// Degrees with numerically zero coefficients.
    pub fn vanishing_degrees(&self) -> Vec<usize> {
        (0..=self.l_max).filter(|&l| self.is_vanishing(l)).collect()
    }

    /// Total multiplicity Σ (2l + 1) over degrees with nonvanishing d_l.
    ///
    /// This is the truncation size quoted for the expansion when every
    /// harmonic of a surviving degree is counted, including l = 0.
    pub fn counted_modes(&self) -> usize {
        (0..=self.l_max)
            .filter(|&l| !self.is_vanishing(l))
            .map(|l| 2 * l + 1)
            .sum()
    }

    /// Least-squares slope of log|d_l| against log l over nonvanishing
    /// degrees 1..=l_cap.
    pub fn decay_exponent(&self, l_cap: usize) -> f64 {
        let pts: Vec<(f64, f64)> = (1..=l_cap.min(self.l_max))
            .filter(|&l| !self.is_vanishing(l))
            .map(|l| ((l as f64).ln(), self.d[l].abs().ln()))
            .collect();
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        (n * sxy - sx * sy) / (n * sxx - sx * sx)
    }
}

/// SFBM model over degrees 1..=l_max.
///
/// Raw modes Y_l^m - Y_l^m(0, 0) are stored in normal form (unit norm, the
/// squared norm folded into the eigenvalue): the zonal shift inflates the
/// m = 0 norms to √(2l + 2) while every m ≠ 0 mode is already unit. Pairs
/// are ordered by descending eigenvalue with ties broken by (l, m).
pub fn sfbm_model(l_max: usize) -> Result<EigenModel<Complex<f64>>> {
    if l_max == 0 {
        return Err(Error::invalid("model needs at least degree 1"));
    }
    let spectrum = sfbm_spectrum_default(l_max);
    let mut modes: Vec<(f64, usize, i64)> = Vec::new();
    for l in 1..=l_max {
        if spectrum.is_vanishing(l) {
            continue;
        }
        let raw = -PI * spectrum.d(l);
        if raw < 0.0 {
            return Err(Error::ModelConstruction(format!(
                "negative spectral weight at degree {l}"
            )));
        }
        for m in -(l as i64)..=(l as i64) {
            let norm_sq = if m == 0 { 2.0 * l as f64 + 2.0 } else { 1.0 };
            modes.push((raw * norm_sq, l, m));
        }
    }
    modes.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap()
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    let pairs = modes
        .into_iter()
        .enumerate()
        .map(|(i, (lambda, l, m))| {
            let shift = spherical_harmonic(l, m, 0.0, 0.0).expect("order within degree");
            let inv_norm = if m == 0 {
                1.0 / (2.0 * l as f64 + 2.0).sqrt()
            } else {
                1.0
            };
            EigenPair::analytic(i + 1, lambda, move |p| {
                let (theta, phi) = to_spherical(p);
                let y = spherical_harmonic(l, m, theta, phi).expect("order within degree");
                (y - shift) * inv_norm
            })
        })
        .collect();
    Ok(EigenModel::new(
        Domain::UnitSphere,
        pairs,
        CoefficientLaw::StandardNormal,
        None,
        None,
    ))
}
