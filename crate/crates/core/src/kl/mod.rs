//! Eigenmodels of random fields: analytic eigenpair families, empirical
//! estimation from samples, truncation tails, and seeded realization
//! sampling.
//!
//! A model is a finite list of eigenpairs (λ_k, φ_k) together with a
//! coefficient law; realizations take the form
//! v(x) = mean(x) + Σ_k √λ_k φ_k(x) Y_k.
//!
//! Eigenpairs are stored in normal form: each stored eigenfunction has unit
//! L² norm and its eigenvalue absorbs the squared norm of the raw mode. This
//! leaves realizations unchanged while making eigenvalue sums equal the
//! mean-square field energy, which is what truncation tails measure.

pub mod brownian;
pub mod gauss;
mod sampler;
pub mod sfbm;
mod snapshots;
pub mod sphharm;

pub use sampler::{derive_seed, sample_realization, RealizationSampler};
pub use sfbm::{sfbm_model, sfbm_spectrum, SfbmSpectrum};
pub use snapshots::{snapshot_eigenpairs, snapshot_model};
pub use sphharm::{legendre_assoc, spherical_harmonic};

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::Field;

/// Number of analytic tail terms summed explicitly before switching to an
/// integral remainder.
pub const TAIL_TERMS: usize = 100_000;

/// Domain a model's eigenfunctions live on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Domain {
    /// The interval [a, b] embedded on the x-axis.
    Interval { a: f64, b: f64 },
    /// The unit sphere in R^3.
    UnitSphere,
}

impl Domain {
    /// Loose membership test used to validate evaluation points.
    pub fn contains(&self, p: [f64; 3]) -> bool {
        match *self {
            Domain::Interval { a, b } => {
                let pad = 1e-9 * (b - a).abs().max(1.0);
                p[0] >= a - pad && p[0] <= b + pad
            }
            Domain::UnitSphere => {
                let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
                (r - 1.0).abs() <= 1e-6
            }
        }
    }
}

/// Colatitude and longitude of a point on the unit sphere.
pub fn to_spherical(p: [f64; 3]) -> (f64, f64) {
    let theta = p[2].clamp(-1.0, 1.0).acos();
    let mut phi = p[1].atan2(p[0]);
    if phi < 0.0 {
        phi += 2.0 * std::f64::consts::PI;
    }
    (theta, phi)
}

/// Cartesian coordinates of (colatitude, longitude) on the unit sphere.
pub fn to_cartesian(theta: f64, phi: f64) -> [f64; 3] {
    [
        theta.sin() * phi.cos(),
        theta.sin() * phi.sin(),
        theta.cos(),
    ]
}

/// Distribution of the stochastic coefficients Y_k.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoefficientLaw {
    /// N(0, 1).
    StandardNormal,
    /// Uniform on [-√3, √3] (zero mean, unit variance).
    UniformSqrt3,
    /// Always zero; for deterministic diagnostics.
    Zero,
}

impl CoefficientLaw {
    pub(crate) fn draw(&self, rng: &mut rand_chacha::ChaCha8Rng) -> f64 {
        use rand::Rng;
        match self {
            CoefficientLaw::StandardNormal => rng.sample(rand_distr::StandardNormal),
            CoefficientLaw::UniformSqrt3 => {
                let s = 3.0_f64.sqrt();
                rng.random_range(-s..=s)
            }
            CoefficientLaw::Zero => 0.0,
        }
    }
}

pub(crate) type PointFn<T> = Arc<dyn Fn([f64; 3]) -> T + Send + Sync>;

/// How a stored eigenfunction is evaluated.
#[derive(Clone)]
pub(crate) enum ModeShape<T> {
    /// Closed-form pointwise rule.
    Analytic(PointFn<T>),
    /// Coefficients over a mesh's indicator basis; exact at the mesh's own
    /// barycenters (matched by index through the stored barycenter table).
    OnMesh {
        coeffs: Arc<Vec<T>>,
        barycenters: Arc<Vec<[f64; 3]>>,
        normalizers: Arc<Vec<f64>>,
    },
}

/// One eigenpair (λ_k, φ_k), 1-indexed within its model.
#[derive(Clone)]
pub struct EigenPair<T> {
    pub index: usize,
    pub eigenvalue: f64,
    pub(crate) shape: ModeShape<T>,
}

impl<T: Field> EigenPair<T> {
    pub(crate) fn analytic(
        index: usize,
        eigenvalue: f64,
        f: impl Fn([f64; 3]) -> T + Send + Sync + 'static,
    ) -> Self {
        EigenPair {
            index,
            eigenvalue,
            shape: ModeShape::Analytic(Arc::new(f)),
        }
    }

    /// Evaluates the eigenfunction at a point.
    ///
    /// Mesh-borne eigenfunctions are defined through indicator coefficients;
    /// evaluation locates the nearest stored barycenter, which is exact when
    /// querying the mesh the pair was estimated on.
    pub fn eval(&self, p: [f64; 3]) -> T {
        match &self.shape {
            ModeShape::Analytic(f) => f(p),
            ModeShape::OnMesh {
                coeffs,
                barycenters,
                normalizers,
            } => {
                let mut best = 0usize;
                let mut best_d = f64::INFINITY;
                for (i, b) in barycenters.iter().enumerate() {
                    let d = (b[0] - p[0]).powi(2) + (b[1] - p[1]).powi(2) + (b[2] - p[2]).powi(2);
                    if d < best_d {
                        best_d = d;
                        best = i;
                    }
                }
                coeffs[best] * T::from_real(normalizers[best])
            }
        }
    }
}

/// A truncated eigen-expansion of a random field.
#[derive(Clone)]
pub struct EigenModel<T> {
    domain: Domain,
    pairs: Vec<EigenPair<T>>,
    law: CoefficientLaw,
    mean: Option<PointFn<T>>,
    tail: Option<TailRule>,
}

/// Closed-form continuation of the eigenvalue sequence past the stored
/// truncation.
#[derive(Clone, Copy, Debug)]
pub(crate) enum TailRule {
    Brownian,
    Gauss { l_p: f64, l: f64, tau: f64 },
}

impl<T: Field> EigenModel<T> {
    pub(crate) fn new(
        domain: Domain,
        pairs: Vec<EigenPair<T>>,
        law: CoefficientLaw,
        mean: Option<PointFn<T>>,
        tail: Option<TailRule>,
    ) -> Self {
        EigenModel {
            domain,
            pairs,
            law,
            mean,
            tail,
        }
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn law(&self) -> CoefficientLaw {
        self.law
    }

    /// Number of retained modes M.
    pub fn modes(&self) -> usize {
        self.pairs.len()
    }

    pub fn pairs(&self) -> &[EigenPair<T>] {
        &self.pairs
    }

    pub fn pair(&self, k: usize) -> Option<&EigenPair<T>> {
        self.pairs.get(k.checked_sub(1)?)
    }

    /// Retained eigenvalues, in stored (non-increasing) order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.eigenvalue).collect()
    }

    pub fn mean_at(&self, p: [f64; 3]) -> T {
        self.mean.as_ref().map_or_else(T::zero, |f| f(p))
    }

    pub fn has_mean(&self) -> bool {
        self.mean.is_some()
    }

    /// Keeps only the first m modes; the tail rule is preserved so tail sums
    /// still account for everything beyond the new truncation.
    pub fn truncated(&self, m: usize) -> Result<Self> {
        if m > self.pairs.len() {
            return Err(Error::invalid(format!(
                "cannot truncate to {m} modes, model holds {}",
                self.pairs.len()
            )));
        }
        let mut out = self.clone();
        out.pairs.truncate(m);
        Ok(out)
    }

    /// Tail sum Σ_{k > m} λ_k.
    ///
    /// Models with a closed-form eigenvalue family evaluate the infinite tail
    /// analytically; empirical models sum their stored eigenvalues only.
    pub fn truncation_tail(&self, m: usize) -> f64 {
        match self.tail {
            Some(TailRule::Brownian) => brownian::tail(m),
            Some(TailRule::Gauss { l_p, l, tau }) => gauss::tail(m, l_p, l, tau),
            None => self.pairs.iter().skip(m).map(|p| p.eigenvalue).sum(),
        }
    }
}

/// Tail sum of a finite eigenvalue list after its first m entries.
///
/// The list is expected in non-increasing order, as produced by every model
/// constructor in this module.
pub fn truncation_tail(eigenvalues: &[f64], m: usize) -> Result<f64> {
    if m > eigenvalues.len() {
        return Err(Error::invalid(format!(
            "truncation {m} exceeds list length {}",
            eigenvalues.len()
        )));
    }
    if eigenvalues.iter().any(|&l| l < 0.0 || !l.is_finite()) {
        return Err(Error::invalid(
            "eigenvalues must be finite and non-negative",
        ));
    }
    // Small-to-large summation keeps the tail sum accurate.
    Ok(eigenvalues[m..].iter().rev().sum())
}
