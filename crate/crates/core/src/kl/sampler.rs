//! Seeded realization sampling: v(x) = mean(x) + Σ_k √λ_k φ_k(x) Y_k.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::kl::EigenModel;

/// Mixes a master seed with an index into an independent stream seed
/// (SplitMix64 finalizer). Used for per-trial and per-mode streams so that
/// Monte Carlo loops stay reproducible under reordering.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E3779B97F4A7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Evaluates a model's modes at a fixed point set once, then samples
/// realizations cheaply per seed.
pub struct RealizationSampler<T: Field> {
    /// M×P matrix of √λ_k φ_k(x_p).
    scaled_modes: DMatrix<T>,
    mean: DVector<T>,
    law: crate::kl::CoefficientLaw,
}

impl<T: Field> RealizationSampler<T> {
    pub fn new(model: &EigenModel<T>, points: &[[f64; 3]]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("sampler needs at least one point"));
        }
        for &p in points {
            if !model.domain().contains(p) {
                return Err(Error::invalid(format!(
                    "point ({}, {}, {}) lies outside the model domain",
                    p[0], p[1], p[2]
                )));
            }
        }
        let m = model.modes();
        let mut scaled = DMatrix::zeros(m, points.len());
        for (k, pair) in model.pairs().iter().enumerate() {
            let amp = T::from_real(pair.eigenvalue.sqrt());
            for (j, &p) in points.iter().enumerate() {
                scaled[(k, j)] = pair.eval(p) * amp;
            }
        }
        let mean = DVector::from_iterator(points.len(), points.iter().map(|&p| model.mean_at(p)));
        Ok(RealizationSampler {
            scaled_modes: scaled,
            mean,
            law: model.law(),
        })
    }

    pub fn modes(&self) -> usize {
        self.scaled_modes.nrows()
    }

    pub fn points(&self) -> usize {
        self.scaled_modes.ncols()
    }

    /// Coefficient draws Y_1..Y_M for one realization.
    ///
    /// Each mode consumes its own counter-mode stream of the seed, so a
    /// model truncated to fewer modes draws a prefix of the same
    /// coefficients.
    pub fn draws(&self, seed: u64) -> Vec<f64> {
        (1..=self.modes())
            .map(|k| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(k as u64);
                self.law.draw(&mut rng)
            })
            .collect()
    }

    /// Realization from explicit coefficients ordered by mode index.
    pub fn realize(&self, y: &[f64]) -> Result<DVector<T>> {
        if y.len() != self.modes() {
            return Err(Error::SizeMismatch {
                context: "realization coefficients",
                expected: self.modes(),
                got: y.len(),
            });
        }
        let coeff = DVector::from_iterator(y.len(), y.iter().map(|&v| T::from_real(v)));
        // values = meanᵀ + coeffᵀ · scaled_modes, i.e. plain transpose here:
        // the expansion sums √λ φ Y without conjugation.
        Ok(&self.mean + self.scaled_modes.tr_mul(&coeff))
    }

    /// Seeded realization at the sampler's points.
    pub fn sample(&self, seed: u64) -> DVector<T> {
        self.realize(&self.draws(seed)).expect("draws match modes")
    }
}

/// One seeded realization of the model at the given points.
pub fn sample_realization<T: Field>(
    model: &EigenModel<T>,
    points: &[[f64; 3]],
    seed: u64,
) -> Result<Vec<T>> {
    let sampler = RealizationSampler::new(model, points)?;
    Ok(sampler.sample(seed).iter().copied().collect())
}
