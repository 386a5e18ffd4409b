//! Forward and inverse multilevel transforms.
//!
//! The forward transform walks the tree once, applying each cell's adjoint
//! right factor to the coefficients entering the cell: details split off,
//! scalings continue upward. Cost is O(N·n) for a depth-n tree since every
//! level touches at most N coefficients. The inverse runs the same cascade
//! in reverse with the factors themselves, and a dense path computes the
//! same coefficients as explicit inner products for verification.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::mlb::{FunctionInfo, MultilevelBasis};

/// Coefficients of a signal over a multilevel basis: the V₀ block plus all
/// detail coefficients in registry order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultilevelCoefficients<T: Field> {
    /// Root scaling coefficients, length a_{0,0}.
    pub root: DVector<T>,
    /// Detail coefficients; entry i belongs to the function with global id
    /// root.len() + i.
    pub details: DVector<T>,
}

impl<T: Field> MultilevelCoefficients<T> {
    pub fn zeros(root_dim: usize, detail_count: usize) -> Self {
        MultilevelCoefficients {
            root: DVector::zeros(root_dim),
            details: DVector::zeros(detail_count),
        }
    }

    /// Total coefficient count, equal to the fine dimension N.
    pub fn len(&self) -> usize {
        self.root.len() + self.details.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coefficient by global function id.
    pub fn get(&self, id: usize) -> Option<T> {
        if id < self.root.len() {
            Some(self.root[id])
        } else {
            self.details.get(id - self.root.len()).copied()
        }
    }

    /// Σ|coefficient|² over root and details together.
    pub fn energy(&self) -> f64 {
        self.root.iter().map(|x| x.modulus_squared()).sum::<f64>()
            + self.details.iter().map(|x| x.modulus_squared()).sum::<f64>()
    }

    /// Σ|d|² over detail coefficients only.
    pub fn detail_energy(&self) -> f64 {
        self.details.iter().map(|x| x.modulus_squared()).sum()
    }

    /// Copy with the root scaling block zeroed; feeding it through the
    /// inverse reconstructs the signal's component orthogonal to V₀.
    pub fn details_only(&self) -> Self {
        MultilevelCoefficients {
            root: DVector::zeros(self.root.len()),
            details: self.details.clone(),
        }
    }
}

impl<T: Field> MultilevelBasis<T> {
    fn check_fine_len(&self, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::SizeMismatch {
                context: "fine coefficient vector",
                expected: self.len(),
                got: len,
            });
        }
        Ok(())
    }

    /// Fast transform of fine indicator coefficients into multilevel
    /// coefficients.
    pub fn forward(&self, fine: &DVector<T>) -> Result<MultilevelCoefficients<T>> {
        self.check_fine_len(fine.len())?;
        let mut details = DVector::zeros(self.detail_count());
        let root = self.forward_cell(0, fine, &mut details);
        Ok(MultilevelCoefficients { root, details })
    }

    /// Applies one cell's adjoint factor; returns the scaling block for the
    /// parent.
    fn forward_cell(
        &self,
        cell: usize,
        fine: &DVector<T>,
        details: &mut DVector<T>,
    ) -> DVector<T> {
        let node = self.tree().node(cell);
        let incoming: DVector<T> = if node.is_leaf() {
            DVector::from_iterator(node.points.len(), node.points.iter().map(|&p| fine[p]))
        } else {
            let left = self.forward_cell(node.left.unwrap(), fine, details);
            let right = self.forward_cell(node.right.unwrap(), fine, details);
            let mut g = DVector::zeros(left.len() + right.len());
            g.rows_mut(0, left.len()).copy_from(&left);
            g.rows_mut(left.len(), right.len()).copy_from(&right);
            g
        };
        let factor = self.factor(cell);
        let local = factor.right_factor().ad_mul(&incoming);
        for (j, &pos) in factor.detail_positions().iter().enumerate() {
            details[pos] = local[factor.rank + j];
        }
        local.rows(0, factor.rank).into_owned()
    }

    /// Reconstructs fine coefficients from multilevel coefficients.
    pub fn inverse(&self, mc: &MultilevelCoefficients<T>) -> Result<DVector<T>> {
        if mc.root.len() != self.root_dim() || mc.details.len() != self.detail_count() {
            return Err(Error::SizeMismatch {
                context: "multilevel coefficient blocks",
                expected: self.len(),
                got: mc.len(),
            });
        }
        let mut fine = DVector::zeros(self.len());
        self.inverse_cell(0, &mc.root, &mc.details, &mut fine);
        Ok(fine)
    }

    fn inverse_cell(
        &self,
        cell: usize,
        scaling: &DVector<T>,
        details: &DVector<T>,
        fine: &mut DVector<T>,
    ) {
        let factor = self.factor(cell);
        let mut local = DVector::zeros(factor.size());
        local.rows_mut(0, factor.rank).copy_from(scaling);
        for (j, &pos) in factor.detail_positions().iter().enumerate() {
            local[factor.rank + j] = details[pos];
        }
        let outgoing = factor.right_factor() * local;
        let node = self.tree().node(cell);
        if node.is_leaf() {
            for (j, &p) in node.points.iter().enumerate() {
                fine[p] = outgoing[j];
            }
            return;
        }
        let (l, r) = (node.left.unwrap(), node.right.unwrap());
        let rank_l = self.factor(l).rank;
        let rank_r = self.factor(r).rank;
        let left = outgoing.rows(0, rank_l).into_owned();
        let right = outgoing.rows(rank_l, rank_r).into_owned();
        self.inverse_cell(l, &left, details, fine);
        self.inverse_cell(r, &right, details, fine);
    }

    /// O(N²) oracle: every coefficient as an explicit inner product with the
    /// densified basis function.
    pub fn dense_forward(&self, fine: &DVector<T>) -> Result<MultilevelCoefficients<T>> {
        self.check_fine_len(fine.len())?;
        let mut mc = MultilevelCoefficients::zeros(self.root_dim(), self.detail_count());
        for id in 0..self.len() {
            let psi = self.densify(id)?;
            let value = psi.dotc(fine);
            if id < self.root_dim() {
                mc.root[id] = value;
            } else {
                mc.details[id - self.root_dim()] = value;
            }
        }
        Ok(mc)
    }

    /// Detail coefficients grouped with their registry records.
    pub fn labeled_details<'a>(
        &'a self,
        mc: &'a MultilevelCoefficients<T>,
    ) -> impl Iterator<Item = (&'a FunctionInfo, T)> + 'a {
        self.details().iter().zip(mc.details.iter().copied())
    }
}
