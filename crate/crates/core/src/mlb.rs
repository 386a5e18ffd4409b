//! Multilevel orthonormal basis construction.
//!
//! A bottom-up sweep over the kd-tree factors, in every cell, the block of
//! inner products between the model's eigenfunctions and the cell's current
//! functions (leaf indicators, or the children's scaling functions). The
//! SVD right factor V splits those functions into `rank` scaling functions,
//! whose eigen-blocks pass to the parent, and `size - rank` detail
//! functions orthogonal to every eigenfunction. The root's scaling
//! functions span V₀; all detail functions together span its orthogonal
//! complement on the mesh.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::kdtree::KdTree;
use crate::kl::EigenModel;
use crate::mesh::{eigen_inner_products, BoundingBox, IndicatorBasis, SimplicialComplex};

/// Default relative singular-value cutoff separating scaling from detail
/// directions.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// The factored inner-product block of one tree cell.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LocalFactor<T: Field> {
    pub cell: usize,
    /// Number of scaling directions a: singular values above
    /// rank_tol · σ_max.
    pub rank: usize,
    pub singular_values: Vec<f64>,
    /// s×s unitary right factor; column j expresses new function j over the
    /// cell's s input functions.
    right: DMatrix<T>,
    /// Registry positions of the detail columns rank..s.
    detail_positions: Vec<usize>,
}

impl<T: Field> LocalFactor<T> {
    /// Number of input functions s feeding this cell.
    pub fn size(&self) -> usize {
        self.right.ncols()
    }

    pub fn right_factor(&self) -> &DMatrix<T> {
        &self.right
    }

    pub(crate) fn detail_positions(&self) -> &[usize] {
        &self.detail_positions
    }
}

/// Identity of one basis function within the registry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionInfo {
    /// Global id: root scaling functions take 0..root_dim, details follow in
    /// (level, cell, local) order.
    pub id: usize,
    /// Detail level l of W_l; root scaling functions report level 0 through
    /// `FunctionRole` instead.
    pub level: usize,
    pub cell: usize,
    /// Column index within the owning cell's right factor.
    pub local_index: usize,
}

/// What a global function id refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FunctionRole {
    /// Column `local_index` of the root factor, part of the V₀ span.
    RootScaling { local_index: usize },
    /// A detail function ψ with its registry record.
    Detail(FunctionInfo),
}

/// The multilevel orthonormal basis over a mesh partition.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MultilevelBasis<T: Field> {
    tree: KdTree,
    /// One factor per tree node, indexed by node id.
    factors: Vec<LocalFactor<T>>,
    root_dim: usize,
    /// Detail registry sorted by (level, cell, local index).
    details: Vec<FunctionInfo>,
    /// dim W_l per detail level.
    level_counts: Vec<usize>,
    cell_bbox: Vec<BoundingBox>,
    cell_centroid: Vec<[f64; 3]>,
    n: usize,
    rank_tol: f64,
    small_leaf_warning: bool,
}

/// Builds the basis for a model over a meshed domain.
pub fn build_basis<T: Field>(
    tree: KdTree,
    mesh: &SimplicialComplex,
    basis: &IndicatorBasis,
    model: &EigenModel<T>,
    rank_tol: f64,
) -> Result<MultilevelBasis<T>> {
    if mesh.len() != tree.len() {
        return Err(Error::SizeMismatch {
            context: "tree over mesh",
            expected: mesh.len(),
            got: tree.len(),
        });
    }
    let rows = eigen_inner_products(mesh, basis, model)?;
    let extents: Vec<BoundingBox> = (0..mesh.len()).map(|i| mesh.simplex_extent(i)).collect();
    let warn = tree.n0 <= model.modes();
    build_from_parts(tree, rows, rank_tol, &extents, &mesh.barycenters(), warn)
}

/// Builds the basis directly from an M×N eigen-row matrix, with point
/// positions standing in for cell geometry. Intended for synthetic inputs.
pub fn build_basis_from_rows<T: Field>(
    tree: KdTree,
    rows: DMatrix<T>,
    rank_tol: f64,
    positions: &[[f64; 3]],
) -> Result<MultilevelBasis<T>> {
    let extents: Vec<BoundingBox> = positions.iter().map(|&p| BoundingBox::point(p)).collect();
    build_from_parts(tree, rows, rank_tol, &extents, positions, false)
}

fn build_from_parts<T: Field>(
    tree: KdTree,
    rows: DMatrix<T>,
    rank_tol: f64,
    extents: &[BoundingBox],
    centers: &[[f64; 3]],
    small_leaf_warning: bool,
) -> Result<MultilevelBasis<T>> {
    let n = tree.len();
    if rows.ncols() != n || extents.len() != n || centers.len() != n {
        return Err(Error::SizeMismatch {
            context: "eigen rows over tree points",
            expected: n,
            got: rows.ncols(),
        });
    }
    if !(rank_tol > 0.0 && rank_tol < 1.0) {
        return Err(Error::invalid("rank tolerance must lie in (0, 1)"));
    }

    let node_count = tree.nodes.len();
    let mut factors: Vec<Option<LocalFactor<T>>> = (0..node_count).map(|_| None).collect();
    let mut up: Vec<Option<DMatrix<T>>> = (0..node_count).map(|_| None).collect();
    let mut bbox = vec![BoundingBox::empty(); node_count];
    let mut centroid = vec![([0.0f64; 3], 0usize); node_count];
    // (level, cell, local) of every detail column, collected during the
    // sweep and sorted into the registry afterwards.
    let mut raw_details: Vec<(usize, usize, usize)> = Vec::new();

    for level in (0..=tree.depth).rev() {
        let ids = tree.cells_at_level(level)?.to_vec();
        for id in ids {
            let node = tree.node(id);
            let block: DMatrix<T> = if node.is_leaf() {
                let mut b = BoundingBox::empty();
                let mut c = [0.0; 3];
                for &p in &node.points {
                    b.merge(&extents[p]);
                    for a in 0..3 {
                        c[a] += centers[p][a];
                    }
                }
                bbox[id] = b;
                centroid[id] = (c, node.points.len());
                let m = rows.nrows();
                DMatrix::from_fn(m, node.points.len(), |i, j| rows[(i, node.points[j])])
            } else {
                let (l, r) = (node.left.unwrap(), node.right.unwrap());
                let ul = up[l].take().expect("child factored first");
                let ur = up[r].take().expect("child factored first");
                let mut b = bbox[l];
                b.merge(&bbox[r]);
                bbox[id] = b;
                let (cl, nl) = centroid[l];
                let (cr, nr) = centroid[r];
                centroid[id] = (
                    [cl[0] + cr[0], cl[1] + cr[1], cl[2] + cr[2]],
                    nl + nr,
                );
                let mut joined = DMatrix::zeros(ul.nrows(), ul.ncols() + ur.ncols());
                joined.view_mut((0, 0), (ul.nrows(), ul.ncols())).copy_from(&ul);
                joined
                    .view_mut((0, ul.ncols()), (ur.nrows(), ur.ncols()))
                    .copy_from(&ur);
                joined
            };

            let (right, singular_values, rank) = factor_block(&block, rank_tol);
            up[id] = Some(&block * right.columns(0, rank));
            let detail_level = node.level.saturating_sub(1);
            for local in rank..right.ncols() {
                raw_details.push((detail_level, id, local));
            }
            factors[id] = Some(LocalFactor {
                cell: id,
                rank,
                singular_values,
                right,
                detail_positions: Vec::new(),
            });
        }
    }

    let mut factors: Vec<LocalFactor<T>> = factors.into_iter().map(Option::unwrap).collect();
    let root_dim = factors[0].rank;
    raw_details.sort_unstable();
    let level_span = tree.depth.max(1);
    let mut level_counts = vec![0usize; level_span];
    let mut details: Vec<FunctionInfo> = Vec::with_capacity(raw_details.len());
    // detail_positions must align with column order rank..s; (level, cell,
    // local) sorting keeps a cell's columns in ascending local order, so
    // pushing in registry order preserves the alignment.
    for (pos, &(level, cell, local_index)) in raw_details.iter().enumerate() {
        level_counts[level] += 1;
        factors[cell].detail_positions.push(pos);
        details.push(FunctionInfo {
            id: root_dim + pos,
            level,
            cell,
            local_index,
        });
    }
    debug_assert_eq!(root_dim + details.len(), n, "dimension accounting");
    let details = details;

    let cell_centroid = centroid
        .iter()
        .map(|&(c, cnt)| {
            let d = cnt.max(1) as f64;
            [c[0] / d, c[1] / d, c[2] / d]
        })
        .collect();

    Ok(MultilevelBasis {
        tree,
        factors,
        root_dim,
        details,
        level_counts,
        cell_bbox: bbox,
        cell_centroid,
        n,
        rank_tol,
        small_leaf_warning,
    })
}

/// SVD of one cell block: returns the full right factor, singular values,
/// and the rank under the relative cutoff.
///
/// nalgebra's SVD is thin, so a block with fewer rows than columns is
/// zero-padded to square first; the padding changes neither the singular
/// values nor the right factor, but forces the nullspace columns of V to be
/// computed. Zero blocks short-circuit to the identity factor so the
/// construction stays deterministic.
fn factor_block<T: Field>(block: &DMatrix<T>, rank_tol: f64) -> (DMatrix<T>, Vec<f64>, usize) {
    let (m, s) = (block.nrows(), block.ncols());
    if s == 0 {
        return (DMatrix::zeros(0, 0), Vec::new(), 0);
    }
    let frob = block.norm();
    if frob == 0.0 || !frob.is_finite() {
        return (DMatrix::identity(s, s), vec![0.0; s.min(m).max(1)], 0);
    }
    let padded = if m < s {
        let mut p = DMatrix::zeros(s, s);
        p.view_mut((0, 0), (m, s)).copy_from(block);
        p
    } else {
        block.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let right = v_t.adjoint();
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let smax = sv[0];
    let rank = if smax > 0.0 {
        sv.iter().filter(|&&x| x > rank_tol * smax).count()
    } else {
        0
    };
    (right, sv, rank)
}

impl<T: Field> MultilevelBasis<T> {
    pub fn tree(&self) -> &KdTree {
        &self.tree
    }

    /// Fine dimension N.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Dimension of V₀ on the mesh, a_{0,0}.
    pub fn root_dim(&self) -> usize {
        self.root_dim
    }

    /// Total number of detail functions.
    pub fn detail_count(&self) -> usize {
        self.details.len()
    }

    /// Detail registry in (level, cell, local) order; entry i has global id
    /// root_dim + i.
    pub fn details(&self) -> &[FunctionInfo] {
        &self.details
    }

    /// dim W_l for l = 0..detail levels.
    pub fn level_counts(&self) -> &[usize] {
        &self.level_counts
    }

    pub fn factor(&self, cell: usize) -> &LocalFactor<T> {
        &self.factors[cell]
    }

    pub fn rank_tol(&self) -> f64 {
        self.rank_tol
    }

    /// True when the leaf capacity did not exceed the model's mode count;
    /// leaves then factor blocks with no nullspace margin.
    pub fn small_leaf_warning(&self) -> bool {
        self.small_leaf_warning
    }

    /// Resolves a global function id.
    pub fn locate(&self, id: usize) -> Result<FunctionRole> {
        if id < self.root_dim {
            Ok(FunctionRole::RootScaling { local_index: id })
        } else {
            self.details
                .get(id - self.root_dim)
                .map(|&info| FunctionRole::Detail(info))
                .ok_or(Error::UnknownFunction(id))
        }
    }

    fn cell_and_column(&self, id: usize) -> Result<(usize, usize)> {
        Ok(match self.locate(id)? {
            FunctionRole::RootScaling { local_index } => (0, local_index),
            FunctionRole::Detail(info) => (info.cell, info.local_index),
        })
    }

    /// Expands one basis function to its coefficients over the fine
    /// indicator basis.
    pub fn densify(&self, id: usize) -> Result<DVector<T>> {
        let (cell, column) = self.cell_and_column(id)?;
        let mut out = DVector::zeros(self.n);
        let w = self.factors[cell].right.column(column).clone_owned();
        self.expand(cell, &w, &mut out);
        Ok(out)
    }

    /// Scatters a local coefficient vector over a cell's input functions
    /// down the tree into fine coefficients.
    fn expand(&self, cell: usize, w: &DVector<T>, out: &mut DVector<T>) {
        let node = self.tree.node(cell);
        if node.is_leaf() {
            for (j, &p) in node.points.iter().enumerate() {
                out[p] += w[j];
            }
            return;
        }
        let (l, r) = (node.left.unwrap(), node.right.unwrap());
        let (fl, fr) = (&self.factors[l], &self.factors[r]);
        let wl = fl.right.columns(0, fl.rank) * w.rows(0, fl.rank);
        let wr = fr.right.columns(0, fr.rank) * w.rows(fl.rank, fr.rank);
        self.expand(l, &wl, out);
        self.expand(r, &wr, out);
    }

    /// Fine-simplex support of a function: the owning cell's point set
    /// (sorted) and its bounding box.
    pub fn support_of(&self, id: usize) -> Result<(Vec<usize>, BoundingBox)> {
        let (cell, _) = self.cell_and_column(id)?;
        let mut pts = self.tree.cell_points(cell);
        pts.sort_unstable();
        Ok((pts, self.cell_bbox[cell]))
    }

    /// Mean position of the owning cell's points.
    pub fn centroid_of(&self, id: usize) -> Result<[f64; 3]> {
        let (cell, _) = self.cell_and_column(id)?;
        Ok(self.cell_centroid[cell])
    }

    /// (root dimension, detail counts per level); the parts sum to N.
    pub fn dimension_summary(&self) -> (usize, Vec<usize>) {
        (self.root_dim, self.level_counts.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kdtree::make_tree;
    use crate::kl::brownian::brownian_model;
    use crate::mesh::{uniform_interval_mesh, Mode};

    fn interval_setup(
        n: usize,
        modes: usize,
        n0: usize,
    ) -> (MultilevelBasis<f64>, DMatrix<f64>) {
        let mesh = uniform_interval_mesh(0.0, 1.0, n).unwrap();
        let basis = IndicatorBasis::new(&mesh, Mode::Continuous);
        let model = brownian_model(modes).unwrap();
        let rows = eigen_inner_products(&mesh, &basis, &model).unwrap();
        let tree = make_tree(&mesh.barycenters(), n0).unwrap();
        let mlb = build_basis(tree, &mesh, &basis, &model, DEFAULT_RANK_TOL).unwrap();
        (mlb, rows)
    }

    #[test]
    fn constant_mode_on_four_cells() {
        // One normalized-constant eigenfunction over 4 cells with leaf
        // capacity 2: one root scaling function and three zero-mean details.
        let mesh = uniform_interval_mesh(0.0, 1.0, 4).unwrap();
        let tree = make_tree(&mesh.barycenters(), 2).unwrap();
        let rows = DMatrix::from_element(1, 4, 0.5);
        let mlb =
            build_basis_from_rows(tree, rows, DEFAULT_RANK_TOL, &mesh.barycenters()).unwrap();
        assert_eq!(mlb.root_dim(), 1);
        assert_eq!(mlb.detail_count(), 3);
        for info in mlb.details() {
            let dense = mlb.densify(info.id).unwrap();
            let mean: f64 = dense.iter().sum();
            assert!(mean.abs() < 1e-12, "detail {} has mean {mean}", info.id);
            assert!((dense.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dimension_identity_holds() {
        for (n, m, n0) in [(31usize, 3usize, 4usize), (64, 3, 4), (100, 5, 7), (16, 1, 1)] {
            let (mlb, _) = interval_setup(n, m, n0);
            let (root, levels) = mlb.dimension_summary();
            assert_eq!(root + levels.iter().sum::<usize>(), n);
            assert_eq!(root, m, "independent eigenfunctions span M directions");
        }
        // N = 64, M = 3 leaves 61 details.
        let (mlb, _) = interval_setup(64, 3, 4);
        assert_eq!(mlb.detail_count(), 61);
    }

    #[test]
    fn full_rank_model_has_no_details() {
        let (mlb, _) = interval_setup(8, 8, 2);
        assert_eq!(mlb.root_dim(), 8);
        assert_eq!(mlb.detail_count(), 0);
    }

    #[test]
    fn densified_family_is_orthonormal_and_kills_eigenrows() {
        let (mlb, rows) = interval_setup(48, 4, 5);
        let n = mlb.len();
        let mut dense = DMatrix::<f64>::zeros(n, n);
        for id in 0..n {
            dense.set_column(id, &mlb.densify(id).unwrap());
        }
        let gram = dense.tr_mul(&dense);
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((gram[(i, j)] - want).abs());
            }
        }
        assert!(dev < 1e-10, "gram deviation {dev}");
        // Every detail annihilates every eigen row.
        let cross = &rows * dense.columns(mlb.root_dim(), mlb.detail_count());
        assert!(cross.amax() < 1e-10);
    }

    #[test]
    fn supports_nest_and_details_are_local() {
        let (mlb, _) = interval_setup(32, 2, 3);
        // Root scaling support covers everything.
        let (pts, _) = mlb.support_of(0).unwrap();
        assert_eq!(pts.len(), 32);
        for info in mlb.details() {
            let (pts, bbox) = mlb.support_of(info.id).unwrap();
            let dense = mlb.densify(info.id).unwrap();
            for i in 0..32 {
                if !pts.contains(&i) {
                    assert_eq!(dense[i], 0.0, "function {} leaks", info.id);
                }
            }
            let c = mlb.centroid_of(info.id).unwrap();
            assert!(bbox.contains(c));
        }
        assert!(mlb.densify(40).is_err());
        assert!(matches!(
            mlb.locate(0),
            Ok(FunctionRole::RootScaling { local_index: 0 })
        ));
    }

    #[test]
    fn registry_orders_by_level_then_cell() {
        let (mlb, _) = interval_setup(40, 3, 4);
        let d = mlb.details();
        for w in d.windows(2) {
            let a = (w[0].level, w[0].cell, w[0].local_index);
            let b = (w[1].level, w[1].cell, w[1].local_index);
            assert!(a < b, "registry must be strictly sorted");
        }
        for (i, info) in d.iter().enumerate() {
            assert_eq!(info.id, mlb.root_dim() + i);
        }
        let counts = mlb.level_counts();
        assert_eq!(counts.iter().sum::<usize>(), mlb.detail_count());
    }

    #[test]
    fn zero_rows_make_everything_detail() {
        let mesh = uniform_interval_mesh(0.0, 1.0, 8).unwrap();
        let tree = make_tree(&mesh.barycenters(), 2).unwrap();
        let rows = DMatrix::<f64>::zeros(2, 8);
        let mlb =
            build_basis_from_rows(tree, rows, DEFAULT_RANK_TOL, &mesh.barycenters()).unwrap();
        assert_eq!(mlb.root_dim(), 0);
        assert_eq!(mlb.detail_count(), 8);
        // Zero blocks factor through the identity: the functions are the
        // indicators themselves.
        let dense = mlb.densify(0).unwrap();
        assert_eq!(dense.iter().filter(|x| **x != 0.0).count(), 1);
    }

    #[test]
    fn complex_rows_build_a_unitary_family() {
        use num_complex::Complex;
        let mesh = uniform_interval_mesh(0.0, 1.0, 12).unwrap();
        let tree = make_tree(&mesh.barycenters(), 3).unwrap();
        let rows = DMatrix::from_fn(2, 12, |i, j| {
            Complex::new(
                ((i + 2 * j) as f64 * 0.31).sin(),
                ((i * 5 + j) as f64 * 0.17).cos(),
            )
        });
        let mlb = build_basis_from_rows(
            tree,
            rows.clone(),
            DEFAULT_RANK_TOL,
            &mesh.barycenters(),
        )
        .unwrap();
        assert_eq!(mlb.root_dim(), 2);
        let n = mlb.len();
        let mut dense = DMatrix::<Complex<f64>>::zeros(n, n);
        for id in 0..n {
            dense.set_column(id, &mlb.densify(id).unwrap());
        }
        let gram = dense.adjoint() * &dense;
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((gram[(i, j)] - Complex::new(want, 0.0)).norm() < 1e-10);
            }
        }
        let cross = &rows * dense.columns(2, n - 2);
        assert!(cross.camax() < 1e-10);
    }

    #[test]
    fn rank_tolerance_validation() {
        let mesh = uniform_interval_mesh(0.0, 1.0, 4).unwrap();
        let tree = make_tree(&mesh.barycenters(), 2).unwrap();
        let rows = DMatrix::<f64>::zeros(1, 4);
        for bad in [0.0, 1.0, -0.5, 2.0] {
            let t = tree.clone();
            assert!(build_basis_from_rows(t, rows.clone(), bad, &mesh.barycenters()).is_err());
        }
    }
}
