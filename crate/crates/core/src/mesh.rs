//! Simplicial meshes, indicator bases, and one-point quadrature projections.
//!
//! Signals live in the span of per-cell indicator functions
//! χ_i = c_i · 1_{S_i}; with c_i = measure(S_i)^{-1/2} these are orthonormal
//! in L², and inner products against them reduce to one-point quadrature at
//! the cell barycenter. A purely discrete mode (c_i = 1, unit cell weight)
//! covers point-cloud data where no geometric measure is wanted.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::kl::{Domain, EigenModel, ModeShape};

/// Axis-aligned bounding box in R^3.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl BoundingBox {
    pub fn empty() -> Self {
        BoundingBox {
            min: [f64::INFINITY; 3],
            max: [f64::NEG_INFINITY; 3],
        }
    }

    pub fn point(p: [f64; 3]) -> Self {
        BoundingBox { min: p, max: p }
    }

    pub fn include(&mut self, p: [f64; 3]) {
        for a in 0..3 {
            self.min[a] = self.min[a].min(p[a]);
            self.max[a] = self.max[a].max(p[a]);
        }
    }

    pub fn merge(&mut self, other: &BoundingBox) {
        self.include(other.min);
        self.include(other.max);
    }

    pub fn center(&self) -> [f64; 3] {
        [
            0.5 * (self.min[0] + self.max[0]),
            0.5 * (self.min[1] + self.max[1]),
            0.5 * (self.min[2] + self.max[2]),
        ]
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        (0..3).all(|a| p[a] >= self.min[a] && p[a] <= self.max[a])
    }
}

/// One k-simplex: vertex indices into the parent complex, with its
/// barycenter and measure cached.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Simplex {
    pub vertices: Vec<usize>,
    pub barycenter: [f64; 3],
    pub measure: f64,
}

/// A mesh of equal-dimension simplices.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimplicialComplex {
    pub vertices: Vec<[f64; 3]>,
    pub simplices: Vec<Simplex>,
    /// Dimension k of every simplex (0 = weighted points, 1 = segments,
    /// 2 = triangles).
    pub simplex_dim: usize,
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

impl SimplicialComplex {
    /// Builds a complex of segments (k = 1) or triangles (k = 2) from vertex
    /// coordinates and per-simplex vertex lists; barycenters and measures
    /// come from the geometry.
    pub fn new(vertices: Vec<[f64; 3]>, cells: Vec<Vec<usize>>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::invalid("mesh needs at least one simplex"));
        }
        let k = cells[0].len().checked_sub(1).unwrap_or(0);
        if !(1..=2).contains(&k) {
            return Err(Error::invalid(
                "simplex lists must hold 2 (segment) or 3 (triangle) vertices; \
                 use with_weighted_points for point clouds",
            ));
        }
        if vertices
            .iter()
            .any(|v| v.iter().any(|c| !c.is_finite()))
        {
            return Err(Error::invalid("vertex coordinates must be finite"));
        }
        let mut simplices = Vec::with_capacity(cells.len());
        for cell in &cells {
            if cell.len() != k + 1 {
                return Err(Error::invalid("mixed simplex dimensions"));
            }
            if cell.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::invalid("simplex vertex index out of range"));
            }
            let pts: Vec<[f64; 3]> = cell.iter().map(|&v| vertices[v]).collect();
            let mut bary = [0.0; 3];
            for p in &pts {
                for a in 0..3 {
                    bary[a] += p[a] / pts.len() as f64;
                }
            }
            let measure = match k {
                1 => norm(sub(pts[1], pts[0])),
                _ => 0.5 * norm(cross(sub(pts[1], pts[0]), sub(pts[2], pts[0]))),
            };
            if measure <= 0.0 {
                return Err(Error::invalid("degenerate simplex with zero measure"));
            }
            simplices.push(Simplex {
                vertices: cell.clone(),
                barycenter: bary,
                measure,
            });
        }
        let complex = SimplicialComplex {
            vertices,
            simplices,
            simplex_dim: k,
        };
        complex.check_distinct_barycenters()?;
        Ok(complex)
    }

    /// Builds a 0-dimensional complex from points with explicit weights,
    /// e.g. the dual of a triangulation where each point stands for an
    /// equal-area patch.
    pub fn with_weighted_points(points: Vec<[f64; 3]>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != weights.len() {
            return Err(Error::SizeMismatch {
                context: "weighted point mesh",
                expected: points.len(),
                got: weights.len(),
            });
        }
        if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::invalid("point weights must be positive"));
        }
        if points.iter().any(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(Error::invalid("point coordinates must be finite"));
        }
        let simplices = points
            .iter()
            .zip(&weights)
            .enumerate()
            .map(|(i, (&p, &w))| Simplex {
                vertices: vec![i],
                barycenter: p,
                measure: w,
            })
            .collect();
        let complex = SimplicialComplex {
            vertices: points,
            simplices,
            simplex_dim: 0,
        };
        complex.check_distinct_barycenters()?;
        Ok(complex)
    }

    fn check_distinct_barycenters(&self) -> Result<()> {
        let mut order: Vec<usize> = (0..self.simplices.len()).collect();
        order.sort_unstable_by(|&i, &j| {
            let a = self.simplices[i].barycenter;
            let b = self.simplices[j].barycenter;
            a.partial_cmp(&b).expect("finite coordinates")
        });
        for w in order.windows(2) {
            if self.simplices[w[0]].barycenter == self.simplices[w[1]].barycenter {
                return Err(Error::invalid(format!(
                    "simplices {} and {} share a barycenter",
                    w[0], w[1]
                )));
            }
        }
        Ok(())
    }

    /// Number of cells N.
    pub fn len(&self) -> usize {
        self.simplices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    pub fn barycenters(&self) -> Vec<[f64; 3]> {
        self.simplices.iter().map(|s| s.barycenter).collect()
    }

    /// Bounding box of one simplex's vertices.
    pub fn simplex_extent(&self, i: usize) -> BoundingBox {
        let mut b = BoundingBox::empty();
        for &v in &self.simplices[i].vertices {
            b.include(self.vertices[v]);
        }
        b
    }

    /// Verifies pairwise intersections are proper faces: two distinct
    /// simplices may share at most k vertices. Quadratic; intended for
    /// small meshes and tests.
    pub fn validate_faces(&self) -> Result<()> {
        for i in 0..self.simplices.len() {
            for j in (i + 1)..self.simplices.len() {
                let a = &self.simplices[i].vertices;
                let b = &self.simplices[j].vertices;
                let shared = a.iter().filter(|v| b.contains(v)).count();
                if shared > self.simplex_dim {
                    return Err(Error::invalid(format!(
                        "simplices {i} and {j} overlap beyond a shared face"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Domain this mesh plausibly discretizes, inferred from its geometry.
    pub fn domain_hint(&self) -> Option<Domain> {
        let on_axis = self
            .vertices
            .iter()
            .all(|v| v[1] == 0.0 && v[2] == 0.0);
        if on_axis {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for v in &self.vertices {
                lo = lo.min(v[0]);
                hi = hi.max(v[0]);
            }
            return Some(Domain::Interval { a: lo, b: hi });
        }
        let unit = self
            .simplices
            .iter()
            .all(|s| (norm(s.barycenter) - 1.0).abs() < 1e-3);
        unit.then_some(Domain::UnitSphere)
    }
}

/// Normalization mode of the indicator basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// χ_i = measure^{-1/2} 1_{S_i}; L²-orthonormal, quadrature weights
    /// √measure.
    Continuous,
    /// χ_i = 1_{S_i} with unit weights; plain Euclidean coefficients.
    Discrete,
}

/// The orthonormal indicator basis over a mesh.
#[derive(Clone, Debug)]
pub struct IndicatorBasis {
    pub mode: Mode,
    /// c_i, the height of χ_i over cell i.
    pub normalizers: Vec<f64>,
    /// Quadrature weight per cell: evaluating ⟨f, χ_i⟩ by one-point
    /// quadrature multiplies f(barycenter_i) by this.
    pub weights: Vec<f64>,
}

impl IndicatorBasis {
    pub fn new(mesh: &SimplicialComplex, mode: Mode) -> Self {
        let (normalizers, weights) = match mode {
            Mode::Continuous => {
                let n = mesh
                    .simplices
                    .iter()
                    .map(|s| 1.0 / s.measure.sqrt())
                    .collect();
                let w = mesh.simplices.iter().map(|s| s.measure.sqrt()).collect();
                (n, w)
            }
            Mode::Discrete => (vec![1.0; mesh.len()], vec![1.0; mesh.len()]),
        };
        IndicatorBasis {
            mode,
            normalizers,
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.normalizers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.normalizers.is_empty()
    }
}

/// Projects pointwise signal values (sampled at barycenters) onto the
/// indicator basis: coefficient i is f(x_i) · weight_i.
pub fn project_signal<T: Field>(
    mesh: &SimplicialComplex,
    basis: &IndicatorBasis,
    values: &[T],
) -> Result<DVector<T>> {
    if values.len() != mesh.len() || basis.len() != mesh.len() {
        return Err(Error::SizeMismatch {
            context: "signal projection",
            expected: mesh.len(),
            got: values.len(),
        });
    }
    Ok(DVector::from_iterator(
        values.len(),
        values
            .iter()
            .zip(&basis.weights)
            .map(|(&v, &w)| v * T::from_real(w)),
    ))
}

/// Projects a pointwise function by sampling it at the barycenters.
pub fn project_fn<T: Field>(
    mesh: &SimplicialComplex,
    basis: &IndicatorBasis,
    f: impl Fn([f64; 3]) -> T,
) -> DVector<T> {
    DVector::from_iterator(
        mesh.len(),
        mesh.simplices
            .iter()
            .zip(&basis.weights)
            .map(|(s, &w)| f(s.barycenter) * T::from_real(w)),
    )
}

/// The M×N matrix of inner products ⟨φ_i, χ_j⟩ (conjugation on the first
/// slot), evaluated by one-point quadrature for analytic eigenfunctions and
/// exactly for eigenfunctions stored over this mesh.
pub fn eigen_inner_products<T: Field>(
    mesh: &SimplicialComplex,
    basis: &IndicatorBasis,
    model: &EigenModel<T>,
) -> Result<DMatrix<T>> {
    let n = mesh.len();
    if basis.len() != n {
        return Err(Error::SizeMismatch {
            context: "eigen inner products",
            expected: n,
            got: basis.len(),
        });
    }
    let m = model.modes();
    let mut out = DMatrix::zeros(m, n);
    for (i, pair) in model.pairs().iter().enumerate() {
        match &pair.shape {
            ModeShape::Analytic(f) => {
                for (j, s) in mesh.simplices.iter().enumerate() {
                    out[(i, j)] = f(s.barycenter).conjugate() * T::from_real(basis.weights[j]);
                }
            }
            ModeShape::OnMesh { coeffs, .. } => {
                if coeffs.len() != n {
                    return Err(Error::SizeMismatch {
                        context: "mesh-borne eigenfunction",
                        expected: n,
                        got: coeffs.len(),
                    });
                }
                for (j, &c) in coeffs.iter().enumerate() {
                    out[(i, j)] = c.conjugate();
                }
            }
        }
    }
    Ok(out)
}

/// Uniform mesh of n segments on [a, b].
pub fn uniform_interval_mesh(a: f64, b: f64, n: usize) -> Result<SimplicialComplex> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::invalid("interval endpoints must satisfy a < b"));
    }
    if n == 0 {
        return Err(Error::invalid("mesh needs at least one cell"));
    }
    let h = (b - a) / n as f64;
    let vertices: Vec<[f64; 3]> = (0..=n).map(|i| [a + i as f64 * h, 0.0, 0.0]).collect();
    let cells = (0..n).map(|i| vec![i, i + 1]).collect();
    SimplicialComplex::new(vertices, cells)
}

/// Icosphere sampling of the unit sphere: an icosahedron subdivided
/// `subdivisions` times, yielding 10·4^s + 2 vertices treated as a dual
/// point cloud with equal weights summing to the sphere area 4π.
pub fn icosphere(subdivisions: usize) -> Result<SimplicialComplex> {
    if subdivisions > 8 {
        return Err(Error::invalid("subdivision level capped at 8"));
    }
    let t = (1.0 + 5.0_f64.sqrt()) / 2.0;
    let mut verts: Vec<[f64; 3]> = vec![
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    for v in &mut verts {
        let r = norm(*v);
        *v = [v[0] / r, v[1] / r, v[2] / r];
    }
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    use std::collections::HashMap;
    for _ in 0..subdivisions {
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let mut mid = |i: usize, j: usize, verts: &mut Vec<[f64; 3]>| {
                let key = (i.min(j), i.max(j));
                *midpoint.entry(key).or_insert_with(|| {
                    let p = [
                        0.5 * (verts[i][0] + verts[j][0]),
                        0.5 * (verts[i][1] + verts[j][1]),
                        0.5 * (verts[i][2] + verts[j][2]),
                    ];
                    let r = norm(p);
                    verts.push([p[0] / r, p[1] / r, p[2] / r]);
                    verts.len() - 1
                })
            };
            let ab = mid(a, b, &mut verts);
            let bc = mid(b, c, &mut verts);
            let ca = mid(c, a, &mut verts);
            next.push([a, ab, ca]);
            next.push([b, bc, ab]);
            next.push([c, ca, bc]);
            next.push([ab, bc, ca]);
        }
        faces = next;
    }
    let count = verts.len();
    let weight = 4.0 * PI / count as f64;
    SimplicialComplex::with_weighted_points(verts, vec![weight; count])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_mesh_has_exact_cells() {
        let mesh = uniform_interval_mesh(0.0, 1.0, 4).unwrap();
        assert_eq!(mesh.len(), 4);
        assert_eq!(mesh.simplex_dim, 1);
        for (i, s) in mesh.simplices.iter().enumerate() {
            assert!((s.measure - 0.25).abs() < 1e-15);
            assert!((s.barycenter[0] - (0.125 + 0.25 * i as f64)).abs() < 1e-15);
        }
        mesh.validate_faces().unwrap();
        assert_eq!(
            mesh.domain_hint(),
            Some(Domain::Interval { a: 0.0, b: 1.0 })
        );
        assert!(uniform_interval_mesh(1.0, 0.0, 4).is_err());
        assert!(uniform_interval_mesh(0.0, 1.0, 0).is_err());
    }

    #[test]
    fn continuous_indicators_are_orthonormal() {
        let mesh = uniform_interval_mesh(0.0, 2.0, 5).unwrap();
        let basis = IndicatorBasis::new(&mesh, Mode::Continuous);
        for (i, s) in mesh.simplices.iter().enumerate() {
            // ∫ χ_i² = c_i² · measure = 1.
            let v = basis.normalizers[i] * basis.normalizers[i] * s.measure;
            assert!((v - 1.0).abs() < 1e-14);
            assert!((basis.weights[i] - s.measure.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn projection_reproduces_piecewise_constants() {
        let mesh = uniform_interval_mesh(0.0, 1.0, 8).unwrap();
        let basis = IndicatorBasis::new(&mesh, Mode::Continuous);
        // f = Σ a_i χ_i sampled at barycenters projects back to a_i.
        let a: Vec<f64> = (0..8).map(|i| (i as f64 * 0.7).sin()).collect();
        let values: Vec<f64> = mesh
            .simplices
            .iter()
            .enumerate()
            .map(|(i, _)| a[i] * basis.normalizers[i])
            .collect();
        let c = project_signal(&mesh, &basis, &values).unwrap();
        for i in 0..8 {
            assert!((c[i] - a[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn icosphere_counts_and_geometry() {
        let mesh = icosphere(0).unwrap();
        assert_eq!(mesh.len(), 12);
        let mesh = icosphere(2).unwrap();
        assert_eq!(mesh.len(), 162);
        let total: f64 = mesh.simplices.iter().map(|s| s.measure).sum();
        assert!((total - 4.0 * PI).abs() < 1e-10);
        for s in &mesh.simplices {
            assert!((norm(s.barycenter) - 1.0).abs() < 1e-12);
        }
        assert_eq!(mesh.domain_hint(), Some(Domain::UnitSphere));
        assert!(icosphere(9).is_err());
    }

    #[test]
    fn icosphere_five_matches_demo_size() {
        let mesh = icosphere(5).unwrap();
        assert_eq!(mesh.len(), 10_242);
    }

    #[test]
    fn duplicate_barycenters_are_rejected() {
        let pts = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]];
        let got = SimplicialComplex::with_weighted_points(pts, vec![1.0; 3]);
        assert!(got.is_err());
    }

    #[test]
    fn face_validation_flags_duplicate_segments() {
        let verts = vec![[0.0; 3], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]];
        // Same segment listed twice shares 2 > k vertices.
        let bad = SimplicialComplex::new(verts, vec![vec![0, 1], vec![1, 0], vec![1, 2]]);
        // Construction succeeds structurally but barycenters collide.
        assert!(bad.is_err());
    }
}
