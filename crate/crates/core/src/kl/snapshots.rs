//! Empirical eigenpairs from sample realizations (method of snapshots).

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::kl::{CoefficientLaw, EigenModel, EigenPair, ModeShape};
use crate::mesh::{IndicatorBasis, SimplicialComplex};

/// Relative eigenvalue threshold below which trailing modes are treated as
/// numerical nullspace.
const NULL_TOL: f64 = 1e-13;

/// Top-m eigenpairs of the empirical covariance of mean-centered samples.
///
/// Samples are coefficient vectors over the mesh's indicator basis. With S
/// samples of length N, the S×S sample Gram matrix is diagonalized when
/// S ≤ N (method of snapshots) and the N×N covariance otherwise; both carry
/// the 1/S divisor, so duplicated samples leave the spectrum unchanged.
/// Eigenvalues come back non-increasing and clamped at zero; eigenvectors
/// are orthonormal, with modes below the numerical rank completed by
/// Gram-Schmidt so the returned family is always an orthonormal set.
pub fn snapshot_eigenpairs(
    mesh: &SimplicialComplex,
    basis: &IndicatorBasis,
    samples: &[Vec<f64>],
    m: usize,
) -> Result<Vec<EigenPair<f64>>> {
    let n = mesh.len();
    let s = samples.len();
    if m == 0 || m > n {
        return Err(Error::invalid(format!(
            "requested {m} modes from an {n}-cell mesh"
        )));
    }
    if s == 0 {
        return Err(Error::invalid("no samples given"));
    }
    for row in samples {
        if row.len() != n {
            return Err(Error::SizeMismatch {
                context: "snapshot sample",
                expected: n,
                got: row.len(),
            });
        }
    }
    let mut mean = DVector::<f64>::zeros(n);
    for row in samples {
        mean += DVector::from_column_slice(row);
    }
    mean /= s as f64;
    let mut a = DMatrix::<f64>::zeros(n, s);
    for (j, row) in samples.iter().enumerate() {
        for i in 0..n {
            a[(i, j)] = row[i] - mean[i];
        }
    }

    let (mut eigenvalues, mut vectors) = if s <= n {
        // Gram route: G = AᵀA/S, then lift a_i to φ_i = A a_i / ‖A a_i‖.
        let gram = a.tr_mul(&a) / s as f64;
        let (vals, vecs) = sorted_symmetric_eigen(gram);
        let lifted: Vec<DVector<f64>> = (0..m.min(vals.len()))
            .map(|i| a.clone() * vecs.column(i).clone_owned())
            .collect();
        (vals, lifted)
    } else {
        // Covariance route: C = AAᵀ/S directly.
        let cov = &a * a.transpose() / s as f64;
        let (vals, vecs) = sorted_symmetric_eigen(cov);
        let cols = (0..m).map(|i| vecs.column(i).clone_owned()).collect();
        (vals, cols)
    };
    eigenvalues.truncate(m);
    while eigenvalues.len() < m {
        eigenvalues.push(0.0);
    }
    for v in &mut eigenvalues {
        *v = v.max(0.0);
    }

    let scale = eigenvalues.first().copied().unwrap_or(0.0);
    orthonormalize(&mut vectors, m, n, scale);

    let barycenters = Arc::new(mesh.barycenters());
    let normalizers = Arc::new(basis.normalizers.clone());
    Ok(vectors
        .into_iter()
        .zip(eigenvalues)
        .enumerate()
        .map(|(i, (v, lambda))| EigenPair {
            index: i + 1,
            eigenvalue: lambda,
            shape: ModeShape::OnMesh {
                coeffs: Arc::new(v.iter().copied().collect()),
                barycenters: barycenters.clone(),
                normalizers: normalizers.clone(),
            },
        })
        .collect())
}

/// Eigendecomposition of a symmetric matrix with eigenvalues sorted
/// non-increasing (nalgebra returns them unsorted).
fn sorted_symmetric_eigen(mat: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = mat.nrows();
    let eig = SymmetricEigen::new(mat);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    (vals, vecs)
}

/// Normalizes the leading vectors and replaces numerically null ones with a
/// deterministic orthonormal completion from the canonical basis.
fn orthonormalize(vectors: &mut Vec<DVector<f64>>, m: usize, n: usize, scale: f64) {
    let tol = scale.max(1.0) * NULL_TOL;
    let mut kept: Vec<DVector<f64>> = Vec::with_capacity(m);
    for v in vectors.iter() {
        let mut v = v.clone();
        for u in &kept {
            let proj = u.dot(&v);
            v -= u * proj;
        }
        let norm = v.norm();
        if norm * norm > tol && kept.len() < m {
            kept.push(v / norm);
        }
    }
    let mut canon = 0;
    while kept.len() < m && canon < n {
        let mut v = DVector::zeros(n);
        v[canon] = 1.0;
        for u in &kept {
            let proj = u.dot(&v);
            v -= u * proj;
        }
        let norm = v.norm();
        if norm > 1e-8 {
            kept.push(v / norm);
        }
        canon += 1;
    }
    *vectors = kept;
}

/// Wraps snapshot eigenpairs into a model over the mesh's inferred domain.
pub fn snapshot_model(
    mesh: &SimplicialComplex,
    basis: &IndicatorBasis,
    samples: &[Vec<f64>],
    m: usize,
    law: CoefficientLaw,
) -> Result<EigenModel<f64>> {
    let domain = mesh
        .domain_hint()
        .ok_or_else(|| Error::invalid("mesh geometry matches no supported domain"))?;
    let pairs = snapshot_eigenpairs(mesh, basis, samples, m)?;
    Ok(EigenModel::new(domain, pairs, law, None, None))
}
