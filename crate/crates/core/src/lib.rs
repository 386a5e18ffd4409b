//! Multilevel orthogonal eigenspace construction and change detection for
//! random fields with truncated eigen-expansions.
//!
//! The pipeline: an eigenmodel (analytic or estimated from snapshots)
//! induces a "normal behavior" space V₀ over a mesh; a kd-tree partitions
//! the mesh cells; per-cell SVD factorizations assemble an orthonormal
//! multilevel basis of V₀ plus detail spaces orthogonal to it; fast
//! transforms project signals onto that basis; detectors turn detail
//! coefficient energy into change statistics with truncation-aware bounds
//! and localize changes through function supports.

pub mod detect;
pub mod error;
pub mod field;
pub mod kdtree;
pub mod kl;
pub mod mesh;
pub mod mlb;
pub mod quadrature;
pub mod transform;

pub use error::{Error, Result};
pub use field::Field;
