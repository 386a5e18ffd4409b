//! Change detectors: global detail-coefficient energy, truncation-aware
//! energy intervals, support-based localization, and Monte Carlo moment
//! statistics for null calibration.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::kl::{derive_seed, to_cartesian, EigenModel, RealizationSampler};
use crate::mesh::{project_signal, BoundingBox, IndicatorBasis, SimplicialComplex};
use crate::mlb::MultilevelBasis;
use crate::transform::MultilevelCoefficients;

/// Global change statistic S: the total squared modulus of all detail
/// coefficients. Root scaling coefficients carry the normal-behavior
/// component and are excluded.
pub fn global_energy<T: Field>(mc: &MultilevelCoefficients<T>) -> f64 {
    mc.detail_energy()
}

/// Two-sided estimate of the off-V₀ signal energy ‖w‖² consistent with an
/// observed statistic S.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyInterval {
    pub lo: f64,
    /// None when the truncation tail is too large (t_M ≥ 1/2) to bound the
    /// energy from above.
    pub hi: Option<f64>,
}

/// Inverts the sandwich ‖w‖²(1 − 2 t_M) + t_M ≤ E S ≤ ‖w‖²(1 + 2 t_M) + t_M
/// for ‖w‖², clamping at zero since energies cannot be negative.
pub fn energy_interval(s: f64, t_m: f64) -> Result<EnergyInterval> {
    if !(s >= 0.0) || !(t_m >= 0.0) || !s.is_finite() || !t_m.is_finite() {
        return Err(Error::invalid(
            "energy statistic and tail must be finite and non-negative",
        ));
    }
    let lo = ((s - t_m) / (1.0 + 2.0 * t_m)).max(0.0);
    let hi = if t_m < 0.5 {
        Some(((s - t_m) / (1.0 - 2.0 * t_m)).max(0.0))
    } else {
        None
    };
    Ok(EnergyInterval { lo, hi })
}

/// A spatial region of interest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Region {
    /// [lo, hi] on the x-axis.
    Interval { lo: f64, hi: f64 },
    /// Axis-aligned box in R³.
    Box { min: [f64; 3], max: [f64; 3] },
    /// Geodesic ball on the unit sphere around (colatitude, longitude).
    Cap { theta: f64, phi: f64, radius: f64 },
}

impl Region {
    pub fn contains(&self, p: [f64; 3]) -> bool {
        match *self {
            Region::Interval { lo, hi } => p[0] >= lo && p[0] <= hi,
            Region::Box { min, max } => (0..3).all(|a| p[a] >= min[a] && p[a] <= max[a]),
            Region::Cap { theta, phi, radius } => {
                geodesic_distance(to_cartesian(theta, phi), p) <= radius
            }
        }
    }

    /// Resolves the region to the simplices whose barycenter it contains.
    pub fn resolve(&self, mesh: &SimplicialComplex) -> SupportQuery {
        let simplices = mesh
            .simplices
            .iter()
            .enumerate()
            .filter(|(_, s)| self.contains(s.barycenter))
            .map(|(i, _)| i)
            .collect();
        SupportQuery {
            region: self.clone(),
            simplices,
        }
    }
}

/// Angle between two directions; inputs need not be normalized.
pub fn geodesic_distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    let na = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
    let nb = (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt();
    (dot / (na * nb)).clamp(-1.0, 1.0).acos()
}

/// A region together with its resolved simplex index set.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SupportQuery {
    pub region: Region,
    pub simplices: Vec<usize>,
}

/// One above-threshold detail coefficient.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DetectionEntry {
    pub level: usize,
    pub id: usize,
    pub cell: usize,
    pub local_index: usize,
    pub abs_d: f64,
    pub value_re: f64,
    pub value_im: f64,
    pub support: BoundingBox,
    /// Mean position of the supporting cells.
    pub position: [f64; 3],
}

/// All detail coefficients with |d| > ε, optionally restricted to functions
/// whose support intersects a resolved region. Entries are ordered by level,
/// then by |d| descending (ties by id).
pub fn localize<T: Field>(
    basis: &MultilevelBasis<T>,
    mc: &MultilevelCoefficients<T>,
    epsilon: f64,
    region: Option<&SupportQuery>,
) -> Result<Vec<DetectionEntry>> {
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(Error::invalid("threshold must be non-negative"));
    }
    let mask: Option<Vec<bool>> = region.map(|q| {
        let mut m = vec![false; basis.len()];
        for &s in &q.simplices {
            if s < m.len() {
                m[s] = true;
            }
        }
        m
    });
    let mut entries = Vec::new();
    for (info, value) in basis.labeled_details(mc) {
        let abs_d = value.modulus();
        if !(abs_d > epsilon) {
            continue;
        }
        let (points, support) = basis.support_of(info.id)?;
        if let Some(mask) = &mask {
            if !points.iter().any(|&p| mask[p]) {
                continue;
            }
        }
        entries.push(DetectionEntry {
            level: info.level,
            id: info.id,
            cell: info.cell,
            local_index: info.local_index,
            abs_d,
            value_re: value.real(),
            value_im: value.imaginary(),
            support,
            position: basis.centroid_of(info.id)?,
        });
    }
    entries.sort_by(|a, b| {
        a.level
            .cmp(&b.level)
            .then(b.abs_d.partial_cmp(&a.abs_d).expect("finite coefficients"))
            .then(a.id.cmp(&b.id))
    });
    Ok(entries)
}

/// Full detection summary for one signal.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DetectionReport {
    /// Global detail energy Σ|d|².
    #[serde(rename = "S")]
    pub s: f64,
    pub lo: f64,
    pub hi: Option<f64>,
    #[serde(rename = "t_M")]
    pub t_m: f64,
    pub epsilon: f64,
    pub entries: Vec<DetectionEntry>,
    /// Dimension of V₀ on the mesh.
    pub root_dim: usize,
    pub detail_count: usize,
    pub complex_field: bool,
}

impl DetectionReport {
    /// True when any coefficient cleared the threshold.
    pub fn detected(&self) -> bool {
        !self.entries.is_empty()
    }
}

/// Assembles the energy statistic, its inversion interval, and the localized
/// entries into one report.
pub fn detection_report<T: Field>(
    basis: &MultilevelBasis<T>,
    mc: &MultilevelCoefficients<T>,
    t_m: f64,
    epsilon: f64,
    region: Option<&SupportQuery>,
) -> Result<DetectionReport> {
    let s = global_energy(mc);
    let interval = energy_interval(s, t_m)?;
    let entries = localize(basis, mc, epsilon, region)?;
    Ok(DetectionReport {
        s,
        lo: interval.lo,
        hi: interval.hi,
        t_m,
        epsilon,
        entries,
        root_dim: basis.root_dim(),
        detail_count: basis.detail_count(),
        complex_field: T::IS_COMPLEX,
    })
}

/// Empirical per-coefficient statistics of the detail transform under a
/// model's own realizations (no added signal).
#[derive(Clone, Debug)]
pub struct MomentStats {
    pub trials: usize,
    /// |empirical mean| per detail coefficient.
    pub mean_abs: Vec<f64>,
    /// Empirical E|d|² per detail coefficient.
    pub second_moment: Vec<f64>,
    /// Standard error of each second moment.
    pub second_moment_se: Vec<f64>,
    /// Empirical standard deviation of each coefficient.
    pub std: Vec<f64>,
}

impl MomentStats {
    pub fn max_mean_abs(&self) -> f64 {
        self.mean_abs.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_std(&self) -> f64 {
        self.std.iter().copied().fold(0.0, f64::max)
    }

    /// Largest second moment and the standard error at that coefficient.
    pub fn max_second_moment(&self) -> (f64, f64) {
        let mut best = (0.0, 0.0);
        for (&m2, &se) in self.second_moment.iter().zip(&self.second_moment_se) {
            if m2 > best.0 {
                best = (m2, se);
            }
        }
        best
    }
}

/// Monte Carlo moments of the detail coefficients when realizations of
/// `model` (typically holding many more modes than the basis was built
/// from) are pushed through the transform.
///
/// Trials are seeded independently from the master seed, so the statistics
/// are reproducible and trial order is immaterial.
pub fn coefficient_moments<T: Field>(
    model: &EigenModel<T>,
    mesh: &SimplicialComplex,
    indicators: &IndicatorBasis,
    basis: &MultilevelBasis<T>,
    trials: usize,
    seed: u64,
) -> Result<MomentStats> {
    if trials < 100 {
        return Err(Error::invalid(
            "moment estimation needs at least 100 trials",
        ));
    }
    if mesh.len() != basis.len() {
        return Err(Error::SizeMismatch {
            context: "moment estimation mesh",
            expected: basis.len(),
            got: mesh.len(),
        });
    }
    let sampler = RealizationSampler::new(model, &mesh.barycenters())?;
    let d = basis.detail_count();
    let mut sum_re = vec![0.0; d];
    let mut sum_im = vec![0.0; d];
    let mut sum2 = vec![0.0; d];
    let mut sum4 = vec![0.0; d];
    for t in 0..trials {
        let values = sampler.sample(derive_seed(seed, t as u64));
        let fine = project_signal(
            mesh,
            indicators,
            values.as_slice(),
        )?;
        let mc = basis.forward(&fine)?;
        for (i, v) in mc.details.iter().enumerate() {
            let m2 = v.modulus_squared();
            sum_re[i] += v.real();
            sum_im[i] += v.imaginary();
            sum2[i] += m2;
            sum4[i] += m2 * m2;
        }
    }
    let tf = trials as f64;
    let mut mean_abs = Vec::with_capacity(d);
    let mut second_moment = Vec::with_capacity(d);
    let mut second_moment_se = Vec::with_capacity(d);
    let mut std = Vec::with_capacity(d);
    for i in 0..d {
        let mre = sum_re[i] / tf;
        let mim = sum_im[i] / tf;
        let m2 = sum2[i] / tf;
        let m4 = sum4[i] / tf;
        mean_abs.push((mre * mre + mim * mim).sqrt());
        second_moment.push(m2);
        second_moment_se.push(((m4 - m2 * m2).max(0.0) / tf).sqrt());
        std.push((m2 - mre * mre - mim * mim).max(0.0).sqrt());
    }
    Ok(MomentStats {
        trials,
        mean_abs,
        second_moment,
        second_moment_se,
        std,
    })
}

/// Mean of the global statistic S and its standard error over seeded trials
/// of `model` realizations plus a fixed additive fine-coefficient component.
pub fn energy_statistic_trials<T: Field>(
    model: &EigenModel<T>,
    mesh: &SimplicialComplex,
    indicators: &IndicatorBasis,
    basis: &MultilevelBasis<T>,
    added_fine: Option<&DVector<T>>,
    trials: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if trials < 2 {
        return Err(Error::invalid("need at least two trials"));
    }
    let sampler = RealizationSampler::new(model, &mesh.barycenters())?;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for t in 0..trials {
        let values = sampler.sample(derive_seed(seed, t as u64));
        let mut fine = project_signal(mesh, indicators, values.as_slice())?;
        if let Some(extra) = added_fine {
            fine += extra;
        }
        let s = global_energy(&basis.forward(&fine)?);
        sum += s;
        sum_sq += s * s;
    }
    let tf = trials as f64;
    let mean = sum / tf;
    let var = ((sum_sq / tf - mean * mean) * tf / (tf - 1.0)).max(0.0);
    Ok((mean, (var / tf).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kdtree::make_tree;
    use crate::kl::brownian::brownian_model;
    use crate::mesh::{uniform_interval_mesh, Mode};
    use crate::mlb::{build_basis, DEFAULT_RANK_TOL};
    use nalgebra::ComplexField;

    fn setup(n: usize, m: usize, n0: usize) -> (SimplicialComplex, IndicatorBasis, MultilevelBasis<f64>) {
        let mesh = uniform_interval_mesh(0.0, 1.0, n).unwrap();
        let indicators = IndicatorBasis::new(&mesh, Mode::Continuous);
        let model = brownian_model(m).unwrap();
        let tree = make_tree(&mesh.barycenters(), n0).unwrap();
        let basis = build_basis(tree, &mesh, &indicators, &model, DEFAULT_RANK_TOL).unwrap();
        (mesh, indicators, basis)
    }

    #[test]
    fn interval_inversion_matches_hand_algebra() {
        // S = 1.1, t = 0.1: lo = 1.0/1.2, hi = 1.0/0.8.
        let iv = energy_interval(1.1, 0.1).unwrap();
        assert!((iv.lo - 0.8333333333333334).abs() < 1e-15);
        assert!((iv.hi.unwrap() - 1.25).abs() < 1e-15);
        // Zero tail: exact recovery.
        let iv = energy_interval(0.7, 0.0).unwrap();
        assert_eq!(iv.lo, 0.7);
        assert_eq!(iv.hi, Some(0.7));
        // S below the tail clamps to zero.
        let iv = energy_interval(0.05, 0.1).unwrap();
        assert_eq!(iv.lo, 0.0);
        assert_eq!(iv.hi, Some(0.0));
        // Huge tail: no upper bound.
        let iv = energy_interval(1.0, 0.6).unwrap();
        assert_eq!(iv.hi, None);
        assert!(energy_interval(-1.0, 0.1).is_err());
        assert!(energy_interval(1.0, f64::NAN).is_err());
    }

    #[test]
    fn regions_resolve_by_barycenter() {
        let mesh = uniform_interval_mesh(0.0, 1.0, 10).unwrap();
        let q = Region::Interval { lo: 0.3, hi: 0.7 }.resolve(&mesh);
        assert_eq!(q.simplices, vec![3, 4, 5, 6]);
        let q = Region::Box {
            min: [0.0, -1.0, -1.0],
            max: [0.25, 1.0, 1.0],
        }
        .resolve(&mesh);
        assert_eq!(q.simplices, vec![0, 1, 2]);
        // A cap around the north pole of an icosphere keeps nearby points.
        let sphere = crate::mesh::icosphere(1).unwrap();
        let q = Region::Cap {
            theta: 0.0,
            phi: 0.0,
            radius: 0.5,
        }
        .resolve(&sphere);
        assert!(!q.simplices.is_empty());
        for &i in &q.simplices {
            let b = sphere.simplices[i].barycenter;
            assert!(geodesic_distance(b, [0.0, 0.0, 1.0]) <= 0.5 + 1e-12);
        }
    }

    #[test]
    fn localization_finds_a_planted_detail() {
        let (_, _, basis) = setup(32, 2, 3);
        let id = basis.root_dim() + 7;
        let fine = basis.densify(id).unwrap();
        let mc = basis.forward(&fine).unwrap();
        let entries = localize(&basis, &mc, 0.5, None).unwrap();
        assert_eq!(entries.len(), 1);
        assert_eq!(entries[0].id, id);
        assert!((entries[0].abs_d - 1.0).abs() < 1e-12);
        // An infinite threshold reports nothing.
        let entries = localize(&basis, &mc, f64::INFINITY, None).unwrap();
        assert!(entries.is_empty());
        assert!(localize(&basis, &mc, -0.1, None).is_err());
    }

    #[test]
    fn region_restriction_drops_far_entries() {
        let (mesh, _, basis) = setup(64, 2, 4);
        // Coefficients on two functions: one supported left, one right.
        let left_id = basis.root_dim();
        let right_id = basis.root_dim() + basis.detail_count() - 1;
        let fine = basis.densify(left_id).unwrap() + basis.densify(right_id).unwrap() * 2.0;
        let mc = basis.forward(&fine).unwrap();
        let all = localize(&basis, &mc, 0.5, None).unwrap();
        assert_eq!(all.len(), 2);
        // Pick a region covering only the left function's support.
        let (pts, _) = basis.support_of(left_id).unwrap();
        let bary = mesh.simplices[pts[0]].barycenter[0];
        let region = Region::Interval {
            lo: bary - 1e-6,
            hi: bary + 1e-6,
        }
        .resolve(&mesh);
        let filtered = localize(&basis, &mc, 0.5, Some(&region)).unwrap();
        assert_eq!(filtered.len(), 1);
        assert_eq!(filtered[0].id, left_id);
    }

    #[test]
    fn entries_sort_by_level_then_magnitude() {
        let (_, _, basis) = setup(40, 2, 3);
        let mut mc = crate::transform::MultilevelCoefficients::zeros(
            basis.root_dim(),
            basis.detail_count(),
        );
        for (i, _) in basis.details().iter().enumerate() {
            mc.details[i] = 0.1 + (i as f64 * 0.37).sin().abs();
        }
        let entries = localize(&basis, &mc, 0.05, None).unwrap();
        assert_eq!(entries.len(), basis.detail_count());
        for w in entries.windows(2) {
            assert!(w[0].level <= w[1].level);
            if w[0].level == w[1].level {
                assert!(w[0].abs_d >= w[1].abs_d);
            }
        }
    }

    #[test]
    fn report_combines_energy_and_entries() {
        let (_, _, basis) = setup(24, 2, 3);
        let fine = basis.densify(basis.root_dim() + 1).unwrap() * 3.0;
        let mc = basis.forward(&fine).unwrap();
        let report = detection_report(&basis, &mc, 0.01, 1.0, None).unwrap();
        assert!((report.s - 9.0).abs() < 1e-10);
        assert!(report.detected());
        assert_eq!(report.entries.len(), 1);
        assert!(!report.complex_field);
        assert!(report.lo < 9.0 && report.hi.unwrap() > 8.9);
        let json = serde_json::to_string(&report).unwrap();
        assert!(json.contains("\"S\":"));
        assert!(json.contains("\"t_M\":"));
    }

    #[test]
    fn null_model_moments_are_tiny() {
        // Basis built from the same modes the sampler draws: every detail
        // coefficient is an exact zero up to rounding.
        let (mesh, indicators, basis) = setup(16, 3, 2);
        let model = brownian_model(3).unwrap();
        let stats =
            coefficient_moments(&model, &mesh, &indicators, &basis, 100, 42).unwrap();
        assert_eq!(stats.trials, 100);
        assert!(stats.max_second_moment().0 < 1e-20);
        assert!(stats.max_mean_abs() < 1e-10);
        assert!(coefficient_moments(&model, &mesh, &indicators, &basis, 99, 42).is_err());
    }

    #[test]
    fn truncated_basis_sees_tail_energy() {
        let (mesh, indicators, basis) = setup(16, 3, 2);
        let full = brownian_model(40).unwrap();
        let stats = coefficient_moments(&full, &mesh, &indicators, &basis, 150, 7).unwrap();
        let (m2, _) = stats.max_second_moment();
        assert!(m2 > 1e-6, "tail energy should leak into details");
        let t3 = full.truncation_tail(3);
        assert!(m2 <= t3, "per-coefficient moment {m2} under tail {t3}");
    }

    #[test]
    fn disjoint_supports_stay_silent_without_a_tail() {
        // Model truncation equals the sampled truncation, so the only
        // nonzero details come from the added bump itself.
        let (mesh, indicators, basis) = setup(64, 3, 4);
        let model = brownian_model(3).unwrap();
        let v = crate::kl::sample_realization(&model, &mesh.barycenters(), 11).unwrap();
        let bump: Vec<f64> = mesh
            .barycenters()
            .iter()
            .map(|b| {
                if (b[0] - 0.2).abs() < 0.05 {
                    0.8
                } else {
                    0.0
                }
            })
            .collect();
        let u: Vec<f64> = v.iter().zip(&bump).map(|(a, b)| a + b).collect();
        let fine = project_signal(&mesh, &indicators, &u).unwrap();
        let mc = basis.forward(&fine).unwrap();
        let bump_cells: Vec<usize> = (0..64).filter(|&i| bump[i] != 0.0).collect();
        for (info, value) in basis.labeled_details(&mc) {
            let (points, _) = basis.support_of(info.id).unwrap();
            let touches = points.iter().any(|p| bump_cells.contains(p));
            if !touches {
                assert!(
                    value.modulus() <= 1e-10,
                    "silent coefficient {} reads {}",
                    info.id,
                    value.modulus()
                );
            }
        }
    }

    /// Builds a model over mesh indicator coefficients from exactly
    /// orthonormal discrete cosine vectors, with eigenvalues scaled so the
    /// tail past `kept` sums to `tail`.
    fn cosine_model(
        mesh: &SimplicialComplex,
        kept: usize,
        extra: usize,
        tail: f64,
    ) -> crate::kl::EigenModel<f64> {
        use crate::kl::{CoefficientLaw, Domain};
        let n = mesh.len();
        let barycenters = std::sync::Arc::new(mesh.barycenters());
        let height = (n as f64).sqrt();
        let normalizers = std::sync::Arc::new(vec![height; n]);
        let total = kept + extra;
        let mut pairs = Vec::with_capacity(total);
        for k in 0..total {
            let coeffs: Vec<f64> = (0..n)
                .map(|j| {
                    let x = (j as f64 + 0.5) / n as f64;
                    if k == 0 {
                        (1.0 / n as f64).sqrt()
                    } else {
                        (2.0 / n as f64).sqrt() * (k as f64 * std::f64::consts::PI * x).cos()
                    }
                })
                .collect();
            let eigenvalue = if k < kept {
                1.0
            } else {
                tail / extra as f64
            };
            pairs.push(crate::kl::EigenPair {
                index: k + 1,
                eigenvalue,
                shape: crate::kl::ModeShape::OnMesh {
                    coeffs: std::sync::Arc::new(coeffs),
                    barycenters: barycenters.clone(),
                    normalizers: normalizers.clone(),
                },
            });
        }
        crate::kl::EigenModel::new(
            Domain::Interval { a: 0.0, b: 1.0 },
            pairs,
            CoefficientLaw::StandardNormal,
            None,
            None,
        )
    }

    #[test]
    fn mean_energy_sits_inside_the_sandwich() {
        let n = 32;
        let kept = 4;
        let mesh = uniform_interval_mesh(0.0, 1.0, n).unwrap();
        let indicators = IndicatorBasis::new(&mesh, Mode::Continuous);
        for &tail in &[0.2, 0.05, 0.01] {
            let full = cosine_model(&mesh, kept, 12, tail);
            let truncated = full.truncated(kept).unwrap();
            let tree = make_tree(&mesh.barycenters(), 4).unwrap();
            let basis =
                build_basis(tree, &mesh, &indicators, &truncated, DEFAULT_RANK_TOL).unwrap();
            // A fixed component outside the span of every stored mode.
            let probe = cosine_model(&mesh, kept + 13, 1, 1.0);
            let w_values: Vec<f64> = mesh
                .barycenters()
                .iter()
                .map(|&p| probe.pairs()[kept + 12].eval(p) * 0.9)
                .collect();
            let w = project_signal(&mesh, &indicators, &w_values).unwrap();
            let w_sq = w.norm_squared();
            let (mean, se) = energy_statistic_trials(
                &full, &mesh, &indicators, &basis, Some(&w), 300, 19,
            )
            .unwrap();
            let lo = w_sq * (1.0 - 2.0 * tail) + tail - 3.0 * se;
            let hi = w_sq * (1.0 + 2.0 * tail) + tail + 3.0 * se;
            assert!(
                mean >= lo && mean <= hi,
                "tail {tail}: mean {mean} outside [{lo}, {hi}]"
            );
        }
    }

    #[test]
    fn energy_trials_report_mean_and_se() {
        let (mesh, indicators, basis) = setup(16, 2, 2);
        let full = brownian_model(30).unwrap();
        let (mean, se) = energy_statistic_trials(
            &full, &mesh, &indicators, &basis, None, 200, 3,
        )
        .unwrap();
        assert!(mean > 0.0 && se > 0.0 && se < mean);
    }
}
