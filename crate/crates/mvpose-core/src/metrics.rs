//! Pose error metrics: ADD, ADD-S, the symmetry-aware combination, the
//! accuracy-threshold AUC, and aggregate reports.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::grid::SpatialGrid;
use crate::geometry::transform::RigidTransform;
use crate::mesh::ObjectModel;

/// AUC integrates accuracy over distance thresholds `[0, 0.10 m]`.
pub const AUC_MAX_THRESHOLD: f64 = 0.10;
/// The robot-manipulation success threshold.
pub const BELOW_THRESHOLD: f64 = 0.02;
/// Vertex count above which [`combined_distance_subsampled`] switches to
/// surface samples.
pub const ADD_S_SUBSAMPLE: usize = 2048;

/// Mean distance between corresponding model points under two poses.
pub fn add_distance(
    model_points: &[Vector3<f64>],
    gt_pose: &RigidTransform,
    pred_pose: &RigidTransform,
) -> Result<f64> {
    if model_points.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let mut sum = 0.0;
    for x in model_points {
        sum += (pred_pose.apply_point(x) - gt_pose.apply_point(x)).norm();
    }
    Ok(sum / model_points.len() as f64)
}

/// Mean distance from each predicted-pose point to its nearest ground-truth
/// point. The nearest neighbor runs on a spatial grid but is exact, bit-equal
/// to the brute-force double loop.
pub fn add_s_distance(
    model_points: &[Vector3<f64>],
    gt_pose: &RigidTransform,
    pred_pose: &RigidTransform,
) -> Result<f64> {
    if model_points.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let gt_points: Vec<Vector3<f64>> = model_points.iter().map(|x| gt_pose.apply_point(x)).collect();
    let mut lo = gt_points[0];
    let mut hi = gt_points[0];
    for p in &gt_points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let extent = (hi - lo).norm().max(1e-6);
    let cell = extent / (gt_points.len() as f64).cbrt().max(1.0);
    let grid = SpatialGrid::build(&gt_points, cell);
    let mut sum = 0.0;
    for x in model_points {
        let q = pred_pose.apply_point(x);
        sum += grid.nearest_distance(&q);
    }
    Ok(sum / model_points.len() as f64)
}

/// ADD for non-symmetric objects, ADD-S for symmetric ones, evaluated on the
/// mesh vertices.
pub fn combined_distance(
    model: &ObjectModel,
    gt_pose: &RigidTransform,
    pred_pose: &RigidTransform,
) -> Result<f64> {
    if model.symmetric {
        add_s_distance(&model.mesh.vertices, gt_pose, pred_pose)
    } else {
        add_distance(&model.mesh.vertices, gt_pose, pred_pose)
    }
}

/// As [`combined_distance`] but on `ADD_S_SUBSAMPLE` surface samples when the
/// mesh has more vertices than that.
pub fn combined_distance_subsampled(
    model: &ObjectModel,
    gt_pose: &RigidTransform,
    pred_pose: &RigidTransform,
) -> Result<f64> {
    if model.mesh.vertices.len() <= ADD_S_SUBSAMPLE {
        return combined_distance(model, gt_pose, pred_pose);
    }
    let samples = crate::mesh::sample_surface(&model.mesh, ADD_S_SUBSAMPLE, 0)?.positions();
    if model.symmetric {
        add_s_distance(&samples, gt_pose, pred_pose)
    } else {
        add_distance(&samples, gt_pose, pred_pose)
    }
}

/// Area under the accuracy-threshold curve over `[0, max_threshold]`, in
/// percent. Computed exactly from the sorted-distance step function:
/// every distance `d < T` contributes `(T − d) / (N·T)`. Misses enter as
/// `+∞` and contribute zero accuracy at every threshold.
pub fn auc(distances: &[f64], max_threshold: f64) -> Result<f64> {
    if distances.is_empty() {
        return Err(Error::Data("AUC of an empty distance list".into()));
    }
    if !(max_threshold > 0.0) {
        return Err(Error::Config("AUC threshold must be positive".into()));
    }
    if distances.iter().any(|d| d.is_nan()) {
        return Err(Error::Data("AUC of NaN distance".into()));
    }
    let n = distances.len() as f64;
    let mut area = 0.0;
    for &d in distances {
        if d < max_threshold {
            area += max_threshold - d;
        }
    }
    Ok(100.0 * area / (n * max_threshold))
}

/// Percentage of distances strictly below `threshold`; misses (`+∞`) count
/// as failures.
pub fn percent_below(distances: &[f64], threshold: f64) -> f64 {
    if distances.is_empty() {
        return 0.0;
    }
    100.0 * distances.iter().filter(|&&d| d < threshold).count() as f64 / distances.len() as f64
}

/// Distance pools for one class: the relaxed ADD-S list and the
/// symmetry-aware ADD(-S) list, misses encoded as `+∞`.
#[derive(Debug, Clone, Default)]
pub struct DistancePool {
    pub add_s: Vec<f64>,
    pub combined: Vec<f64>,
}

impl DistancePool {
    pub fn push(&mut self, add_s: f64, combined: f64) {
        self.add_s.push(add_s);
        self.combined.push(combined);
    }

    pub fn push_miss(&mut self) {
        self.add_s.push(f64::INFINITY);
        self.combined.push(f64::INFINITY);
    }

    pub fn miss_count(&self) -> usize {
        self.add_s.iter().filter(|d| d.is_infinite()).count()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class_id: u16,
    pub name: String,
    pub add_s_auc: f64,
    pub adds_auc: f64,
    pub add_s_below_2cm: f64,
    pub adds_below_2cm: f64,
    pub evaluated: usize,
    pub missed: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_class: Vec<ClassMetrics>,
    /// Pooled over all classes ("ALL" row): distances are pooled before the
    /// AUC, not averaged per class.
    pub overall: ClassMetrics,
}

impl MetricsReport {
    pub fn from_pools(pools: &BTreeMap<u16, DistancePool>, names: &BTreeMap<u16, String>) -> Result<Self> {
        let mut per_class = Vec::new();
        let mut all = DistancePool::default();
        for (&class_id, pool) in pools {
            if pool.add_s.is_empty() {
                continue;
            }
            per_class.push(ClassMetrics {
                class_id,
                name: names.get(&class_id).cloned().unwrap_or_else(|| format!("class_{class_id}")),
                add_s_auc: auc(&pool.add_s, AUC_MAX_THRESHOLD)?,
                adds_auc: auc(&pool.combined, AUC_MAX_THRESHOLD)?,
                add_s_below_2cm: percent_below(&pool.add_s, BELOW_THRESHOLD),
                adds_below_2cm: percent_below(&pool.combined, BELOW_THRESHOLD),
                evaluated: pool.add_s.len(),
                missed: pool.miss_count(),
            });
            all.add_s.extend_from_slice(&pool.add_s);
            all.combined.extend_from_slice(&pool.combined);
        }
        if all.add_s.is_empty() {
            return Err(Error::Data("no distances to report".into()));
        }
        let overall = ClassMetrics {
            class_id: 0,
            name: "ALL".into(),
            add_s_auc: auc(&all.add_s, AUC_MAX_THRESHOLD)?,
            adds_auc: auc(&all.combined, AUC_MAX_THRESHOLD)?,
            add_s_below_2cm: percent_below(&all.add_s, BELOW_THRESHOLD),
            adds_below_2cm: percent_below(&all.combined, BELOW_THRESHOLD),
            evaluated: all.add_s.len(),
            missed: all.miss_count(),
        };
        Ok(Self { per_class, overall })
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Data(format!("report serialization: {e}")))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Table-style CSV: one row per class plus the ALL row.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut text = String::from("class,add_s_auc,adds_auc,add_s_2cm,adds_2cm\n");
        for row in self.per_class.iter().chain(std::iter::once(&self.overall)) {
            text.push_str(&format!(
                "{},{:.4},{:.4},{:.4},{:.4}\n",
                row.name, row.add_s_auc, row.adds_auc, row.add_s_below_2cm, row.adds_below_2cm
            ));
        }
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// Serializable distance pools; misses stored as a count since JSON has no
/// infinity literal.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistancesFile {
    pub classes: BTreeMap<String, ClassDistances>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassDistances {
    pub class_id: u16,
    pub add_s: Vec<f64>,
    pub combined: Vec<f64>,
    pub misses: usize,
}

impl DistancesFile {
    pub fn from_pools(pools: &BTreeMap<u16, DistancePool>, names: &BTreeMap<u16, String>) -> Self {
        let classes = pools
            .iter()
            .map(|(&class_id, pool)| {
                let name = names
                    .get(&class_id)
                    .cloned()
                    .unwrap_or_else(|| format!("class_{class_id}"));
                (
                    name,
                    ClassDistances {
                        class_id,
                        add_s: pool.add_s.iter().copied().filter(|d| d.is_finite()).collect(),
                        combined: pool.combined.iter().copied().filter(|d| d.is_finite()).collect(),
                        misses: pool.miss_count(),
                    },
                )
            })
            .collect();
        Self { classes }
    }

    pub fn to_pools(&self) -> BTreeMap<u16, DistancePool> {
        self.classes
            .values()
            .map(|c| {
                let mut pool = DistancePool {
                    add_s: c.add_s.clone(),
                    combined: c.combined.clone(),
                };
                for _ in 0..c.misses {
                    pool.push_miss();
                }
                (c.class_id, pool)
            })
            .collect()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Data(format!("distances serialization: {e}")))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path, 0, e.to_string()))
    }
}

/// Writes an accuracy-threshold curve as `threshold_m,accuracy` rows over
/// 201 uniform thresholds in `[0, max_threshold]`.
pub fn write_curve_csv(distances: &[f64], max_threshold: f64, path: &Path) -> Result<()> {
    if distances.is_empty() {
        return Err(Error::Data("curve of an empty distance list".into()));
    }
    let mut text = String::from("threshold_m,accuracy\n");
    let steps = 200;
    let n = distances.len() as f64;
    for s in 0..=steps {
        let theta = max_threshold * s as f64 / steps as f64;
        let acc = distances.iter().filter(|&&d| d < theta).count() as f64 / n;
        text.push_str(&format!("{theta:.6},{acc:.6}\n"));
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{primitives, ModelLibrary, ObjectModel};
    use crate::rng::stream_rng;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn random_pose(rng: &mut impl Rng) -> RigidTransform {
        RigidTransform {
            translation: Vector3::new(rng.gen(), rng.gen(), rng.gen()),
            ..RigidTransform::random_rotation(rng)
        }
    }

    #[test]
    fn identical_poses_have_zero_distance() {
        let lib = ModelLibrary::builtin();
        let model = lib.get(4).unwrap();
        let mut rng = stream_rng(101, "metrics", 0);
        let pose = random_pose(&mut rng);
        assert_eq!(add_distance(&model.mesh.vertices, &pose, &pose).unwrap(), 0.0);
        assert_eq!(add_s_distance(&model.mesh.vertices, &pose, &pose).unwrap(), 0.0);
    }

    #[test]
    fn pure_translation_add_is_the_offset() {
        let lib = ModelLibrary::builtin();
        let model = lib.get(2).unwrap();
        let gt = RigidTransform::identity();
        let pred = RigidTransform::from_translation(Vector3::new(0.03, 0.0, 0.0));
        let d = add_distance(&model.mesh.vertices, &gt, &pred).unwrap();
        assert_abs_diff_eq!(d, 0.03, epsilon = 1e-12);
    }

    #[test]
    fn add_matches_brute_force_mean() {
        let mut rng = stream_rng(103, "metrics", 0);
        let points: Vec<Vector3<f64>> = (0..50)
            .map(|_| Vector3::new(rng.gen(), rng.gen(), rng.gen()))
            .collect();
        let (gt, pred) = (random_pose(&mut rng), random_pose(&mut rng));
        let d = add_distance(&points, &gt, &pred).unwrap();
        let brute: f64 = points
            .iter()
            .map(|x| (pred.apply_point(x) - gt.apply_point(x)).norm())
            .sum::<f64>()
            / points.len() as f64;
        assert_eq!(d, brute);
    }

    #[test]
    fn add_s_equals_brute_force_exactly() {
        let mut rng = stream_rng(105, "metrics", 0);
        for _ in 0..20 {
            let points: Vec<Vector3<f64>> = (0..200)
                .map(|_| Vector3::new(rng.gen::<f64>() * 0.2, rng.gen::<f64>() * 0.2, rng.gen::<f64>() * 0.2))
                .collect();
            let (gt, pred) = (random_pose(&mut rng), random_pose(&mut rng));
            let fast = add_s_distance(&points, &gt, &pred).unwrap();
            let gt_pts: Vec<Vector3<f64>> = points.iter().map(|x| gt.apply_point(x)).collect();
            let brute: f64 = points
                .iter()
                .map(|x| {
                    let q = pred.apply_point(x);
                    gt_pts
                        .iter()
                        .map(|g| (q - g).norm_squared())
                        .fold(f64::INFINITY, f64::min)
                        .sqrt()
                })
                .sum::<f64>()
                / points.len() as f64;
            assert_eq!(fast, brute, "grid ADD-S must equal brute force");
        }
    }

    #[test]
    fn add_s_never_exceeds_add() {
        let lib = ModelLibrary::builtin();
        let mut rng = stream_rng(107, "metrics", 0);
        for model in lib.iter() {
            let (gt, pred) = (random_pose(&mut rng), random_pose(&mut rng));
            let add = add_distance(&model.mesh.vertices, &gt, &pred).unwrap();
            let add_s = add_s_distance(&model.mesh.vertices, &gt, &pred).unwrap();
            assert!(add_s <= add + 1e-12);
        }
    }

    #[test]
    fn cylinder_spun_about_its_axis_is_add_s_invisible() {
        let mesh = primitives::cylinder_mesh(0.04, 0.12, 64, 8);
        let samples = crate::mesh::sample_surface(&mesh, 10_000, 1).unwrap().positions();
        let gt = RigidTransform::identity();
        let pred = RigidTransform::from_axis_angle(Vector3::z(), 0.8);
        let add = add_distance(&samples, &gt, &pred).unwrap();
        let add_s = add_s_distance(&samples, &gt, &pred).unwrap();
        assert!(add > 0.01, "ADD sees the spin: {add}");
        assert!(add_s < 1e-3, "ADD-S forgives the spin: {add_s}");
    }

    #[test]
    fn combined_respects_the_symmetry_flag ()  {
        let mesh = primitives::cylinder_mesh(0.04, 0.12, 32, 4);
        let gt = RigidTransform::identity();
        let pred = RigidTransform::from_axis_angle(Vector3::z(), 0.5);
        let strict = ObjectModel::from_mesh(1, "strict", mesh.clone(), false).unwrap();
        let relaxed = ObjectModel::from_mesh(2, "relaxed", mesh, true).unwrap();
        let c_strict = combined_distance(&strict, &gt, &pred).unwrap();
        let c_relaxed = combined_distance(&relaxed, &gt, &pred).unwrap();
        assert_eq!(c_strict, add_distance(&strict.mesh.vertices, &gt, &pred).unwrap());
        assert_eq!(c_relaxed, add_s_distance(&relaxed.mesh.vertices, &gt, &pred).unwrap());
        assert!(c_relaxed < c_strict);
    }

    #[test]
    fn default_library_is_all_strict() {
        let lib = ModelLibrary::builtin();
        let mut rng = stream_rng(109, "metrics", 0);
        for model in lib.iter() {
            let (gt, pred) = (random_pose(&mut rng), random_pose(&mut rng));
            let c = combined_distance(model, &gt, &pred).unwrap();
            let add = add_distance(&model.mesh.vertices, &gt, &pred).unwrap();
            assert_eq!(c, add);
        }
    }

    #[test]
    fn auc_boundary_cases() {
        assert_abs_diff_eq!(auc(&[0.0, 0.0], 0.1).unwrap(), 100.0, epsilon = 1e-12);
        assert_abs_diff_eq!(auc(&[0.2, 0.5], 0.1).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(auc(&[0.05], 0.1).unwrap(), 50.0, epsilon = 1e-12);
        assert!(auc(&[], 0.1).is_err());
        assert_abs_diff_eq!(
            auc(&[0.05, f64::INFINITY], 0.1).unwrap(),
            25.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn auc_matches_trapezoid_integration() {
        let mut rng = stream_rng(111, "metrics", 0);
        for _ in 0..50 {
            let n = 1 + rng.gen::<usize>() % 60;
            let distances: Vec<f64> = (0..n)
                .map(|_| {
                    if rng.gen::<f64>() < 0.1 {
                        f64::INFINITY
                    } else {
                        rng.gen::<f64>() * 0.15
                    }
                })
                .collect();
            let exact = auc(&distances, 0.1).unwrap();
            // trapezoid rule over 10^5 thresholds
            let steps = 100_000usize;
            let mut integral = 0.0;
            let acc = |theta: f64| {
                distances.iter().filter(|&&d| d < theta).count() as f64 / distances.len() as f64
            };
            for s in 0..steps {
                let a = 0.1 * s as f64 / steps as f64;
                let b = 0.1 * (s + 1) as f64 / steps as f64;
                integral += 0.5 * (acc(a) + acc(b)) * (b - a);
            }
            let numeric = 100.0 * integral / 0.1;
            assert!(
                (exact - numeric).abs() < 0.01,
                "exact {exact} vs trapezoid {numeric}"
            );
        }
    }

    #[test]
    fn auc_is_monotone_in_pointwise_improvement() {
        let mut rng = stream_rng(113, "metrics", 0);
        for _ in 0..100 {
            let n = 1 + rng.gen::<usize>() % 30;
            let base: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 0.12).collect();
            let improved: Vec<f64> = base.iter().map(|d| d * rng.gen::<f64>()).collect();
            assert!(auc(&improved, 0.1).unwrap() >= auc(&base, 0.1).unwrap() - 1e-12);
        }
    }

    #[test]
    fn percent_below_counts_strictly() {
        assert_eq!(percent_below(&[0.0, 0.0], 0.02), 100.0);
        assert_eq!(percent_below(&[0.01, 0.03], 0.02), 50.0);
        assert_eq!(percent_below(&[f64::INFINITY], 0.02), 0.0);
        // consistency with the accuracy step function at 2 cm
        let distances = [0.001, 0.019, 0.02, 0.021, f64::INFINITY];
        let acc = distances.iter().filter(|&&d| d < 0.02).count() as f64 / distances.len() as f64;
        assert_abs_diff_eq!(percent_below(&distances, 0.02), 100.0 * acc, epsilon = 1e-12);
    }

    #[test]
    fn add_is_left_isometry_invariant() {
        let lib = ModelLibrary::builtin();
        let model = lib.get(7).unwrap();
        let mut rng = stream_rng(115, "metrics", 0);
        let (gt, pred) = (random_pose(&mut rng), random_pose(&mut rng));
        let q = random_pose(&mut rng);
        let add = add_distance(&model.mesh.vertices, &gt, &pred).unwrap();
        let moved = add_distance(
            &model.mesh.vertices,
            &q.compose(&gt),
            &q.compose(&pred),
        )
        .unwrap();
        assert_abs_diff_eq!(add, moved, epsilon = 1e-12);
        let adds = add_s_distance(&model.mesh.vertices, &gt, &pred).unwrap();
        let moved_s = add_s_distance(
            &model.mesh.vertices,
            &q.compose(&gt),
            &q.compose(&pred),
        )
        .unwrap();
        assert_abs_diff_eq!(adds, moved_s, epsilon = 1e-10);
    }

    #[test]
    fn report_keeps_add_s_above_combined() {
        let mut rng = stream_rng(117, "metrics", 0);
        let lib = ModelLibrary::builtin();
        let mut pools: BTreeMap<u16, DistancePool> = BTreeMap::new();
        let mut names = BTreeMap::new();
        for model in lib.iter() {
            names.insert(model.class_id, model.name.clone());
            let pool = pools.entry(model.class_id).or_default();
            for _ in 0..20 {
                let gt = random_pose(&mut rng);
                let mut pred = gt;
                pred.translation += Vector3::new(
                    rng.gen::<f64>() * 0.02,
                    rng.gen::<f64>() * 0.02,
                    rng.gen::<f64>() * 0.02,
                );
                let add_s = add_s_distance(&model.mesh.vertices, &gt, &pred).unwrap();
                let combined = combined_distance(model, &gt, &pred).unwrap();
                pool.push(add_s, combined);
            }
            if model.class_id == 3 {
                pool.push_miss();
            }
        }
        let report = MetricsReport::from_pools(&pools, &names).unwrap();
        assert_eq!(report.per_class.len(), 11);
        for row in report.per_class.iter().chain([&report.overall]) {
            assert!(row.add_s_auc >= row.adds_auc - 1e-9, "{row:?}");
            assert!(row.add_s_auc >= 0.0 && row.add_s_auc <= 100.0);
        }
        assert_eq!(report.overall.name, "ALL");
        // the ALL row pools distances rather than averaging per-class AUCs
        let mut all = DistancePool::default();
        for pool in pools.values() {
            all.add_s.extend_from_slice(&pool.add_s);
            all.combined.extend_from_slice(&pool.combined);
        }
        assert_abs_diff_eq!(
            report.overall.add_s_auc,
            auc(&all.add_s, AUC_MAX_THRESHOLD).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn subsampled_combined_stays_close_on_realistic_errors() {
        let lib = ModelLibrary::builtin();
        let mut rng = stream_rng(119, "metrics", 0);
        let mut full_pool = Vec::new();
        let mut sub_pool = Vec::new();
        for model in lib.iter() {
            for _ in 0..10 {
                let gt = random_pose(&mut rng);
                let mut pred = gt;
                pred.translation += Vector3::new(
                    (rng.gen::<f64>() - 0.5) * 0.02,
                    (rng.gen::<f64>() - 0.5) * 0.02,
                    (rng.gen::<f64>() - 0.5) * 0.02,
                );
                full_pool.push(combined_distance(model, &gt, &pred).unwrap());
                sub_pool.push(combined_distance_subsampled(model, &gt, &pred).unwrap());
            }
        }
        let a = auc(&full_pool, AUC_MAX_THRESHOLD).unwrap();
        let b = auc(&sub_pool, AUC_MAX_THRESHOLD).unwrap();
        assert!((a - b).abs() < 0.1, "subsampled AUC {b} vs full {a}");
    }

    #[test]
    fn distances_file_round_trip() {
        let mut pools: BTreeMap<u16, DistancePool> = BTreeMap::new();
        let mut names = BTreeMap::new();
        names.insert(1u16, "banana".to_string());
        let pool = pools.entry(1).or_default();
        pool.push(0.01, 0.02);
        pool.push_miss();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("distances.json");
        DistancesFile::from_pools(&pools, &names).write(&path).unwrap();
        let back = DistancesFile::read(&path).unwrap().to_pools();
        let pool = &back[&1];
        assert_eq!(pool.add_s.len(), 2);
        assert_eq!(pool.miss_count(), 1);
    }
}
