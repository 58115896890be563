//! Vote clustering: mean shift over center and keypoint votes, center-based
//! segmentation refinement, and per-keypoint aggregation.

use std::collections::{BTreeMap, HashMap};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::FusedCloud;
use crate::geometry::grid::SpatialGrid;
use crate::keypoints::KEYPOINTS_PER_OBJECT;
use crate::mesh::ModelLibrary;
use crate::oracle::PredictionBundle;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MeanShiftConfig {
    /// Flat (uniform ball) kernel radius (m).
    pub bandwidth: f64,
    /// Stop a trajectory once its shift falls below this (m).
    pub convergence_tol: f64,
    pub max_iterations: usize,
    /// Converged trajectories closer than this merge into one mode (m).
    pub merge_radius: f64,
}

impl Default for MeanShiftConfig {
    fn default() -> Self {
        Self {
            bandwidth: 0.03,
            convergence_tol: 1e-5,
            max_iterations: 60,
            merge_radius: 0.015,
        }
    }
}

impl MeanShiftConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth > 0.0 && self.convergence_tol > 0.0 && self.merge_radius > 0.0) {
            return Err(Error::Config("mean shift parameters must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("mean shift needs at least one iteration".into()));
        }
        if self.merge_radius > self.bandwidth {
            return Err(Error::Config("merge radius must not exceed bandwidth".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct MeanShiftResult {
    /// Modes sorted by descending weight, ties by lexicographic coordinate.
    pub modes: Vec<Vector3<f64>>,
    /// Index into `modes` of the nearest mode per input vote.
    pub assignment: Vec<usize>,
    /// Total seed weight that converged into each mode.
    pub mode_weights: Vec<f64>,
}

/// Positions quantized to this grid coalesce into one trajectory; far below
/// any physical tolerance in the pipeline.
const COALESCE_QUANTUM: f64 = 1e-12;

fn quantize(p: &Vector3<f64>) -> [i64; 3] {
    [
        (p.x / COALESCE_QUANTUM).round() as i64,
        (p.y / COALESCE_QUANTUM).round() as i64,
        (p.z / COALESCE_QUANTUM).round() as i64,
    ]
}

/// Flat-kernel mean shift. Every vote seeds a trajectory; each trajectory
/// iterates to the mean of the votes inside its bandwidth ball until the
/// shift drops below tolerance. Trajectories at identical positions are
/// advanced once and share the result, which keeps the procedure exact while
/// collapsing the common case of coincident votes.
pub fn mean_shift(votes: &[Vector3<f64>], cfg: &MeanShiftConfig) -> MeanShiftResult {
    assert!(!votes.is_empty(), "mean shift needs at least one vote");
    cfg.validate().expect("invalid mean shift config");

    let grid = SpatialGrid::build(votes, cfg.bandwidth);

    // dedupe seeds: identical votes share one trajectory with multiplicity
    let mut seed_of_vote = vec![0usize; votes.len()];
    let mut seeds: Vec<(Vector3<f64>, f64)> = Vec::new();
    {
        let mut index: HashMap<[i64; 3], usize> = HashMap::new();
        for (i, v) in votes.iter().enumerate() {
            let key = quantize(v);
            match index.get(&key) {
                Some(&s) => {
                    seeds[s].1 += 1.0;
                    seed_of_vote[i] = s;
                }
                None => {
                    index.insert(key, seeds.len());
                    seed_of_vote[i] = seeds.len();
                    seeds.push((*v, 1.0));
                }
            }
        }
    }

    // iterate trajectories with per-round coalescing
    let mut position: Vec<Vector3<f64>> = seeds.iter().map(|(p, _)| *p).collect();
    let mut active: Vec<usize> = (0..seeds.len()).collect();
    for _ in 0..cfg.max_iterations {
        if active.is_empty() {
            break;
        }
        let mut groups: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        for &s in &active {
            groups.entry(quantize(&position[s])).or_default().push(s);
        }
        let mut next_active = Vec::with_capacity(active.len());
        for (_, members) in groups {
            let pos = position[members[0]];
            let (sum, count) = grid.ball_sum(&pos, cfg.bandwidth);
            if count == 0 {
                continue; // stranded trajectory: stays put, done
            }
            let mean = sum / count as f64;
            let shift = (mean - pos).norm();
            if shift < cfg.convergence_tol {
                continue; // converged at pos
            }
            for &s in &members {
                position[s] = mean;
            }
            next_active.extend_from_slice(&members);
        }
        active = next_active;
    }

    // merge converged trajectories within merge_radius; processing in
    // lexicographic order makes the outcome independent of input order
    let mut order: Vec<usize> = (0..seeds.len()).collect();
    order.sort_by(|&a, &b| {
        let (p, q) = (&position[a], &position[b]);
        p.x.total_cmp(&q.x)
            .then(p.y.total_cmp(&q.y))
            .then(p.z.total_cmp(&q.z))
    });
    struct Mode {
        weighted_sum: Vector3<f64>,
        weight: f64,
    }
    let mut modes: Vec<Mode> = Vec::new();
    for &s in &order {
        let (pos, w) = (position[s], seeds[s].1);
        let mut merged = false;
        for m in modes.iter_mut() {
            let center = m.weighted_sum / m.weight;
            if (center - pos).norm() <= cfg.merge_radius {
                m.weighted_sum += pos * w;
                m.weight += w;
                merged = true;
                break;
            }
        }
        if !merged {
            modes.push(Mode {
                weighted_sum: pos * w,
                weight: w,
            });
        }
    }

    let mut final_modes: Vec<(Vector3<f64>, f64)> = modes
        .iter()
        .map(|m| (m.weighted_sum / m.weight, m.weight))
        .collect();
    final_modes.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then(a.0.x.total_cmp(&b.0.x))
            .then(a.0.y.total_cmp(&b.0.y))
            .then(a.0.z.total_cmp(&b.0.z))
    });

    let mode_positions: Vec<Vector3<f64>> = final_modes.iter().map(|(p, _)| *p).collect();
    let mode_weights: Vec<f64> = final_modes.iter().map(|(_, w)| *w).collect();
    let assignment: Vec<usize> = votes
        .iter()
        .map(|v| {
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (m, p) in mode_positions.iter().enumerate() {
                let d = (p - v).norm_squared();
                if d < best_d {
                    best_d = d;
                    best = m;
                }
            }
            best
        })
        .collect();

    MeanShiftResult {
        modes: mode_positions,
        assignment,
        mode_weights,
    }
}

/// Keep only classes with at least this many supporting points by default.
pub const DEFAULT_MIN_SUPPORT: usize = 10;

#[derive(Debug, Clone)]
pub struct ClassCenter {
    pub class_id: u16,
    pub center: Vector3<f64>,
    /// Indices of the class's points in the fused cloud.
    pub support: Vec<usize>,
}

/// Clusters center votes per predicted class. Classes with fewer than
/// `min_support` points are reported as not detected (absent from the map).
pub fn cluster_centers(
    bundle: &PredictionBundle,
    cloud: &FusedCloud,
    cfg: &MeanShiftConfig,
    min_support: usize,
) -> Result<BTreeMap<u16, ClassCenter>> {
    if bundle.len() != cloud.len() {
        return Err(Error::DimensionMismatch(format!(
            "bundle has {} points, cloud has {}",
            bundle.len(),
            cloud.len()
        )));
    }
    let mut by_class: BTreeMap<u16, Vec<usize>> = BTreeMap::new();
    for (i, &label) in bundle.labels.iter().enumerate() {
        if label != 0 {
            by_class.entry(label).or_default().push(i);
        }
    }
    let mut out = BTreeMap::new();
    for (class_id, indices) in by_class {
        if indices.len() < min_support {
            continue;
        }
        let votes: Vec<Vector3<f64>> = indices
            .iter()
            .map(|&i| cloud.points.point(i).position + bundle.center_offsets[i])
            .collect();
        let result = mean_shift(&votes, cfg);
        out.insert(
            class_id,
            ClassCenter {
                class_id,
                center: result.modes[0],
                support: indices,
            },
        );
    }
    Ok(out)
}

/// Rejection radius per class: `max(3 cm, 0.5 × model radius)`.
pub fn default_reject_radii(library: &ModelLibrary) -> BTreeMap<u16, f64> {
    library
        .iter()
        .map(|m| (m.class_id, (0.5 * m.radius).max(0.03)))
        .collect()
}

/// Keeps point `i` of class `c` iff its center vote lands within the class's
/// rejection radius of the clustered center. Background and undetected
/// classes are masked out.
pub fn refine_segmentation(
    bundle: &PredictionBundle,
    cloud: &FusedCloud,
    centers: &BTreeMap<u16, ClassCenter>,
    reject_radii: &BTreeMap<u16, f64>,
) -> Vec<bool> {
    (0..bundle.len())
        .map(|i| {
            let label = bundle.labels[i];
            if label == 0 {
                return false;
            }
            let Some(cc) = centers.get(&label) else {
                return false;
            };
            let radius = reject_radii.get(&label).copied().unwrap_or(0.03);
            let vote = cloud.points.point(i).position + bundle.center_offsets[i];
            (vote - cc.center).norm() <= radius
        })
        .collect()
}

/// Top-weight mean-shift mode of each keypoint's votes over the refined
/// points of each class. Classes whose refined mask is empty are dropped.
pub fn predict_keypoints(
    bundle: &PredictionBundle,
    cloud: &FusedCloud,
    mask: &[bool],
    cfg: &MeanShiftConfig,
) -> Result<BTreeMap<u16, [Vector3<f64>; KEYPOINTS_PER_OBJECT]>> {
    if mask.len() != bundle.len() {
        return Err(Error::DimensionMismatch(format!(
            "mask has {} entries, bundle {}",
            mask.len(),
            bundle.len()
        )));
    }
    let mut by_class: BTreeMap<u16, Vec<usize>> = BTreeMap::new();
    for (i, &keep) in mask.iter().enumerate() {
        if keep {
            by_class.entry(bundle.labels[i]).or_default().push(i);
        }
    }
    let mut out = BTreeMap::new();
    for (class_id, indices) in by_class {
        let mut kps = [Vector3::zeros(); KEYPOINTS_PER_OBJECT];
        for (j, slot) in kps.iter_mut().enumerate() {
            let votes: Vec<Vector3<f64>> = indices
                .iter()
                .map(|&i| cloud.points.point(i).position + bundle.keypoint_offsets[i][j])
                .collect();
            let result = mean_shift(&votes, cfg);
            *slot = result.modes[0];
        }
        out.insert(class_id, kps);
    }
    Ok(out)
}

/// One detected object: clustered center, refined support, and the eight
/// keypoint predictions feeding the pose fit.
#[derive(Debug, Clone)]
pub struct InstanceHypothesis {
    pub class_id: u16,
    pub center: Vector3<f64>,
    pub support: Vec<usize>,
    pub keypoints_pred: [Vector3<f64>; KEYPOINTS_PER_OBJECT],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VotingConfig {
    pub mean_shift: MeanShiftConfig,
    pub min_support: usize,
}

impl Default for VotingConfig {
    fn default() -> Self {
        Self {
            mean_shift: MeanShiftConfig::default(),
            min_support: DEFAULT_MIN_SUPPORT,
        }
    }
}

/// Full voting stage: center clustering, segmentation refinement, keypoint
/// prediction, assembled into one hypothesis per detected class.
pub fn detect_instances(
    bundle: &PredictionBundle,
    cloud: &FusedCloud,
    cfg: &VotingConfig,
    library: &ModelLibrary,
) -> Result<Vec<InstanceHypothesis>> {
    let centers = cluster_centers(bundle, cloud, &cfg.mean_shift, cfg.min_support)?;
    let radii = default_reject_radii(library);
    let mask = refine_segmentation(bundle, cloud, &centers, &radii);
    let keypoints = predict_keypoints(bundle, cloud, &mask, &cfg.mean_shift)?;
    let mut out = Vec::new();
    for (class_id, kps) in keypoints {
        let center = &centers[&class_id];
        let support: Vec<usize> = center
            .support
            .iter()
            .copied()
            .filter(|&i| mask[i])
            .collect();
        if support.is_empty() {
            continue;
        }
        out.push(InstanceHypothesis {
            class_id,
            center: center.center,
            support,
            keypoints_pred: kps,
        });
    }
    Ok(out)
}

/// JSON wire form of a hypothesis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HypothesisRecord {
    pub class_id: u16,
    pub center: [f64; 3],
    pub keypoints: Vec<[f64; 3]>,
    pub support_count: usize,
}

impl From<&InstanceHypothesis> for HypothesisRecord {
    fn from(h: &InstanceHypothesis) -> Self {
        Self {
            class_id: h.class_id,
            center: [h.center.x, h.center.y, h.center.z],
            keypoints: h.keypoints_pred.iter().map(|k| [k.x, k.y, k.z]).collect(),
            support_count: h.support.len(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn identical_votes_give_one_exact_mode() {
        let q = Vector3::new(0.123456, -0.654321, 0.777);
        let votes = vec![q; 500];
        let result = mean_shift(&votes, &MeanShiftConfig::default());
        assert_eq!(result.modes.len(), 1);
        assert_eq!(result.modes[0], q);
        assert_eq!(result.mode_weights[0], 500.0);
        assert!(result.assignment.iter().all(|&a| a == 0));
    }

    #[test]
    fn two_planted_clusters_yield_two_modes() {
        let cfg = MeanShiftConfig {
            bandwidth: 0.05,
            ..MeanShiftConfig::default()
        };
        let centers = [Vector3::new(0.0, 0.0, 0.0), Vector3::new(1.0, 0.0, 0.0)];
        let mut rng = stream_rng(61, "ms", 0);
        let noise = Normal::new(0.0, 0.01).unwrap();
        let mut votes = Vec::new();
        for c in &centers {
            for _ in 0..100 {
                votes.push(
                    c + Vector3::new(
                        noise.sample(&mut rng),
                        noise.sample(&mut rng),
                        noise.sample(&mut rng),
                    ),
                );
            }
        }
        let result = mean_shift(&votes, &cfg);
        assert_eq!(result.modes.len(), 2, "expected exactly two modes");
        for c in &centers {
            let nearest = result
                .modes
                .iter()
                .map(|m| (m - c).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(nearest < 0.005, "mode {nearest} m from planted center");
        }
    }

    #[test]
    fn gaussian_mode_matches_sample_mean() {
        let cfg = MeanShiftConfig {
            bandwidth: 0.05,
            ..MeanShiftConfig::default()
        };
        let mut rng = stream_rng(63, "ms", 0);
        let noise = Normal::new(0.0, 0.01).unwrap();
        let center = Vector3::new(0.3, -0.2, 0.9);
        let votes: Vec<Vector3<f64>> = (0..1000)
            .map(|_| {
                center
                    + Vector3::new(
                        noise.sample(&mut rng),
                        noise.sample(&mut rng),
                        noise.sample(&mut rng),
                    )
            })
            .collect();
        let mean = votes.iter().sum::<Vector3<f64>>() / votes.len() as f64;
        let result = mean_shift(&votes, &cfg);
        assert_eq!(result.modes.len(), 1);
        assert!((result.modes[0] - mean).norm() < 0.003);
    }

    #[test]
    fn modes_are_permutation_invariant() {
        let mut rng = stream_rng(65, "ms", 0);
        let votes: Vec<Vector3<f64>> = (0..300)
            .map(|_| Vector3::new(rng.gen::<f64>() * 0.2, rng.gen::<f64>() * 0.2, rng.gen::<f64>() * 0.2))
            .collect();
        let cfg = MeanShiftConfig::default();
        let a = mean_shift(&votes, &cfg);
        let mut reversed = votes.clone();
        reversed.reverse();
        let b = mean_shift(&reversed, &cfg);
        assert_eq!(a.modes.len(), b.modes.len());
        for (x, y) in a.modes.iter().zip(b.modes.iter()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn translation_equivariance() {
        let mut rng = stream_rng(67, "ms", 0);
        let votes: Vec<Vector3<f64>> = (0..200)
            .map(|_| Vector3::new(rng.gen::<f64>() * 0.3, rng.gen::<f64>() * 0.3, rng.gen::<f64>() * 0.3))
            .collect();
        let d = Vector3::new(0.125, -0.25, 0.5); // exactly representable
        let shifted: Vec<Vector3<f64>> = votes.iter().map(|v| v + d).collect();
        let cfg = MeanShiftConfig::default();
        let a = mean_shift(&votes, &cfg);
        let b = mean_shift(&shifted, &cfg);
        assert_eq!(a.modes.len(), b.modes.len());
        for (x, y) in a.modes.iter().zip(b.modes.iter()) {
            assert!(((x + d) - y).norm() < 1e-12, "equivariance broken");
        }
    }

    #[test]
    fn modes_lie_in_the_convex_hull_of_their_votes() {
        let mut rng = stream_rng(69, "ms", 0);
        let votes: Vec<Vector3<f64>> = (0..400)
            .map(|_| Vector3::new(rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()))
            .collect();
        let result = mean_shift(&votes, &MeanShiftConfig::default());
        // hull membership is hard to test exactly; bounding box is a sound
        // necessary condition and catches runaway trajectories
        for m in &result.modes {
            for c in 0..3 {
                let lo = votes.iter().map(|v| v[c]).fold(f64::INFINITY, f64::min);
                let hi = votes.iter().map(|v| v[c]).fold(f64::NEG_INFINITY, f64::max);
                assert!(m[c] >= lo - 1e-12 && m[c] <= hi + 1e-12);
            }
        }
    }

    #[test]
    fn duplicate_votes_scale_weights_not_modes() {
        let mut rng = stream_rng(71, "ms", 0);
        let noise = Normal::new(0.0, 0.005).unwrap();
        let votes: Vec<Vector3<f64>> = (0..200)
            .map(|_| {
                Vector3::new(
                    0.4 + noise.sample(&mut rng),
                    0.1 + noise.sample(&mut rng),
                    0.2 + noise.sample(&mut rng),
                )
            })
            .collect();
        let mut doubled = votes.clone();
        doubled.extend_from_slice(&votes);
        let cfg = MeanShiftConfig::default();
        let a = mean_shift(&votes, &cfg);
        let b = mean_shift(&doubled, &cfg);
        assert_eq!(a.modes.len(), b.modes.len());
        for (x, y) in a.modes.iter().zip(b.modes.iter()) {
            assert!((x - y).norm() < 1e-12);
        }
        assert!((b.mode_weights[0] - 2.0 * a.mode_weights[0]).abs() < 1e-9);
    }
}
