//! Target keypoint selection (farthest point sampling) and ground-truth
//! per-point offset computation.

use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::cloud::PointCloud;
use crate::geometry::transform::RigidTransform;
use crate::mesh::{ObjectModel, TriangleMesh};

/// Number of target keypoints per object.
pub const KEYPOINTS_PER_OBJECT: usize = 8;

#[derive(Debug, Clone)]
pub struct KeypointSet {
    pub class_id: u16,
    pub keypoints: [Vector3<f64>; KEYPOINTS_PER_OBJECT],
}

/// Greedy farthest point sampling.
///
/// The first pick is the candidate farthest from the candidates' bounding-box
/// midpoint; each later pick maximizes the minimum distance to the points
/// already selected. Ties go to the lowest candidate index, so the result is
/// deterministic in the input order.
pub fn farthest_point_sample(candidates: &[Vector3<f64>], m: usize) -> Result<Vec<Vector3<f64>>> {
    if candidates.len() < m {
        return Err(Error::InsufficientPoints {
            needed: m,
            have: candidates.len(),
        });
    }
    assert!(m >= 1, "must select at least one point");

    let mut lo = candidates[0];
    let mut hi = candidates[0];
    for p in candidates {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let mid = (lo + hi) * 0.5;

    let mut selected_idx = Vec::with_capacity(m);
    let mut best = 0usize;
    let mut best_d = f64::NEG_INFINITY;
    for (i, p) in candidates.iter().enumerate() {
        let d = (p - mid).norm_squared();
        if d > best_d {
            best_d = d;
            best = i;
        }
    }
    selected_idx.push(best);

    // min distance from each candidate to the selected set
    let mut min_d: Vec<f64> = candidates
        .iter()
        .map(|p| (p - candidates[best]).norm_squared())
        .collect();
    while selected_idx.len() < m {
        let mut best = 0usize;
        let mut best_d = f64::NEG_INFINITY;
        for (i, &d) in min_d.iter().enumerate() {
            if d > best_d {
                best_d = d;
                best = i;
            }
        }
        selected_idx.push(best);
        for (i, p) in candidates.iter().enumerate() {
            let d = (p - candidates[best]).norm_squared();
            if d < min_d[i] {
                min_d[i] = d;
            }
        }
    }
    Ok(selected_idx.into_iter().map(|i| candidates[i]).collect())
}

/// FPS candidate set for a mesh: its vertices when there are at least 64,
/// otherwise 2,048 surface samples drawn with seed 0.
pub fn fps_candidates(mesh: &TriangleMesh) -> Result<Vec<Vector3<f64>>> {
    if mesh.vertices.len() >= 64 {
        Ok(mesh.vertices.clone())
    } else {
        Ok(crate::mesh::sample_surface(mesh, 2048, 0)?.positions())
    }
}

/// The eight FPS keypoints of a mesh.
pub fn compute_keypoints(mesh: &TriangleMesh) -> Result<[Vector3<f64>; KEYPOINTS_PER_OBJECT]> {
    let candidates = fps_candidates(mesh)?;
    let picks = farthest_point_sample(&candidates, KEYPOINTS_PER_OBJECT)?;
    Ok(picks.try_into().expect("exactly eight keypoints"))
}

/// Ground-truth offsets for one point: toward the instance center and toward
/// each of its eight keypoints, all in the frame `instance_pose` lives in.
#[derive(Debug, Clone)]
pub struct GtOffsets {
    pub center_offset: Vector3<f64>,
    pub keypoint_offsets: [Vector3<f64>; KEYPOINTS_PER_OBJECT],
}

/// Offsets from each point to the posed model center and keypoints:
/// `offset_j = (R·k_j + t) − p`. The caller restricts `points` to the
/// instance via its segmentation mask.
pub fn gt_offsets(
    points: &PointCloud,
    instance_pose: &RigidTransform,
    model: &ObjectModel,
) -> Vec<GtOffsets> {
    let posed_center = instance_pose.apply_point(&model.center);
    let posed_kps: [Vector3<f64>; KEYPOINTS_PER_OBJECT] =
        std::array::from_fn(|j| instance_pose.apply_point(&model.keypoints[j]));
    points
        .iter()
        .map(|p| GtOffsets {
            center_offset: posed_center - p.position,
            keypoint_offsets: std::array::from_fn(|j| posed_kps[j] - p.position),
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct KeypointBankFile {
    class_id: u16,
    keypoints: Vec<[f64; 3]>,
}

#[derive(Debug, Clone)]
pub struct KeypointBank {
    pub class_id: u16,
    pub keypoints: [Vector3<f64>; KEYPOINTS_PER_OBJECT],
}

pub fn save_keypoint_bank(
    path: &Path,
    class_id: u16,
    keypoints: &[Vector3<f64>; KEYPOINTS_PER_OBJECT],
) -> Result<()> {
    let file = KeypointBankFile {
        class_id,
        keypoints: keypoints.iter().map(|k| [k.x, k.y, k.z]).collect(),
    };
    let text = serde_json::to_string_pretty(&file)
        .map_err(|e| Error::Data(format!("keypoint bank serialization: {e}")))?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_keypoint_bank(path: &Path) -> Result<KeypointBank> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: KeypointBankFile =
        serde_json::from_str(&text).map_err(|e| Error::parse(path, 0, e.to_string()))?;
    if file.keypoints.len() != KEYPOINTS_PER_OBJECT {
        return Err(Error::Data(format!(
            "keypoint bank {} has {} keypoints, expected {}",
            path.display(),
            file.keypoints.len(),
            KEYPOINTS_PER_OBJECT
        )));
    }
    let keypoints = std::array::from_fn(|i| {
        Vector3::new(file.keypoints[i][0], file.keypoints[i][1], file.keypoints[i][2])
    });
    Ok(KeypointBank {
        class_id: file.class_id,
        keypoints,
    })
}
