//! Closed-form least-squares pose fitting from keypoint correspondences.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::transform::RigidTransform;
use crate::mesh::ModelLibrary;
use crate::voting::InstanceHypothesis;

/// Fits above this RMS residual are flagged low confidence but still reported.
pub const LOW_CONFIDENCE_RESIDUAL: f64 = 0.05;

#[derive(Debug, Clone)]
pub struct PoseEstimate {
    pub class_id: u16,
    /// Object frame → reference camera frame.
    pub pose: RigidTransform,
    /// `sqrt(Σ‖k̂ − (R·k + t)‖² / M)` in meters.
    pub residual_rms: f64,
}

impl PoseEstimate {
    pub fn low_confidence(&self) -> bool {
        self.residual_rms > LOW_CONFIDENCE_RESIDUAL
    }
}

/// Minimizes `Σ‖k̂_i − (R·k_i + t)‖²` in closed form: centroids are removed,
/// the 3×3 cross-covariance is factored by SVD, and the reflection guard
/// forces `det(R) = +1`. Globally optimal over SE(3).
///
/// Errors on fewer than 3 pairs or a degenerate (collinear) configuration.
pub fn least_squares_fit(
    model_keypoints: &[Vector3<f64>],
    predicted_keypoints: &[Vector3<f64>],
) -> Result<(RigidTransform, f64)> {
    let m = model_keypoints.len();
    if m != predicted_keypoints.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} model keypoints vs {} predictions",
            m,
            predicted_keypoints.len()
        )));
    }
    if m < 3 {
        return Err(Error::DegenerateFit(format!("{m} correspondences, need 3")));
    }

    let inv_m = 1.0 / m as f64;
    let model_centroid: Vector3<f64> = model_keypoints.iter().sum::<Vector3<f64>>() * inv_m;
    let pred_centroid: Vector3<f64> = predicted_keypoints.iter().sum::<Vector3<f64>>() * inv_m;

    // cross-covariance Σ (k̂ − ĉ)(k − c)ᵀ
    let mut cross = Matrix3::zeros();
    for (k, khat) in model_keypoints.iter().zip(predicted_keypoints.iter()) {
        cross += (khat - pred_centroid) * (k - model_centroid).transpose();
    }

    let svd = cross.svd(true, true);
    let sv = svd.singular_values;
    let mut ordered = [sv[0], sv[1], sv[2]];
    ordered.sort_by(f64::total_cmp);
    if ordered[0] < 1e-12 && ordered[1] < 1e-12 {
        return Err(Error::DegenerateFit(
            "keypoint configuration is collinear or collapsed".into(),
        ));
    }
    let u = svd.u.expect("svd requested u");
    let v_t = svd.v_t.expect("svd requested v_t");
    let d = (u * v_t).determinant();
    let guard = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, if d < 0.0 { -1.0 } else { 1.0 }));
    let rotation = u * guard * v_t;
    let translation = pred_centroid - rotation * model_centroid;

    let pose = RigidTransform::new(rotation, translation);
    let mut loss = 0.0;
    for (k, khat) in model_keypoints.iter().zip(predicted_keypoints.iter()) {
        loss += (khat - pose.apply_point(k)).norm_squared();
    }
    Ok((pose, (loss * inv_m).sqrt()))
}

/// One pose per detected instance, fitted against the library's keypoints.
pub fn estimate_poses(
    hypotheses: &[InstanceHypothesis],
    library: &ModelLibrary,
) -> Result<Vec<PoseEstimate>> {
    let mut out = Vec::with_capacity(hypotheses.len());
    for h in hypotheses {
        let model = library.get(h.class_id)?;
        let (pose, residual_rms) = least_squares_fit(&model.keypoints, &h.keypoints_pred)?;
        out.push(PoseEstimate {
            class_id: h.class_id,
            pose,
            residual_rms,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoseEntryRecord {
    pub class_id: u16,
    pub quat_wxyz: [f64; 4],
    pub t_xyz: [f64; 3],
    pub residual_rms: f64,
    pub low_confidence: bool,
}

/// Per-(scene, camera combination) estimate file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneEstimates {
    pub scene_id: u64,
    /// Global index of the camera whose frame the poses live in.
    pub reference_camera: u32,
    /// The full camera combination, reference first.
    pub camera_ids: Vec<u32>,
    pub poses: Vec<PoseEntryRecord>,
}

impl SceneEstimates {
    pub fn new(scene_id: u64, camera_ids: Vec<u32>, estimates: &[PoseEstimate]) -> Self {
        Self {
            scene_id,
            reference_camera: camera_ids[0],
            camera_ids,
            poses: estimates
                .iter()
                .map(|e| PoseEntryRecord {
                    class_id: e.class_id,
                    quat_wxyz: e.pose.quaternion_wxyz(),
                    t_xyz: [
                        e.pose.translation.x,
                        e.pose.translation.y,
                        e.pose.translation.z,
                    ],
                    residual_rms: e.residual_rms,
                    low_confidence: e.low_confidence(),
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    fn random_keypoints(rng: &mut impl Rng, m: usize) -> Vec<Vector3<f64>> {
        (0..m)
            .map(|_| {
                Vector3::new(
                    rng.gen::<f64>() * 0.2 - 0.1,
                    rng.gen::<f64>() * 0.2 - 0.1,
                    rng.gen::<f64>() * 0.2 - 0.1,
                )
            })
            .collect()
    }

    #[test]
    fn identity_correspondences_give_identity_pose() {
        let mut rng = stream_rng(81, "fit", 0);
        let kps = random_keypoints(&mut rng, 8);
        let (pose, residual) = least_squares_fit(&kps, &kps).unwrap();
        assert!(residual < 1e-12);
        assert!(pose.rotation_angle_to(&RigidTransform::identity()) < 1e-9);
        assert!(pose.translation.norm() < 1e-12);
    }

    #[test]
    fn forward_constructed_poses_are_recovered() {
        let mut rng = stream_rng(83, "fit", 0);
        for _ in 0..1000 {
            let kps = random_keypoints(&mut rng, 8);
            let truth = RigidTransform {
                translation: Vector3::new(
                    rng.gen::<f64>() * 2.0 - 1.0,
                    rng.gen::<f64>() * 2.0 - 1.0,
                    rng.gen::<f64>() * 2.0 - 1.0,
                ),
                ..RigidTransform::random_rotation(&mut rng)
            };
            let predicted: Vec<Vector3<f64>> = kps.iter().map(|k| truth.apply_point(k)).collect();
            let (pose, residual) = least_squares_fit(&kps, &predicted).unwrap();
            assert!(residual < 1e-9);
            let rot_err = (pose.rotation - truth.rotation).norm();
            assert!(rot_err < 1e-9, "rotation frobenius error {rot_err}");
            assert!((pose.translation - truth.translation).norm() < 1e-9);
        }
    }

    #[test]
    fn mirrored_sets_never_produce_reflections() {
        let mut rng = stream_rng(85, "fit", 0);
        for _ in 0..100 {
            let kps = random_keypoints(&mut rng, 8);
            // plant a reflection: mirror x
            let mirrored: Vec<Vector3<f64>> =
                kps.iter().map(|k| Vector3::new(-k.x, k.y, k.z)).collect();
            let (pose, _) = least_squares_fit(&kps, &mirrored).unwrap();
            assert_abs_diff_eq!(pose.rotation.determinant(), 1.0, epsilon = 1e-9);
            assert!(pose.is_valid(1e-9));
        }
    }

    #[test]
    fn svd_residual_beats_a_coarse_rotation_grid() {
        let mut rng = stream_rng(87, "fit", 0);
        let noise = Normal::new(0.0, 0.01).unwrap();
        for _ in 0..20 {
            let kps = random_keypoints(&mut rng, 8);
            let truth = RigidTransform {
                translation: Vector3::new(rng.gen(), rng.gen(), rng.gen()),
                ..RigidTransform::random_rotation(&mut rng)
            };
            let predicted: Vec<Vector3<f64>> = kps
                .iter()
                .map(|k| {
                    truth.apply_point(k)
                        + Vector3::new(
                            noise.sample(&mut rng),
                            noise.sample(&mut rng),
                            noise.sample(&mut rng),
                        )
                })
                .collect();
            let (pose, residual) = least_squares_fit(&kps, &predicted).unwrap();
            let _ = pose;

            // brute force over a 30° Euler grid with the closed-form translation
            let mut grid_best = f64::INFINITY;
            let kc: Vector3<f64> = kps.iter().sum::<Vector3<f64>>() / kps.len() as f64;
            let pc: Vector3<f64> =
                predicted.iter().sum::<Vector3<f64>>() / predicted.len() as f64;
            for yaw in 0..12 {
                for pitch in 0..12 {
                    for roll in 0..12 {
                        let r = nalgebra::Rotation3::from_euler_angles(
                            roll as f64 * 30.0f64.to_radians(),
                            pitch as f64 * 30.0f64.to_radians(),
                            yaw as f64 * 30.0f64.to_radians(),
                        )
                        .into_inner();
                        let t = pc - r * kc;
                        let mut loss = 0.0;
                        for (k, khat) in kps.iter().zip(predicted.iter()) {
                            loss += (khat - (r * k + t)).norm_squared();
                        }
                        grid_best = grid_best.min((loss / kps.len() as f64).sqrt());
                    }
                }
            }
            assert!(
                residual <= grid_best + 1e-12,
                "svd {residual} vs grid {grid_best}"
            );
        }
    }

    #[test]
    fn left_isometry_equivariance() {
        let mut rng = stream_rng(89, "fit", 0);
        for _ in 0..50 {
            let kps = random_keypoints(&mut rng, 8);
            let truth = RigidTransform {
                translation: Vector3::new(rng.gen(), rng.gen(), rng.gen()),
                ..RigidTransform::random_rotation(&mut rng)
            };
            let predicted: Vec<Vector3<f64>> = kps.iter().map(|k| truth.apply_point(k)).collect();
            let q = RigidTransform {
                translation: Vector3::new(rng.gen(), rng.gen(), rng.gen()),
                ..RigidTransform::random_rotation(&mut rng)
            };
            let moved: Vec<Vector3<f64>> = predicted.iter().map(|p| q.apply_point(p)).collect();
            let (pose_a, _) = least_squares_fit(&kps, &predicted).unwrap();
            let (pose_b, _) = least_squares_fit(&kps, &moved).unwrap();
            let expect = q.compose(&pose_a);
            assert!((pose_b.rotation - expect.rotation).norm() < 1e-9);
            assert!((pose_b.translation - expect.translation).norm() < 1e-9);
        }
    }

    #[test]
    fn residual_invariant_to_consistent_relabeling() {
        let mut rng = stream_rng(91, "fit", 0);
        let kps = random_keypoints(&mut rng, 8);
        let noise = Normal::new(0.0, 0.004).unwrap();
        let truth = RigidTransform::random_rotation(&mut rng);
        let predicted: Vec<Vector3<f64>> = kps
            .iter()
            .map(|k| truth.apply_point(k) + Vector3::new(noise.sample(&mut rng), 0.0, 0.0))
            .collect();
        let (_, residual) = least_squares_fit(&kps, &predicted).unwrap();
        let perm = [5usize, 2, 7, 0, 3, 6, 1, 4];
        let kps_p: Vec<Vector3<f64>> = perm.iter().map(|&i| kps[i]).collect();
        let pred_p: Vec<Vector3<f64>> = perm.iter().map(|&i| predicted[i]).collect();
        let (_, residual_p) = least_squares_fit(&kps_p, &pred_p).unwrap();
        assert_abs_diff_eq!(residual, residual_p, epsilon = 1e-12);
    }

    #[test]
    fn collinear_model_keypoints_error_out() {
        let kps: Vec<Vector3<f64>> =
            (0..8).map(|i| Vector3::new(i as f64 * 0.01, 0.0, 0.0)).collect();
        let err = least_squares_fit(&kps, &kps).unwrap_err();
        assert!(matches!(err, Error::DegenerateFit(_)));

        let too_few = vec![Vector3::zeros(), Vector3::x()];
        assert!(least_squares_fit(&too_few, &too_few).is_err());
    }
}
