//! Ground-truth-derived stand-in for the learned network heads.
//!
//! Labels come from the rendered segmentation at each point's generating
//! pixel; offsets are the true vectors to the instance center and keypoints
//! with configurable corruption (isotropic Gaussian offset noise, uniform
//! label flips). Offsets live in the reference camera frame.
//!
//! Ground truth is mapped per view: a point generated by camera `g` votes
//! with the instance pose as seen by camera `g`, carried into the reference
//! frame through the same nominal poses the fusion used. With exact camera
//! poses this is the reference-frame ground truth; with wiggled cameras the
//! per-view votes disagree by the calibration error, the way a network
//! trained on per-view appearance would.

use std::io::{BufWriter, Read, Write};
use std::path::Path;

use nalgebra::Vector3;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::fusion::FusedCloud;
use crate::keypoints::KEYPOINTS_PER_OBJECT;
use crate::mesh::ModelLibrary;
use crate::rng::stream_rng;
use crate::sim::{SceneInstance, SegImage};

#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct OracleConfig {
    /// Std-dev of additive Gaussian noise on every offset vector (m).
    pub offset_sigma: f64,
    /// Probability a point's label is replaced by a uniformly random other
    /// class, background included.
    pub label_flip_rate: f64,
    pub seed: u64,
}

impl OracleConfig {
    pub fn exact(seed: u64) -> Self {
        Self {
            offset_sigma: 0.0,
            label_flip_rate: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.offset_sigma < 0.0 {
            return Err(Error::Config("offset sigma must be non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.label_flip_rate) {
            return Err(Error::Config("label flip rate must be in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Per-point network-head surrogate output for one fused cloud.
#[derive(Debug, Clone)]
pub struct PredictionBundle {
    pub labels: Vec<u16>,
    pub center_offsets: Vec<Vector3<f64>>,
    pub keypoint_offsets: Vec<[Vector3<f64>; KEYPOINTS_PER_OBJECT]>,
}

impl PredictionBundle {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Emits labels and offsets for every fused point, deterministic in
/// `cfg.seed`. `segs` must hold one segmentation per scene camera, indexed
/// by global camera id.
pub fn oracle_predict(
    cloud: &FusedCloud,
    scene: &SceneInstance,
    segs: &[&SegImage],
    library: &ModelLibrary,
    cfg: &OracleConfig,
) -> Result<PredictionBundle> {
    cfg.validate()?;
    if segs.len() != scene.cameras.len() {
        return Err(Error::Data(format!(
            "{} segmentation rasters for {} cameras",
            segs.len(),
            scene.cameras.len()
        )));
    }
    for &id in &cloud.camera_ids {
        if id as usize >= scene.cameras.len() {
            return Err(Error::Data(format!("fused cloud references camera {id}")));
        }
    }

    // per (view position, object): posed center and keypoints in the
    // reference frame, mapped through the generating view
    let reference_inv = cloud.view_poses[0].invert();
    let mut per_view_targets: Vec<Vec<(u16, Vector3<f64>, [Vector3<f64>; KEYPOINTS_PER_OBJECT])>> =
        Vec::with_capacity(cloud.view_count());
    for position in 0..cloud.view_count() {
        let g = cloud.camera_ids[position] as usize;
        let cam = &scene.cameras[g];
        // believed placement of geometry seen by camera g
        let map = reference_inv
            .compose(&cam.nominal_pose)
            .compose(&cam.true_pose.invert());
        let mut targets = Vec::with_capacity(scene.objects.len());
        for obj in &scene.objects {
            let model = library.get(obj.class_id)?;
            let center_world = obj.gt_pose.apply_point(&model.center);
            let kps_world: [Vector3<f64>; KEYPOINTS_PER_OBJECT] =
                std::array::from_fn(|j| obj.gt_pose.apply_point(&model.keypoints[j]));
            targets.push((
                obj.class_id,
                map.apply_point(&center_world),
                std::array::from_fn(|j| map.apply_point(&kps_world[j])),
            ));
        }
        per_view_targets.push(targets);
    }

    let max_class = library.max_class_id();
    let mut flip_rng = stream_rng(cfg.seed, "oracle-flip", 0);
    let mut noise_rng = stream_rng(cfg.seed, "oracle-noise", 0);
    let noise = Normal::new(0.0, cfg.offset_sigma).expect("sigma >= 0");

    let n = cloud.len();
    let mut labels = Vec::with_capacity(n);
    let mut center_offsets = Vec::with_capacity(n);
    let mut keypoint_offsets = Vec::with_capacity(n);
    for p in cloud.points.iter() {
        let position = p.provenance.view as usize;
        let g = cloud.camera_ids[position] as usize;
        let seg = segs[g];
        let (row, col) = (p.provenance.row as usize, p.provenance.col as usize);
        if row >= seg.height as usize || col >= seg.width as usize {
            return Err(Error::Data(format!(
                "provenance pixel ({row}, {col}) outside {}x{} segmentation",
                seg.width, seg.height
            )));
        }
        let true_label = seg.get(row, col);

        let mut label = true_label;
        if cfg.label_flip_rate > 0.0 && flip_rng.gen::<f64>() < cfg.label_flip_rate {
            // uniform over the other classes, background included
            let r = flip_rng.gen_range(0..u32::from(max_class));
            label = if r >= u32::from(true_label) { (r + 1) as u16 } else { r as u16 };
        }

        if true_label == 0 {
            center_offsets.push(Vector3::zeros());
            keypoint_offsets.push([Vector3::zeros(); KEYPOINTS_PER_OBJECT]);
        } else {
            let targets = &per_view_targets[position];
            let (_, center, kps) = targets
                .iter()
                .find(|(c, _, _)| *c == true_label)
                .ok_or_else(|| {
                    Error::Data(format!("segmentation labels class {true_label} not in scene"))
                })?;
            let mut draw3 = |base: Vector3<f64>| {
                if cfg.offset_sigma > 0.0 {
                    base + Vector3::new(
                        noise.sample(&mut noise_rng),
                        noise.sample(&mut noise_rng),
                        noise.sample(&mut noise_rng),
                    )
                } else {
                    base
                }
            };
            center_offsets.push(draw3(center - p.position));
            keypoint_offsets.push(std::array::from_fn(|j| draw3(kps[j] - p.position)));
        }
        labels.push(label);
    }

    Ok(PredictionBundle {
        labels,
        center_offsets,
        keypoint_offsets,
    })
}

/// Binary bundle format: magic "MVPB", u32 point count, u32 keypoint count,
/// then per point a u16 label, 3 f32 center offset, and 8×3 f32 keypoint
/// offsets, little-endian.
pub fn write_bundle(bundle: &PredictionBundle, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(b"MVPB").map_err(|e| Error::io(path, e))?;
    w.write_all(&(bundle.len() as u32).to_le_bytes())
        .map_err(|e| Error::io(path, e))?;
    w.write_all(&(KEYPOINTS_PER_OBJECT as u32).to_le_bytes())
        .map_err(|e| Error::io(path, e))?;
    for i in 0..bundle.len() {
        w.write_all(&bundle.labels[i].to_le_bytes())
            .map_err(|e| Error::io(path, e))?;
        let c = bundle.center_offsets[i];
        for v in [c.x, c.y, c.z] {
            w.write_all(&(v as f32).to_le_bytes())
                .map_err(|e| Error::io(path, e))?;
        }
        for kp in &bundle.keypoint_offsets[i] {
            for v in [kp.x, kp.y, kp.z] {
                w.write_all(&(v as f32).to_le_bytes())
                    .map_err(|e| Error::io(path, e))?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_bundle(path: &Path) -> Result<PredictionBundle> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    if bytes.len() < 12 || &bytes[0..4] != b"MVPB" {
        return Err(Error::parse(path, 0, "expected MVPB magic"));
    }
    let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let m = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if m != KEYPOINTS_PER_OBJECT {
        return Err(Error::parse(path, 8, format!("bundle has {m} keypoints")));
    }
    let record = 2 + 4 * 3 + 4 * 3 * m;
    if bytes.len() != 12 + n * record {
        return Err(Error::parse(path, bytes.len() as u64, "bundle size mismatch"));
    }
    let mut labels = Vec::with_capacity(n);
    let mut center_offsets = Vec::with_capacity(n);
    let mut keypoint_offsets = Vec::with_capacity(n);
    let mut off = 12;
    let f = |bytes: &[u8], off: usize| -> f64 {
        f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()) as f64
    };
    for _ in 0..n {
        labels.push(u16::from_le_bytes(bytes[off..off + 2].try_into().unwrap()));
        off += 2;
        center_offsets.push(Vector3::new(f(&bytes, off), f(&bytes, off + 4), f(&bytes, off + 8)));
        off += 12;
        keypoint_offsets.push(std::array::from_fn(|_| {
            let v = Vector3::new(f(&bytes, off), f(&bytes, off + 4), f(&bytes, off + 8));
            off += 12;
            v
        }));
    }
    Ok(PredictionBundle {
        labels,
        center_offsets,
        keypoint_offsets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::{fuse_views, ViewInput};
    use crate::geometry::camera::CameraIntrinsics;
    use crate::sim::{generate_scene, render_view, CameraRigSpec, RenderedView, SceneSpec};

    fn fused_scene(
        seed: u64,
    ) -> (crate::sim::SceneInstance, ModelLibrary, Vec<RenderedView>, FusedCloud) {
        let lib = ModelLibrary::builtin();
        let spec = SceneSpec {
            object_classes: lib.class_ids(),
            placement_sigma: 0.12,
            rig: CameraRigSpec::default_fixed_ring(),
            intrinsics: CameraIntrinsics::default_vga(),
        };
        let scene = generate_scene(&spec, &lib, seed, 0).unwrap();
        let views: Vec<_> = (0..3).map(|ci| render_view(&scene, &lib, ci).unwrap()).collect();
        let inputs: Vec<ViewInput> = views
            .iter()
            .enumerate()
            .map(|(i, v)| ViewInput {
                global_id: i as u32,
                depth: &v.depth,
                color: &v.color,
                camera_pose: scene.cameras[i].nominal_pose,
            })
            .collect();
        let fused = fuse_views(&inputs, 6_144, seed).unwrap();
        (scene, lib, views, fused)
    }

    #[test]
    fn zero_noise_offsets_reconstruct_gt_keypoints() {
        let (scene, lib, views, fused) = fused_scene(51);
        let segs: Vec<&SegImage> = views.iter().map(|v| &v.seg).collect();
        let bundle =
            oracle_predict(&fused, &scene, &segs, &lib, &OracleConfig::exact(1)).unwrap();
        let ref_inv = scene.cameras[0].nominal_pose.invert();
        let mut object_points = 0;
        for (i, p) in fused.points.iter().enumerate() {
            let label = bundle.labels[i];
            if label == 0 {
                continue;
            }
            object_points += 1;
            let obj = scene.objects.iter().find(|o| o.class_id == label).unwrap();
            let model = lib.get(label).unwrap();
            let gt_pose_ref = ref_inv.compose(&obj.gt_pose);
            for j in 0..KEYPOINTS_PER_OBJECT {
                let vote = p.position + bundle.keypoint_offsets[i][j];
                let expect = gt_pose_ref.apply_point(&model.keypoints[j]);
                assert!(
                    (vote - expect).norm() < 1e-9,
                    "vote off by {}",
                    (vote - expect).norm()
                );
            }
            let vote = p.position + bundle.center_offsets[i];
            let expect = gt_pose_ref.apply_point(&model.center);
            assert!((vote - expect).norm() < 1e-9);
        }
        assert!(object_points > 1_000);
    }

    #[test]
    fn flip_rate_one_with_two_classes_inverts_labels() {
        let lib_two = ModelLibrary::from_models(vec![crate::mesh::ObjectModel::from_mesh(
            1,
            "slab",
            crate::mesh::primitives::box_mesh(0.1, 0.1, 0.05, 2),
            false,
        )
        .unwrap()])
        .unwrap();
        let spec = SceneSpec {
            object_classes: vec![1],
            placement_sigma: 0.05,
            rig: CameraRigSpec::default_fixed_ring(),
            intrinsics: CameraIntrinsics::default_vga(),
        };
        let scene = generate_scene(&spec, &lib_two, 53, 0).unwrap();
        let views: Vec<_> = (0..3).map(|ci| render_view(&scene, &lib_two, ci).unwrap()).collect();
        let inputs: Vec<ViewInput> = views
            .iter()
            .enumerate()
            .map(|(i, v)| ViewInput {
                global_id: i as u32,
                depth: &v.depth,
                color: &v.color,
                camera_pose: scene.cameras[i].nominal_pose,
            })
            .collect();
        let fused = fuse_views(&inputs, 2_000, 1).unwrap();
        let segs: Vec<&SegImage> = views.iter().map(|v| &v.seg).collect();
        let cfg = OracleConfig {
            offset_sigma: 0.0,
            label_flip_rate: 1.0,
            seed: 5,
        };
        let bundle = oracle_predict(&fused, &scene, &segs, &lib_two, &cfg).unwrap();
        for (i, p) in fused.points.iter().enumerate() {
            let true_label = views[fused.camera_ids[p.provenance.view as usize] as usize]
                .seg
                .get(p.provenance.row as usize, p.provenance.col as usize);
            assert_eq!(bundle.labels[i], 1 - true_label, "label must invert");
        }
    }

    #[test]
    fn offset_noise_has_requested_sigma() {
        let (scene, lib, views, fused) = fused_scene(55);
        let segs: Vec<&SegImage> = views.iter().map(|v| &v.seg).collect();
        let sigma = 0.005;
        let cfg = OracleConfig {
            offset_sigma: sigma,
            label_flip_rate: 0.0,
            seed: 9,
        };
        let clean =
            oracle_predict(&fused, &scene, &segs, &lib, &OracleConfig::exact(9)).unwrap();
        let noisy = oracle_predict(&fused, &scene, &segs, &lib, &cfg).unwrap();
        let mut residuals: Vec<f64> = Vec::new();
        for i in 0..fused.len() {
            if clean.labels[i] == 0 {
                continue;
            }
            for j in 0..KEYPOINTS_PER_OBJECT {
                let d = noisy.keypoint_offsets[i][j] - clean.keypoint_offsets[i][j];
                residuals.extend_from_slice(&[d.x, d.y, d.z]);
            }
        }
        assert!(residuals.len() > 100_000);
        let n = residuals.len() as f64;
        let mean: f64 = residuals.iter().sum::<f64>() / n;
        let var = residuals.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        let measured = var.sqrt();
        assert!(
            (measured - sigma).abs() / sigma < 0.05,
            "measured sigma {measured}"
        );
    }

    #[test]
    fn corruption_is_deterministic_and_serializable() {
        let (scene, lib, views, fused) = fused_scene(57);
        let segs: Vec<&SegImage> = views.iter().map(|v| &v.seg).collect();
        let cfg = OracleConfig {
            offset_sigma: 0.008,
            label_flip_rate: 0.05,
            seed: 77,
        };
        let a = oracle_predict(&fused, &scene, &segs, &lib, &cfg).unwrap();
        let b = oracle_predict(&fused, &scene, &segs, &lib, &cfg).unwrap();
        assert_eq!(a.labels, b.labels);
        for i in 0..a.len() {
            assert_eq!(a.center_offsets[i], b.center_offsets[i]);
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bundle.mvpb");
        write_bundle(&a, &path).unwrap();
        let back = read_bundle(&path).unwrap();
        assert_eq!(back.labels, a.labels);
        for i in 0..a.len() {
            assert!((back.center_offsets[i] - a.center_offsets[i]).norm() < 1e-6);
        }
    }
}
