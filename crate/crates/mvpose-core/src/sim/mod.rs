//! Synthetic multi-camera scene simulator: cluttered object placement,
//! three camera-rig families, and depth/segmentation/color rendering.

pub mod io;
pub mod raster;

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::camera::CameraIntrinsics;
use crate::geometry::transform::RigidTransform;
use crate::mesh::ModelLibrary;
use crate::rng::stream_rng;

pub use raster::{render_view, RenderedView, SegImage};

/// Camera rig families. A ring rig spends its cameras at equal azimuth
/// intervals; the wiggle variant perturbs each true camera position with
/// isotropic Gaussian noise while the nominal poses keep the ideal ring;
/// the sphere rig spawns each camera in a distinct azimuth quadrant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CameraRigSpec {
    FixedRing {
        count: usize,
        radius: f64,
        height: f64,
    },
    WiggleRing {
        count: usize,
        radius: f64,
        height: f64,
        position_sigma: f64,
    },
    SphereQuadrant {
        count: usize,
        radius_range: [f64; 2],
    },
}

impl CameraRigSpec {
    pub fn default_fixed_ring() -> Self {
        CameraRigSpec::FixedRing {
            count: 3,
            radius: 0.8,
            height: 0.6,
        }
    }

    pub fn default_wiggle_ring(position_sigma: f64) -> Self {
        CameraRigSpec::WiggleRing {
            count: 3,
            radius: 0.8,
            height: 0.6,
            position_sigma,
        }
    }

    pub fn default_sphere_quadrant() -> Self {
        CameraRigSpec::SphereQuadrant {
            count: 4,
            radius_range: [0.7, 1.0],
        }
    }

    pub fn camera_count(&self) -> usize {
        match self {
            CameraRigSpec::FixedRing { count, .. } => *count,
            CameraRigSpec::WiggleRing { count, .. } => *count,
            CameraRigSpec::SphereQuadrant { count, .. } => *count,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            CameraRigSpec::FixedRing { count, radius, height } => {
                count >= 1 && radius > 0.0 && height > 0.0
            }
            CameraRigSpec::WiggleRing { count, radius, height, position_sigma } => {
                count >= 1 && radius > 0.0 && height > 0.0 && position_sigma >= 0.0
            }
            CameraRigSpec::SphereQuadrant { count, radius_range } => {
                count >= 1 && count <= 4 && radius_range[0] > 0.0 && radius_range[1] >= radius_range[0]
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid camera rig {self:?}")))
        }
    }
}

#[derive(Debug, Clone)]
pub struct SceneObject {
    pub class_id: u16,
    /// Object frame → world.
    pub gt_pose: RigidTransform,
}

#[derive(Debug, Clone)]
pub struct SceneCamera {
    /// Physical camera → world: where the camera actually is.
    pub true_pose: RigidTransform,
    /// Believed camera → world: what downstream fusion uses.
    pub nominal_pose: RigidTransform,
    pub intrinsics: CameraIntrinsics,
}

#[derive(Debug, Clone)]
pub struct SceneInstance {
    pub scene_id: u64,
    pub objects: Vec<SceneObject>,
    pub cameras: Vec<SceneCamera>,
    /// How many whole-scene resamples the visibility gate consumed.
    pub resample_count: u32,
}

/// Geometric knobs of scene generation. One instance per object class.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneSpec {
    pub object_classes: Vec<u16>,
    /// Std-dev of the Gaussian spawn offset around the scene center (m).
    pub placement_sigma: f64,
    pub rig: CameraRigSpec,
    pub intrinsics: CameraIntrinsics,
}

impl SceneSpec {
    pub fn validate(&self, library: &ModelLibrary) -> Result<()> {
        if self.object_classes.is_empty() {
            return Err(Error::Config("scene needs at least one object class".into()));
        }
        for &c in &self.object_classes {
            library.get(c)?;
        }
        if !(self.placement_sigma > 0.0) {
            return Err(Error::Config("placement sigma must be positive".into()));
        }
        self.rig.validate()?;
        self.intrinsics.validate()
    }
}

const PLACEMENT_TRIES: usize = 100;
/// Reject placements whose bounding spheres penetrate more than this
/// fraction of the smaller sphere's diameter.
const MAX_SPHERE_OVERLAP: f64 = 0.30;

/// Camera→world look-at pose: z forward toward `target`, x right, y down.
pub fn look_at(eye: Vector3<f64>, target: Vector3<f64>) -> RigidTransform {
    let forward = (target - eye).normalize();
    let up = if forward.z.abs() < 0.999 {
        Vector3::z()
    } else {
        Vector3::x()
    };
    let right = forward.cross(&up).normalize();
    let down = forward.cross(&right);
    let rotation = Matrix3::from_columns(&[right, down, forward]);
    RigidTransform::new(rotation, eye)
}

fn ring_positions(count: usize, radius: f64, height: f64) -> Vec<Vector3<f64>> {
    (0..count)
        .map(|i| {
            let azimuth = std::f64::consts::TAU * i as f64 / count as f64;
            Vector3::new(radius * azimuth.cos(), radius * azimuth.sin(), height)
        })
        .collect()
}

fn build_cameras(
    rig: &CameraRigSpec,
    intrinsics: CameraIntrinsics,
    seed: u64,
    scene_index: u64,
    attempt: u64,
) -> Vec<SceneCamera> {
    let target = Vector3::zeros();
    match *rig {
        CameraRigSpec::FixedRing { count, radius, height } => ring_positions(count, radius, height)
            .into_iter()
            .map(|p| {
                let pose = look_at(p, target);
                SceneCamera {
                    true_pose: pose,
                    nominal_pose: pose,
                    intrinsics,
                }
            })
            .collect(),
        CameraRigSpec::WiggleRing { count, radius, height, position_sigma } => {
            let mut rng = stream_rng(seed, "rig-wiggle", scene_index * 64 + attempt);
            let normal = Normal::new(0.0, position_sigma).expect("sigma >= 0");
            ring_positions(count, radius, height)
                .into_iter()
                .map(|p| {
                    let offset = Vector3::new(
                        normal.sample(&mut rng),
                        normal.sample(&mut rng),
                        normal.sample(&mut rng),
                    );
                    SceneCamera {
                        true_pose: look_at(p + offset, target),
                        nominal_pose: look_at(p, target),
                        intrinsics,
                    }
                })
                .collect()
        }
        CameraRigSpec::SphereQuadrant { count, radius_range } => {
            let mut rng = stream_rng(seed, "rig-sphere", scene_index * 64 + attempt);
            (0..count)
                .map(|i| {
                    // camera i spawns in azimuth quadrant i
                    let quarter = std::f64::consts::FRAC_PI_2;
                    let azimuth = quarter * i as f64 + rng.gen::<f64>() * quarter;
                    let elevation = (20.0 + rng.gen::<f64>() * 50.0).to_radians();
                    let radius = radius_range[0] + rng.gen::<f64>() * (radius_range[1] - radius_range[0]);
                    let p = Vector3::new(
                        radius * elevation.cos() * azimuth.cos(),
                        radius * elevation.cos() * azimuth.sin(),
                        radius * elevation.sin(),
                    );
                    let pose = look_at(p, target);
                    SceneCamera {
                        true_pose: pose,
                        nominal_pose: pose,
                        intrinsics,
                    }
                })
                .collect()
        }
    }
}

/// Penetration of two bounding spheres as a fraction of the smaller
/// sphere's diameter: 0 when just touching, 1 when fully swallowed.
fn sphere_overlap_fraction(c1: &Vector3<f64>, r1: f64, c2: &Vector3<f64>, r2: f64) -> f64 {
    let d = (c1 - c2).norm();
    let penetration = r1 + r2 - d;
    if penetration <= 0.0 {
        0.0
    } else {
        penetration / (2.0 * r1.min(r2))
    }
}

/// Generates one cluttered scene: object orientations are uniform on SO(3),
/// positions Gaussian around the scene center with z clamped to keep each
/// object's bounding sphere above the ground, placements resampled until no
/// two bounding spheres overlap more than 30%.
///
/// Deterministic in `(seed, scene_index)`; `attempt` shifts every stream and
/// is used by the visibility resampling loop in [`simulate_scene`].
pub fn generate_scene_attempt(
    spec: &SceneSpec,
    library: &ModelLibrary,
    seed: u64,
    scene_index: u64,
    attempt: u64,
) -> Result<SceneInstance> {
    spec.validate(library)?;
    let mut rng = stream_rng(seed, "scene-objects", scene_index * 64 + attempt);
    let normal = Normal::new(0.0, spec.placement_sigma).expect("sigma > 0");

    let mut placed: Vec<(Vector3<f64>, f64)> = Vec::new();
    let mut objects = Vec::with_capacity(spec.object_classes.len());
    for &class_id in &spec.object_classes {
        let model = library.get(class_id)?;
        let rotation = RigidTransform::random_rotation(&mut rng);
        let mut accepted = None;
        for _ in 0..PLACEMENT_TRIES {
            let mut p = Vector3::new(
                normal.sample(&mut rng),
                normal.sample(&mut rng),
                normal.sample(&mut rng),
            );
            p.z = p.z.max(model.radius);
            let clear = placed
                .iter()
                .all(|(c, r)| sphere_overlap_fraction(&p, model.radius, c, *r) <= MAX_SPHERE_OVERLAP);
            if clear {
                accepted = Some(p);
                break;
            }
        }
        let position = accepted.ok_or(Error::PlacementFailed {
            tries: PLACEMENT_TRIES,
        })?;
        placed.push((position, model.radius));
        objects.push(SceneObject {
            class_id,
            gt_pose: RigidTransform::new(rotation.rotation, position),
        });
    }

    let cameras = build_cameras(&spec.rig, spec.intrinsics, seed, scene_index, attempt);
    Ok(SceneInstance {
        scene_id: scene_index,
        objects,
        cameras,
        resample_count: attempt as u32,
    })
}

/// [`generate_scene_attempt`] at attempt 0.
pub fn generate_scene(
    spec: &SceneSpec,
    library: &ModelLibrary,
    seed: u64,
    scene_index: u64,
) -> Result<SceneInstance> {
    generate_scene_attempt(spec, library, seed, scene_index, 0)
}

const MAX_VISIBILITY_RESAMPLES: u64 = 50;

/// Generates a scene and renders every view, resampling the whole scene
/// until each object is visible with at least `min_visible_pixels` summed
/// across cameras. The accepted attempt index is recorded on the scene.
pub fn simulate_scene(
    spec: &SceneSpec,
    library: &ModelLibrary,
    seed: u64,
    scene_index: u64,
    min_visible_pixels: usize,
) -> Result<(SceneInstance, Vec<RenderedView>)> {
    for attempt in 0..MAX_VISIBILITY_RESAMPLES {
        let scene = generate_scene_attempt(spec, library, seed, scene_index, attempt)?;
        let views: Vec<RenderedView> = (0..scene.cameras.len())
            .map(|ci| render_view(&scene, library, ci))
            .collect::<Result<_>>()?;
        let mut visible = vec![0usize; spec.object_classes.len()];
        for view in &views {
            for &label in view.seg.data() {
                if label != 0 {
                    if let Some(slot) = spec
                        .object_classes
                        .iter()
                        .position(|&c| c == label)
                    {
                        visible[slot] += 1;
                    }
                }
            }
        }
        if visible.iter().all(|&v| v >= min_visible_pixels.max(1)) {
            return Ok((scene, views));
        }
    }
    Err(Error::Data(format!(
        "scene {scene_index} failed the visibility gate after {MAX_VISIBILITY_RESAMPLES} resamples"
    )))
}

/// All camera combinations for `k` of `V` views.
///
/// For `k = V` the full list is rotated so every camera leads once; for
/// `k < V` each ascending k-subset appears once. The first index of each
/// combination defines the prediction frame.
pub fn enumerate_camera_combinations(view_count_total: usize, k: usize) -> Result<Vec<Vec<usize>>> {
    if k == 0 || k > view_count_total {
        return Err(Error::Config(format!(
            "cannot choose {k} views out of {view_count_total}"
        )));
    }
    if k == view_count_total {
        return Ok((0..view_count_total)
            .map(|start| (0..view_count_total).map(|i| (start + i) % view_count_total).collect())
            .collect());
    }
    let mut combos = Vec::new();
    let mut current: Vec<usize> = (0..k).collect();
    loop {
        combos.push(current.clone());
        // next ascending combination
        let mut i = k;
        loop {
            if i == 0 {
                return Ok(combos);
            }
            i -= 1;
            if current[i] != i + view_count_total - k {
                break;
            }
            if i == 0 {
                return Ok(combos);
            }
        }
        current[i] += 1;
        for j in i + 1..k {
            current[j] = current[j - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn default_spec(rig: CameraRigSpec) -> SceneSpec {
        SceneSpec {
            object_classes: ModelLibrary::builtin().class_ids(),
            placement_sigma: 0.12,
            rig,
            intrinsics: CameraIntrinsics::default_vga(),
        }
    }

    #[test]
    fn fixed_ring_azimuths_are_equally_spaced() {
        let lib = ModelLibrary::builtin();
        let spec = default_spec(CameraRigSpec::default_fixed_ring());
        let scene = generate_scene(&spec, &lib, 1, 0).unwrap();
        assert_eq!(scene.cameras.len(), 3);
        let az: Vec<f64> = scene
            .cameras
            .iter()
            .map(|c| c.true_pose.translation.y.atan2(c.true_pose.translation.x))
            .collect();
        for i in 0..3 {
            let diff = (az[(i + 1) % 3] - az[i]).rem_euclid(std::f64::consts::TAU);
            assert_abs_diff_eq!(diff, 120f64.to_radians(), epsilon = 1e-9);
        }
    }

    #[test]
    fn zero_sigma_wiggle_reduces_to_fixed_ring() {
        let lib = ModelLibrary::builtin();
        let fixed = generate_scene(&default_spec(CameraRigSpec::default_fixed_ring()), &lib, 9, 4).unwrap();
        let wiggle = generate_scene(&default_spec(CameraRigSpec::default_wiggle_ring(0.0)), &lib, 9, 4).unwrap();
        for (a, b) in fixed.cameras.iter().zip(wiggle.cameras.iter()) {
            assert_eq!(a.true_pose.translation, b.true_pose.translation);
            assert_eq!(a.true_pose.rotation, b.true_pose.rotation);
            assert_eq!(b.true_pose.translation, b.nominal_pose.translation);
        }
        for (a, b) in fixed.objects.iter().zip(wiggle.objects.iter()) {
            assert_eq!(a.gt_pose.translation, b.gt_pose.translation);
        }
    }

    #[test]
    fn sphere_quadrant_cameras_occupy_distinct_quadrants() {
        let lib = ModelLibrary::builtin();
        let spec = default_spec(CameraRigSpec::default_sphere_quadrant());
        for scene_index in 0..5 {
            let scene = generate_scene(&spec, &lib, 3, scene_index).unwrap();
            let mut quadrants: Vec<usize> = scene
                .cameras
                .iter()
                .map(|c| {
                    let az = c
                        .true_pose
                        .translation
                        .y
                        .atan2(c.true_pose.translation.x)
                        .rem_euclid(std::f64::consts::TAU);
                    (az / std::f64::consts::FRAC_PI_2) as usize
                })
                .collect();
            quadrants.sort_unstable();
            quadrants.dedup();
            assert_eq!(quadrants.len(), 4, "cameras share a quadrant");
        }
    }

    #[test]
    fn cameras_look_at_scene_center() {
        let lib = ModelLibrary::builtin();
        for rig in [
            CameraRigSpec::default_fixed_ring(),
            CameraRigSpec::default_wiggle_ring(0.005),
            CameraRigSpec::default_sphere_quadrant(),
        ] {
            let scene = generate_scene(&default_spec(rig), &lib, 5, 2).unwrap();
            for cam in &scene.cameras {
                let to_center = (-cam.true_pose.translation).normalize();
                let forward = cam.true_pose.rotation.column(2);
                assert_abs_diff_eq!(to_center.dot(&forward), 1.0, epsilon = 1e-9);
                assert!(cam.true_pose.is_valid(1e-9));
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let lib = ModelLibrary::builtin();
        let spec = default_spec(CameraRigSpec::default_fixed_ring());
        let a = generate_scene(&spec, &lib, 11, 7).unwrap();
        let b = generate_scene(&spec, &lib, 11, 7).unwrap();
        for (x, y) in a.objects.iter().zip(b.objects.iter()) {
            assert_eq!(x.gt_pose.rotation, y.gt_pose.rotation);
            assert_eq!(x.gt_pose.translation, y.gt_pose.translation);
        }
    }

    #[test]
    fn objects_rest_above_ground_without_deep_overlap() {
        let lib = ModelLibrary::builtin();
        let spec = default_spec(CameraRigSpec::default_fixed_ring());
        for scene_index in 0..20 {
            let scene = generate_scene(&spec, &lib, 2, scene_index).unwrap();
            for obj in &scene.objects {
                let r = lib.get(obj.class_id).unwrap().radius;
                assert!(obj.gt_pose.translation.z >= r - 1e-12);
            }
            for i in 0..scene.objects.len() {
                for j in i + 1..scene.objects.len() {
                    let (a, b) = (&scene.objects[i], &scene.objects[j]);
                    let overlap = sphere_overlap_fraction(
                        &a.gt_pose.translation,
                        lib.get(a.class_id).unwrap().radius,
                        &b.gt_pose.translation,
                        lib.get(b.class_id).unwrap().radius,
                    );
                    assert!(overlap <= MAX_SPHERE_OVERLAP + 1e-12);
                }
            }
        }
    }

    #[test]
    fn combinations_full_rotation() {
        let combos = enumerate_camera_combinations(3, 3).unwrap();
        assert_eq!(combos, vec![vec![0, 1, 2], vec![1, 2, 0], vec![2, 0, 1]]);
    }

    #[test]
    fn combinations_subsets() {
        let combos = enumerate_camera_combinations(3, 2).unwrap();
        assert_eq!(combos, vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        let combos = enumerate_camera_combinations(4, 2).unwrap();
        assert_eq!(
            combos,
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![0, 3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3]
            ]
        );
    }

    #[test]
    fn combinations_single_view() {
        assert_eq!(enumerate_camera_combinations(1, 1).unwrap(), vec![vec![0]]);
        assert!(enumerate_camera_combinations(2, 3).is_err());
    }

    #[test]
    fn wiggle_offsets_have_requested_sigma() {
        let lib = ModelLibrary::builtin();
        let sigma = 0.005;
        let spec = default_spec(CameraRigSpec::default_wiggle_ring(sigma));
        let mut offsets = Vec::new();
        for scene_index in 0..1000 {
            let cams = build_cameras(&spec.rig, spec.intrinsics, 77, scene_index, 0);
            for c in cams {
                let d = c.true_pose.translation - c.nominal_pose.translation;
                offsets.extend_from_slice(&[d.x, d.y, d.z]);
            }
        }
        let n = offsets.len() as f64;
        let mean: f64 = offsets.iter().sum::<f64>() / n;
        let var: f64 = offsets.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        let measured = var.sqrt();
        assert!(
            (measured - sigma).abs() / sigma < 0.10,
            "sigma {measured} vs requested {sigma}"
        );
        let _ = lib;
    }
}
