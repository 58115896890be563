//! Shared fixtures for the pipeline benchmarks.

use mvpose_core::geometry::CameraIntrinsics;
use mvpose_core::harness::ExperimentConfig;
use mvpose_core::mesh::ModelLibrary;
use mvpose_core::sim::{simulate_scene, CameraRigSpec, RenderedView, SceneInstance, SceneSpec};

/// A deterministic three-camera scene with all eleven default objects.
pub fn fixture_scene(seed: u64) -> (SceneInstance, ModelLibrary, Vec<RenderedView>) {
    let library = ModelLibrary::builtin();
    let spec = SceneSpec {
        object_classes: library.class_ids(),
        placement_sigma: 0.12,
        rig: CameraRigSpec::default_fixed_ring(),
        intrinsics: CameraIntrinsics::default_vga(),
    };
    let (scene, views) = simulate_scene(&spec, &library, seed, 0, 1).expect("fixture scene");
    (scene, library, views)
}

/// Config matching the throughput gate: 3 views at 6,144 samples per view.
pub fn throughput_config() -> ExperimentConfig {
    ExperimentConfig {
        samples_per_view: 6_144,
        ..ExperimentConfig::default()
    }
}
