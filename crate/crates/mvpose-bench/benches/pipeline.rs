use criterion::{black_box, criterion_group, criterion_main, Criterion};
use nalgebra::Vector3;
use rand::Rng;

use mvpose_bench::{fixture_scene, throughput_config};
use mvpose_core::fitting::least_squares_fit;
use mvpose_core::fusion::{fuse_views, ViewInput};
use mvpose_core::harness::estimate_scene_combos;
use mvpose_core::rng::stream_rng;
use mvpose_core::sim::render_view;
use mvpose_core::voting::{mean_shift, MeanShiftConfig};
use mvpose_core::RigidTransform;

fn bench_render(c: &mut Criterion) {
    let (scene, library, _) = fixture_scene(1);
    c.bench_function("render_view_vga", |b| {
        b.iter(|| black_box(render_view(&scene, &library, 0).unwrap()))
    });
}

fn bench_fuse(c: &mut Criterion) {
    let (scene, _library, views) = fixture_scene(2);
    c.bench_function("fuse_three_views_6144", |b| {
        b.iter(|| {
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
            black_box(fuse_views(&inputs, 6_144, 0).unwrap())
        })
    });
}

fn bench_mean_shift(c: &mut Criterion) {
    let mut rng = stream_rng(3, "bench", 0);
    let votes: Vec<Vector3<f64>> = (0..2_000)
        .map(|_| {
            Vector3::new(
                0.3 + rng.gen::<f64>() * 0.02,
                -0.1 + rng.gen::<f64>() * 0.02,
                0.9 + rng.gen::<f64>() * 0.02,
            )
        })
        .collect();
    let cfg = MeanShiftConfig::default();
    c.bench_function("mean_shift_2000_votes", |b| {
        b.iter(|| black_box(mean_shift(&votes, &cfg)))
    });
}

fn bench_fit(c: &mut Criterion) {
    let mut rng = stream_rng(4, "bench", 0);
    let kps: Vec<Vector3<f64>> = (0..8)
        .map(|_| Vector3::new(rng.gen(), rng.gen(), rng.gen()))
        .collect();
    let truth = RigidTransform::random_rotation(&mut rng);
    let predicted: Vec<Vector3<f64>> = kps.iter().map(|k| truth.apply_point(k)).collect();
    c.bench_function("least_squares_fit_8", |b| {
        b.iter(|| black_box(least_squares_fit(&kps, &predicted).unwrap()))
    });
}

fn bench_scene_pipeline(c: &mut Criterion) {
    let (scene, library, views) = fixture_scene(5);
    let config = throughput_config();
    let mut group = c.benchmark_group("scene");
    group.sample_size(10);
    group.bench_function("pipeline_3view_6144", |b| {
        b.iter(|| {
            black_box(estimate_scene_combos(&scene, &views, &library, &config, &[3]).unwrap())
        })
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_render,
    bench_fuse,
    bench_mean_shift,
    bench_fit,
    bench_scene_pipeline
);
criterion_main!(benches);
