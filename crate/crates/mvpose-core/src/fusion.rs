//! Multi-view point cloud fusion and dense per-point feature association.
//!
//! Depth from every view is back-projected, subsampled, and carried into the
//! frame of the first camera of the combination, keeping the mapping from
//! each point to its generating view and pixel. Feature vectors concatenate
//! a geometric block, the visual block of the associated pixel from the
//! associated view, and a global average-pooled block shared by all points.

use nalgebra::Vector3;
use rand::seq::index::sample as index_sample;

use crate::error::{Error, Result};
use crate::geometry::camera::{backproject, DepthImage, DEFAULT_MAX_DEPTH, DEFAULT_MIN_DEPTH};
use crate::geometry::cloud::{transform_cloud, PointCloud};
use crate::geometry::grid::SpatialGrid;
use crate::geometry::image::ColorImage;
use crate::geometry::normals::{estimate_normals, DEFAULT_NORMAL_NEIGHBORS};
use crate::geometry::transform::RigidTransform;
use crate::rng::stream_rng;

/// Samples drawn per depth map by default; 6,144 is the light setting.
pub const DEFAULT_SAMPLES_PER_VIEW: usize = 12_288;

/// One input view for fusion. `global_id` identifies the physical camera and
/// keys the subsampling stream, so the same camera yields the same point
/// subset no matter where it appears in a combination.
pub struct ViewInput<'a> {
    pub global_id: u32,
    pub depth: &'a DepthImage,
    pub color: &'a ColorImage,
    /// Believed (nominal) camera → world.
    pub camera_pose: RigidTransform,
}

/// A single view back-projected, subsampled, colored, and with normals
/// estimated, still in its own camera frame.
#[derive(Debug, Clone)]
pub struct PreparedView {
    pub global_id: u32,
    pub camera_pose: RigidTransform,
    pub cloud: PointCloud,
}

/// Fused multi-view cloud in the reference (first) camera frame.
#[derive(Debug, Clone)]
pub struct FusedCloud {
    pub points: PointCloud,
    /// Global camera id per combination position.
    pub camera_ids: Vec<u32>,
    /// Nominal camera→world pose per combination position.
    pub view_poses: Vec<RigidTransform>,
    pub samples_per_view: usize,
    pub per_view_counts: Vec<usize>,
}

impl FusedCloud {
    pub fn view_count(&self) -> usize {
        self.camera_ids.len()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Back-projects one view, subsamples to at most `n` points (uniform without
/// replacement, deterministic in `(seed, global_id)`), attaches pixel colors,
/// and estimates normals toward the camera origin.
pub fn prepare_view(view: &ViewInput, n: usize, seed: u64) -> PreparedView {
    let full = backproject(view.depth, DEFAULT_MIN_DEPTH, DEFAULT_MAX_DEPTH);
    let mut cloud = if full.len() > n {
        let mut rng = stream_rng(seed, "view-subsample", u64::from(view.global_id));
        let mut picks = index_sample(&mut rng, full.len(), n).into_vec();
        picks.sort_unstable();
        let mut sub = PointCloud::with_capacity(n);
        for i in picks {
            sub.push(full.point(i).clone());
        }
        sub
    } else {
        full
    };
    for p in cloud.iter_mut() {
        p.color = view
            .color
            .get_unit(p.provenance.row as usize, p.provenance.col as usize);
    }
    if cloud.len() > DEFAULT_NORMAL_NEIGHBORS {
        cloud = estimate_normals(&cloud, DEFAULT_NORMAL_NEIGHBORS, &Vector3::zeros())
            .expect("cloud size checked above");
    }
    PreparedView {
        global_id: view.global_id,
        camera_pose: view.camera_pose,
        cloud,
    }
}

/// Concatenates prepared views into the first view's camera frame.
pub fn fuse_prepared(views: &[&PreparedView], samples_per_view: usize) -> Result<FusedCloud> {
    if views.is_empty() {
        return Err(Error::Config("fusion needs at least one view".into()));
    }
    let reference_inv = views[0].camera_pose.invert();
    let mut points = PointCloud::new();
    let mut camera_ids = Vec::with_capacity(views.len());
    let mut view_poses = Vec::with_capacity(views.len());
    let mut per_view_counts = Vec::with_capacity(views.len());
    for (position, view) in views.iter().enumerate() {
        let to_reference = reference_inv.compose(&view.camera_pose);
        let mut moved = transform_cloud(&view.cloud, &to_reference);
        for p in moved.iter_mut() {
            p.provenance.view = position as u32;
        }
        per_view_counts.push(moved.len());
        points.extend(moved);
        camera_ids.push(view.global_id);
        view_poses.push(view.camera_pose);
    }
    Ok(FusedCloud {
        points,
        camera_ids,
        view_poses,
        samples_per_view,
        per_view_counts,
    })
}

/// Full fusion: prepare every view, then combine into the reference frame.
/// A view with zero valid depth contributes zero points.
pub fn fuse_views(views: &[ViewInput], n: usize, seed: u64) -> Result<FusedCloud> {
    if views.is_empty() {
        return Err(Error::Config("fusion needs at least one view".into()));
    }
    let prepared: Vec<PreparedView> = views.iter().map(|v| prepare_view(v, n, seed)).collect();
    let refs: Vec<&PreparedView> = prepared.iter().collect();
    fuse_prepared(&refs, n)
}

/// Dense per-pixel feature map, `dim` values per pixel, row-major.
#[derive(Debug, Clone)]
pub struct FeatureMap {
    pub dim: usize,
    pub width: u32,
    pub height: u32,
    data: Vec<f64>,
}

impl FeatureMap {
    pub fn new(dim: usize, width: u32, height: u32) -> Self {
        Self {
            dim,
            width,
            height,
            data: vec![0.0; dim * width as usize * height as usize],
        }
    }

    pub fn at(&self, row: usize, col: usize) -> &[f64] {
        let base = (row * self.width as usize + col) * self.dim;
        &self.data[base..base + self.dim]
    }

    pub fn at_mut(&mut self, row: usize, col: usize) -> &mut [f64] {
        let base = (row * self.width as usize + col) * self.dim;
        &mut self.data[base..base + self.dim]
    }
}

/// Per-point feature block, `dim` values per point.
#[derive(Debug, Clone)]
pub struct PointFeatureBlock {
    pub dim: usize,
    data: Vec<f64>,
}

impl PointFeatureBlock {
    pub fn new(dim: usize, len: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * len],
        }
    }

    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.data.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn at(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn at_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }
}

/// Pluggable feature extractors standing in for the learned backbones.
/// Outputs must be deterministic with fixed dimensions.
pub trait FeatureProvider {
    fn visual_dim(&self) -> usize;
    fn geometric_dim(&self) -> usize;
    /// Per-pixel visual features of one view.
    fn visual(&self, image: &ColorImage) -> FeatureMap;
    /// Per-point geometric features of the fused cloud.
    fn geometric(&self, cloud: &FusedCloud) -> PointFeatureBlock;
}

/// Per-point feature vectors laid out `[geometric | visual | global]`, the
/// global block being the mean of `[geometric | visual]` over all points.
#[derive(Debug, Clone)]
pub struct PointFeatures {
    pub dim_geometric: usize,
    pub dim_visual: usize,
    len: usize,
    data: Vec<f64>,
}

impl PointFeatures {
    pub fn stride(&self) -> usize {
        2 * (self.dim_geometric + self.dim_visual)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let s = self.stride();
        &self.data[i * s..(i + 1) * s]
    }

    pub fn geometric(&self, i: usize) -> &[f64] {
        &self.point(i)[..self.dim_geometric]
    }

    pub fn visual(&self, i: usize) -> &[f64] {
        &self.point(i)[self.dim_geometric..self.dim_geometric + self.dim_visual]
    }

    pub fn global(&self, i: usize) -> &[f64] {
        &self.point(i)[self.dim_geometric + self.dim_visual..]
    }
}

/// DenseFusion-style association: each point receives the visual features of
/// the pixel that generated it, from the view that generated it, plus the
/// global average-pooled block.
pub fn dense_fuse(
    cloud: &FusedCloud,
    images: &[&ColorImage],
    provider: &dyn FeatureProvider,
) -> Result<PointFeatures> {
    if images.len() != cloud.view_count() {
        return Err(Error::DimensionMismatch(format!(
            "{} color images for {} views",
            images.len(),
            cloud.view_count()
        )));
    }
    let dg = provider.geometric_dim();
    let dv = provider.visual_dim();
    let maps: Vec<FeatureMap> = images.iter().map(|img| provider.visual(img)).collect();
    for m in &maps {
        if m.dim != dv {
            return Err(Error::DimensionMismatch(format!(
                "visual map dim {} != declared {}",
                m.dim, dv
            )));
        }
    }
    let geo = provider.geometric(cloud);
    if geo.dim != dg {
        return Err(Error::DimensionMismatch(format!(
            "geometric dim {} != declared {}",
            geo.dim, dg
        )));
    }
    if geo.len() != cloud.len() {
        return Err(Error::DimensionMismatch(format!(
            "geometric block has {} points, cloud has {}",
            geo.len(),
            cloud.len()
        )));
    }

    let n = cloud.len();
    let local_dim = dg + dv;
    let stride = 2 * local_dim;
    let mut data = vec![0.0f64; n * stride];
    let mut global = vec![0.0f64; local_dim];
    for (i, p) in cloud.points.iter().enumerate() {
        let view = p.provenance.view as usize;
        let vis = maps[view].at(p.provenance.row as usize, p.provenance.col as usize);
        let out = &mut data[i * stride..i * stride + local_dim];
        out[..dg].copy_from_slice(geo.at(i));
        out[dg..].copy_from_slice(vis);
        for (g, v) in global.iter_mut().zip(out.iter()) {
            *g += v;
        }
    }
    for g in &mut global {
        *g /= n as f64;
    }
    for i in 0..n {
        data[i * stride + local_dim..(i + 1) * stride].copy_from_slice(&global);
    }
    Ok(PointFeatures {
        dim_geometric: dg,
        dim_visual: dv,
        len: n,
        data,
    })
}

/// Default hand-crafted providers: visual features are the pixel RGB plus the
/// luminance-gradient magnitude; geometric features are the normal, height
/// above the lowest fused point, distance to the cloud centroid, and the
/// neighbor count in a 2 cm ball.
#[derive(Debug, Clone, Default)]
pub struct ToyFeatureProvider;

pub const TOY_VISUAL_DIM: usize = 4;
pub const TOY_GEOMETRIC_DIM: usize = 6;
const DENSITY_RADIUS: f64 = 0.02;

impl FeatureProvider for ToyFeatureProvider {
    fn visual_dim(&self) -> usize {
        TOY_VISUAL_DIM
    }

    fn geometric_dim(&self) -> usize {
        TOY_GEOMETRIC_DIM
    }

    fn visual(&self, image: &ColorImage) -> FeatureMap {
        let (w, h) = (image.width as usize, image.height as usize);
        let mut map = FeatureMap::new(TOY_VISUAL_DIM, image.width, image.height);
        for row in 0..h {
            for col in 0..w {
                let rgb = image.get_unit(row, col);
                // central differences, clamped at borders
                let gx = image.luminance(row, (col + 1).min(w - 1))
                    - image.luminance(row, col.saturating_sub(1));
                let gy = image.luminance((row + 1).min(h - 1), col)
                    - image.luminance(row.saturating_sub(1), col);
                let out = map.at_mut(row, col);
                out[0] = rgb[0];
                out[1] = rgb[1];
                out[2] = rgb[2];
                out[3] = (gx * gx + gy * gy).sqrt();
            }
        }
        map
    }

    fn geometric(&self, cloud: &FusedCloud) -> PointFeatureBlock {
        let n = cloud.len();
        let mut block = PointFeatureBlock::new(TOY_GEOMETRIC_DIM, n);
        if n == 0 {
            return block;
        }
        let positions = cloud.points.positions();
        let mut centroid = Vector3::zeros();
        // camera frame is y-down, so the lowest point has the largest y
        let mut y_floor = f64::NEG_INFINITY;
        for p in &positions {
            centroid += p;
            y_floor = y_floor.max(p.y);
        }
        centroid /= n as f64;
        let grid = SpatialGrid::build(&positions, DENSITY_RADIUS);
        for (i, p) in cloud.points.iter().enumerate() {
            let normal = p.normal.unwrap_or_else(Vector3::zeros);
            let (_, count) = grid.ball_sum(&positions[i], DENSITY_RADIUS);
            let out = block.at_mut(i);
            out[0] = normal.x;
            out[1] = normal.y;
            out[2] = normal.z;
            out[3] = y_floor - positions[i].y;
            out[4] = (positions[i] - centroid).norm();
            out[5] = (count.saturating_sub(1)) as f64;
        }
        block
    }
}
