//! Pinhole camera model and depth-image back-projection.
//!
//! Camera frame convention: x right, y down, z forward. Pixel `(row, col)`
//! maps to image coordinates `u = col`, `v = row`; rays are evaluated at
//! integer pixel coordinates, matching the renderer's sampling points.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::cloud::{PointCloud, Provenance};

/// Default validity window for depth values, in meters.
pub const DEFAULT_MIN_DEPTH: f64 = 0.01;
pub const DEFAULT_MAX_DEPTH: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl CameraIntrinsics {
    /// Kinect-like defaults used by the simulator.
    pub fn default_vga() -> Self {
        Self {
            fx: 580.0,
            fy: 580.0,
            cx: 320.0,
            cy: 240.0,
            width: 640,
            height: 480,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(Error::Config("focal lengths must be positive".into()));
        }
        if !(self.cx > 0.0 && self.cx < f64::from(self.width)) {
            return Err(Error::Config("principal point cx outside image".into()));
        }
        if !(self.cy > 0.0 && self.cy < f64::from(self.height)) {
            return Err(Error::Config("principal point cy outside image".into()));
        }
        Ok(())
    }

    /// Lifts pixel `(u, v)` at depth `d` to a camera-frame point.
    pub fn unproject(&self, u: f64, v: f64, d: f64) -> Vector3<f64> {
        Vector3::new((u - self.cx) * d / self.fx, (v - self.cy) * d / self.fy, d)
    }

    /// Projects a camera-frame point to pixel coordinates `(u, v)`.
    /// The caller is responsible for checking `p.z > 0`.
    pub fn project(&self, p: &Vector3<f64>) -> (f64, f64) {
        (
            p.x * self.fx / p.z + self.cx,
            p.y * self.fy / p.z + self.cy,
        )
    }
}

/// Per-pixel depth in meters, row-major; values ≤ 0 are invalid.
#[derive(Debug, Clone)]
pub struct DepthImage {
    pub intrinsics: CameraIntrinsics,
    data: Vec<f32>,
}

impl DepthImage {
    pub fn new(intrinsics: CameraIntrinsics, data: Vec<f32>) -> Result<Self> {
        let expected = intrinsics.width as usize * intrinsics.height as usize;
        if data.len() != expected {
            return Err(Error::Data(format!(
                "depth buffer has {} samples, intrinsics imply {}",
                data.len(),
                expected
            )));
        }
        Ok(Self { intrinsics, data })
    }

    pub fn width(&self) -> usize {
        self.intrinsics.width as usize
    }

    pub fn height(&self) -> usize {
        self.intrinsics.height as usize
    }

    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.data[row * self.width() + col]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn valid_pixel_count(&self, min_depth: f64, max_depth: f64) -> usize {
        self.data
            .iter()
            .filter(|&&d| {
                let d = f64::from(d);
                d > min_depth && d <= max_depth
            })
            .count()
    }
}

/// Back-projects every valid depth pixel into a camera-frame point cloud.
///
/// A pixel with depth `d` is kept iff `min_depth < d ≤ max_depth`. Points
/// carry provenance `(view 0, row, col)`; the caller rewrites the view index
/// when clouds from several views are combined. Normals are left unset and
/// colors default to black until a color image is associated.
pub fn backproject(depth: &DepthImage, min_depth: f64, max_depth: f64) -> PointCloud {
    let mut cloud = PointCloud::new();
    let intr = &depth.intrinsics;
    for row in 0..depth.height() {
        for col in 0..depth.width() {
            let d = f64::from(depth.get(row, col));
            if d > min_depth && d <= max_depth {
                let p = intr.unproject(col as f64, row as f64, d);
                cloud.push_with_provenance(
                    p,
                    Provenance {
                        view: 0,
                        row: row as u16,
                        col: col as u16,
                    },
                );
            }
        }
    }
    cloud
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn small_intrinsics() -> CameraIntrinsics {
        CameraIntrinsics {
            fx: 100.0,
            fy: 100.0,
            cx: 32.0,
            cy: 24.0,
            width: 64,
            height: 48,
        }
    }

    #[test]
    fn principal_ray_maps_to_optical_axis() {
        let intr = small_intrinsics();
        let mut data = vec![0.0f32; 64 * 48];
        data[24 * 64 + 32] = 1.0;
        let depth = DepthImage::new(intr, data).unwrap();
        let cloud = backproject(&depth, DEFAULT_MIN_DEPTH, DEFAULT_MAX_DEPTH);
        assert_eq!(cloud.len(), 1);
        let p = cloud.positions()[0];
        assert_abs_diff_eq!(p.x, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.y, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.z, 1.0, epsilon = 1e-7);
    }

    #[test]
    fn unit_focal_offset_pixel() {
        // pixel (cx + fx, cy) at depth 2 → (2, 0, 2)
        let intr = CameraIntrinsics {
            fx: 10.0,
            fy: 10.0,
            cx: 16.0,
            cy: 12.0,
            width: 32,
            height: 24,
        };
        let mut data = vec![0.0f32; 32 * 24];
        data[12 * 32 + 26] = 2.0;
        let depth = DepthImage::new(intr, data).unwrap();
        let cloud = backproject(&depth, DEFAULT_MIN_DEPTH, DEFAULT_MAX_DEPTH);
        assert_eq!(cloud.len(), 1);
        let p = cloud.positions()[0];
        assert_abs_diff_eq!(p.x, 2.0, epsilon = 1e-7);
        assert_abs_diff_eq!(p.y, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.z, 2.0, epsilon = 1e-7);
    }

    #[test]
    fn all_invalid_depth_yields_empty_cloud() {
        let depth = DepthImage::new(small_intrinsics(), vec![0.0f32; 64 * 48]).unwrap();
        let cloud = backproject(&depth, DEFAULT_MIN_DEPTH, DEFAULT_MAX_DEPTH);
        assert!(cloud.is_empty());
    }

    #[test]
    fn backproject_then_reproject_recovers_pixels() {
        let intr = small_intrinsics();
        let mut data = vec![0.0f32; 64 * 48];
        for (i, d) in data.iter_mut().enumerate() {
            *d = 0.5 + (i % 97) as f32 * 0.05;
        }
        let depth = DepthImage::new(intr, data).unwrap();
        let cloud = backproject(&depth, DEFAULT_MIN_DEPTH, DEFAULT_MAX_DEPTH);
        assert_eq!(cloud.len(), 64 * 48);
        for point in cloud.iter() {
            let (u, v) = intr.project(&point.position);
            assert_abs_diff_eq!(u, f64::from(point.provenance.col), epsilon = 1e-6);
            assert_abs_diff_eq!(v, f64::from(point.provenance.row), epsilon = 1e-6);
        }
    }

    #[test]
    fn depth_window_bounds_are_enforced() {
        let intr = small_intrinsics();
        let mut data = vec![0.0f32; 64 * 48];
        data[0] = 0.005; // below min
        data[1] = 5.0;
        data[2] = 11.0; // above max
        data[3] = -1.0;
        let depth = DepthImage::new(intr, data).unwrap();
        let cloud = backproject(&depth, DEFAULT_MIN_DEPTH, DEFAULT_MAX_DEPTH);
        assert_eq!(cloud.len(), 1);
        assert_eq!(cloud.iter().next().unwrap().provenance.col, 1);
    }
}
