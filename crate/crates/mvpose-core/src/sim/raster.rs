//! Software z-buffer rasterizer producing depth, segmentation, and flat
//! color renders of a scene.
//!
//! Coverage and depth are evaluated at integer pixel coordinates so that
//! `backproject` inverts the render exactly. Depth across a triangle is
//! interpolated perspective-correctly via 1/z.

use nalgebra::Vector3;

use crate::error::Result;
use crate::geometry::camera::DepthImage;
use crate::geometry::image::ColorImage;
use crate::mesh::ModelLibrary;
use crate::sim::SceneInstance;

const NEAR_PLANE: f64 = 0.01;
const BACKGROUND_COLOR: [u8; 3] = [28, 28, 32];

/// Ground-truth class id per pixel; 0 is background.
#[derive(Debug, Clone)]
pub struct SegImage {
    pub width: u32,
    pub height: u32,
    data: Vec<u16>,
}

impl SegImage {
    pub fn from_raw(width: u32, height: u32, data: Vec<u16>) -> Self {
        assert_eq!(data.len(), width as usize * height as usize);
        Self { width, height, data }
    }

    pub fn get(&self, row: usize, col: usize) -> u16 {
        self.data[row * self.width as usize + col]
    }

    pub fn data(&self) -> &[u16] {
        &self.data
    }
}

#[derive(Debug, Clone)]
pub struct RenderedView {
    pub depth: DepthImage,
    pub color: ColorImage,
    pub seg: SegImage,
}

/// Renders one camera of a scene with hidden surfaces removed by z-buffer.
/// Depth holds the camera-frame z of the nearest surface, segmentation the
/// class of that surface, color its flat base color.
pub fn render_view(
    scene: &SceneInstance,
    library: &ModelLibrary,
    camera_index: usize,
) -> Result<RenderedView> {
    let camera = scene
        .cameras
        .get(camera_index)
        .ok_or_else(|| crate::error::Error::Config(format!("no camera {camera_index}")))?;
    let intr = camera.intrinsics;
    let (w, h) = (intr.width as usize, intr.height as usize);
    let world_to_cam = camera.true_pose.invert();

    let mut zbuf = vec![f64::INFINITY; w * h];
    let mut seg = vec![0u16; w * h];
    let mut color = vec![BACKGROUND_COLOR; w * h];

    let mut cam_verts: Vec<Vector3<f64>> = Vec::new();
    for obj in &scene.objects {
        let model = library.get(obj.class_id)?;
        let rgb = [
            (model.mesh.base_color[0].clamp(0.0, 1.0) * 255.0).round() as u8,
            (model.mesh.base_color[1].clamp(0.0, 1.0) * 255.0).round() as u8,
            (model.mesh.base_color[2].clamp(0.0, 1.0) * 255.0).round() as u8,
        ];
        let object_to_cam = world_to_cam.compose(&obj.gt_pose);
        cam_verts.clear();
        cam_verts.extend(model.mesh.vertices.iter().map(|v| object_to_cam.apply_point(v)));

        for tri in &model.mesh.triangles {
            let verts = [
                cam_verts[tri[0] as usize],
                cam_verts[tri[1] as usize],
                cam_verts[tri[2] as usize],
            ];
            for clipped in clip_near(&verts) {
                raster_triangle(
                    &clipped,
                    &intr,
                    obj.class_id,
                    rgb,
                    &mut zbuf,
                    &mut seg,
                    &mut color,
                );
            }
        }
    }

    let depth_data: Vec<f32> = zbuf
        .iter()
        .map(|&z| if z.is_finite() { z as f32 } else { 0.0 })
        .collect();
    Ok(RenderedView {
        depth: DepthImage::new(intr, depth_data)?,
        color: ColorImage::from_raw(intr.width, intr.height, color),
        seg: SegImage::from_raw(intr.width, intr.height, seg),
    })
}

/// Sutherland-Hodgman clip of a camera-frame triangle against z = NEAR_PLANE,
/// returning zero, one, or two triangles.
fn clip_near(verts: &[Vector3<f64>; 3]) -> Vec<[Vector3<f64>; 3]> {
    let inside = |v: &Vector3<f64>| v.z > NEAR_PLANE;
    let inside_count = verts.iter().filter(|v| inside(v)).count();
    match inside_count {
        3 => return vec![*verts],
        0 => return vec![],
        _ => {}
    }
    let mut poly: Vec<Vector3<f64>> = Vec::with_capacity(4);
    for i in 0..3 {
        let a = verts[i];
        let b = verts[(i + 1) % 3];
        let (ain, bin) = (inside(&a), inside(&b));
        if ain {
            poly.push(a);
        }
        if ain != bin {
            let t = (NEAR_PLANE - a.z) / (b.z - a.z);
            poly.push(a + (b - a) * t);
        }
    }
    let mut out = Vec::with_capacity(poly.len().saturating_sub(2));
    for i in 1..poly.len().saturating_sub(1) {
        out.push([poly[0], poly[i], poly[i + 1]]);
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn raster_triangle(
    verts: &[Vector3<f64>; 3],
    intr: &crate::geometry::camera::CameraIntrinsics,
    class_id: u16,
    rgb: [u8; 3],
    zbuf: &mut [f64],
    seg: &mut [u16],
    color: &mut [[u8; 3]],
) {
    let (w, h) = (intr.width as usize, intr.height as usize);
    let p: [(f64, f64); 3] = [
        intr.project(&verts[0]),
        intr.project(&verts[1]),
        intr.project(&verts[2]),
    ];
    let area = edge(p[0], p[1], p[2]);
    if area == 0.0 {
        return;
    }

    let min_u = p.iter().map(|q| q.0).fold(f64::INFINITY, f64::min).ceil().max(0.0) as usize;
    let max_u = p.iter().map(|q| q.0).fold(f64::NEG_INFINITY, f64::max).floor();
    let min_v = p.iter().map(|q| q.1).fold(f64::INFINITY, f64::min).ceil().max(0.0) as usize;
    let max_v = p.iter().map(|q| q.1).fold(f64::NEG_INFINITY, f64::max).floor();
    if max_u < 0.0 || max_v < 0.0 {
        return;
    }
    let max_u = (max_u as usize).min(w - 1);
    let max_v = (max_v as usize).min(h - 1);
    if min_u > max_u || min_v > max_v {
        return;
    }

    let inv_z = [1.0 / verts[0].z, 1.0 / verts[1].z, 1.0 / verts[2].z];
    let inv_area = 1.0 / area;
    for v in min_v..=max_v {
        let row = v * w;
        for u in min_u..=max_u {
            let q = (u as f64, v as f64);
            let w0 = edge(p[1], p[2], q) * inv_area;
            let w1 = edge(p[2], p[0], q) * inv_area;
            let w2 = edge(p[0], p[1], q) * inv_area;
            if w0 < 0.0 || w1 < 0.0 || w2 < 0.0 {
                continue;
            }
            let z = 1.0 / (w0 * inv_z[0] + w1 * inv_z[1] + w2 * inv_z[2]);
            let idx = row + u;
            if z < zbuf[idx] {
                zbuf[idx] = z;
                seg[idx] = class_id;
                color[idx] = rgb;
            }
        }
    }
}

/// Signed twice-area of triangle (a, b, q).
fn edge(a: (f64, f64), b: (f64, f64), q: (f64, f64)) -> f64 {
    (b.0 - a.0) * (q.1 - a.1) - (b.1 - a.1) * (q.0 - a.0)
}
