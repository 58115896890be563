//! On-disk formats for rendered views and scene manifests.
//!
//! Depth raster: magic "MVDZ", u32 width, u32 height, row-major f32 meters.
//! Segmentation:  magic "MVSG", u32 width, u32 height, row-major u16 class ids.
//! Color raster:  magic "MVCR", u32 width, u32 height, row-major RGB bytes.
//! All integers and floats little-endian.

use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::camera::{CameraIntrinsics, DepthImage};
use crate::geometry::image::ColorImage;
use crate::geometry::transform::{PoseRecord, RigidTransform};
use crate::sim::raster::{RenderedView, SegImage};
use crate::sim::{SceneCamera, SceneInstance, SceneObject};

fn write_header(w: &mut impl Write, magic: &[u8; 4], width: u32, height: u32, path: &Path) -> Result<()> {
    w.write_all(magic).map_err(|e| Error::io(path, e))?;
    w.write_all(&width.to_le_bytes()).map_err(|e| Error::io(path, e))?;
    w.write_all(&height.to_le_bytes()).map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn read_header(bytes: &[u8], magic: &[u8; 4], path: &Path) -> Result<(u32, u32)> {
    if bytes.len() < 12 || &bytes[0..4] != magic {
        return Err(Error::parse(
            path,
            0,
            format!("expected magic {:?}", std::str::from_utf8(magic).unwrap()),
        ));
    }
    let width = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    let height = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    Ok((width, height))
}

pub fn write_depth_raster(depth: &DepthImage, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_header(&mut w, b"MVDZ", depth.intrinsics.width, depth.intrinsics.height, path)?;
    for &d in depth.data() {
        w.write_all(&d.to_le_bytes()).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_depth_raster(path: &Path, intrinsics: CameraIntrinsics) -> Result<DepthImage> {
    let bytes = read_all(path)?;
    let (width, height) = read_header(&bytes, b"MVDZ", path)?;
    let expected = 12 + (width as usize * height as usize) * 4;
    if bytes.len() != expected {
        return Err(Error::parse(path, bytes.len() as u64, "depth raster size mismatch"));
    }
    if width != intrinsics.width || height != intrinsics.height {
        return Err(Error::Data(format!(
            "depth raster {}x{} does not match intrinsics {}x{}",
            width, height, intrinsics.width, intrinsics.height
        )));
    }
    let data = bytes[12..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    DepthImage::new(intrinsics, data)
}

pub fn write_seg_raster(seg: &SegImage, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_header(&mut w, b"MVSG", seg.width, seg.height, path)?;
    for &s in seg.data() {
        w.write_all(&s.to_le_bytes()).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_seg_raster(path: &Path) -> Result<SegImage> {
    let bytes = read_all(path)?;
    let (width, height) = read_header(&bytes, b"MVSG", path)?;
    let expected = 12 + (width as usize * height as usize) * 2;
    if bytes.len() != expected {
        return Err(Error::parse(path, bytes.len() as u64, "seg raster size mismatch"));
    }
    let data = bytes[12..]
        .chunks_exact(2)
        .map(|c| u16::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(SegImage::from_raw(width, height, data))
}

pub fn write_color_raster(color: &ColorImage, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_header(&mut w, b"MVCR", color.width, color.height, path)?;
    for rgb in color.raw() {
        w.write_all(rgb).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_color_raster(path: &Path) -> Result<ColorImage> {
    let bytes = read_all(path)?;
    let (width, height) = read_header(&bytes, b"MVCR", path)?;
    let expected = 12 + (width as usize * height as usize) * 3;
    if bytes.len() != expected {
        return Err(Error::parse(path, bytes.len() as u64, "color raster size mismatch"));
    }
    let data = bytes[12..]
        .chunks_exact(3)
        .map(|c| [c[0], c[1], c[2]])
        .collect();
    Ok(ColorImage::from_raw(width, height, data))
}

fn read_all(path: &Path) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    Ok(bytes)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObjectRecord {
    pub class_id: u16,
    pub pose: PoseRecord,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CameraRecord {
    pub true_pose: PoseRecord,
    pub nominal_pose: PoseRecord,
    pub intrinsics: CameraIntrinsics,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneManifest {
    pub scene_id: u64,
    pub objects: Vec<ObjectRecord>,
    pub cameras: Vec<CameraRecord>,
    #[serde(default)]
    pub resample_count: u32,
}

impl SceneManifest {
    pub fn from_scene(scene: &SceneInstance) -> Self {
        Self {
            scene_id: scene.scene_id,
            objects: scene
                .objects
                .iter()
                .map(|o| ObjectRecord {
                    class_id: o.class_id,
                    pose: PoseRecord::from(&o.gt_pose),
                })
                .collect(),
            cameras: scene
                .cameras
                .iter()
                .map(|c| CameraRecord {
                    true_pose: PoseRecord::from(&c.true_pose),
                    nominal_pose: PoseRecord::from(&c.nominal_pose),
                    intrinsics: c.intrinsics,
                })
                .collect(),
            resample_count: scene.resample_count,
        }
    }

    pub fn to_scene(&self) -> SceneInstance {
        SceneInstance {
            scene_id: self.scene_id,
            objects: self
                .objects
                .iter()
                .map(|o| SceneObject {
                    class_id: o.class_id,
                    gt_pose: RigidTransform::from(&o.pose),
                })
                .collect(),
            cameras: self
                .cameras
                .iter()
                .map(|c| SceneCamera {
                    true_pose: RigidTransform::from(&c.true_pose),
                    nominal_pose: RigidTransform::from(&c.nominal_pose),
                    intrinsics: c.intrinsics,
                })
                .collect(),
            resample_count: self.resample_count,
        }
    }
}

pub fn write_scene_manifest(scene: &SceneInstance, path: &Path) -> Result<()> {
    let manifest = SceneManifest::from_scene(scene);
    let text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::Data(format!("scene manifest serialization: {e}")))?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_scene_manifest(path: &Path) -> Result<SceneManifest> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, 0, e.to_string()))
}

/// Writes the three rasters of a rendered view using a shared stem:
/// `<stem>_depth.mvdz`, `<stem>_seg.mvsg`, `<stem>_color.mvcr`.
pub fn write_view_rasters(view: &RenderedView, dir: &Path, stem: &str) -> Result<()> {
    write_depth_raster(&view.depth, &dir.join(format!("{stem}_depth.mvdz")))?;
    write_seg_raster(&view.seg, &dir.join(format!("{stem}_seg.mvsg")))?;
    write_color_raster(&view.color, &dir.join(format!("{stem}_color.mvcr")))
}

pub fn read_view_rasters(dir: &Path, stem: &str, intrinsics: CameraIntrinsics) -> Result<RenderedView> {
    Ok(RenderedView {
        depth: read_depth_raster(&dir.join(format!("{stem}_depth.mvdz")), intrinsics)?,
        seg: read_seg_raster(&dir.join(format!("{stem}_seg.mvsg")))?,
        color: read_color_raster(&dir.join(format!("{stem}_color.mvcr")))?,
    })
}
