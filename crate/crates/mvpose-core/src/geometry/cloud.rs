//! Point clouds with per-point provenance, and their PLY serialization.

use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::geometry::transform::RigidTransform;

/// Where a point came from: the view index within its combination and the
/// pixel that generated it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Provenance {
    pub view: u32,
    pub row: u16,
    pub col: u16,
}

#[derive(Debug, Clone)]
pub struct CloudPoint {
    pub position: Vector3<f64>,
    /// Unit surface normal, unset until estimated.
    pub normal: Option<Vector3<f64>>,
    /// RGB in `[0, 1]`.
    pub color: [f64; 3],
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Default)]
pub struct PointCloud {
    points: Vec<CloudPoint>,
}

impl PointCloud {
    pub fn new() -> Self {
        Self { points: Vec::new() }
    }

    pub fn with_capacity(n: usize) -> Self {
        Self {
            points: Vec::with_capacity(n),
        }
    }

    pub fn push(&mut self, point: CloudPoint) {
        self.points.push(point);
    }

    pub fn push_with_provenance(&mut self, position: Vector3<f64>, provenance: Provenance) {
        self.points.push(CloudPoint {
            position,
            normal: None,
            color: [0.0; 3],
            provenance,
        });
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, CloudPoint> {
        self.points.iter()
    }

    pub fn iter_mut(&mut self) -> std::slice::IterMut<'_, CloudPoint> {
        self.points.iter_mut()
    }

    pub fn point(&self, i: usize) -> &CloudPoint {
        &self.points[i]
    }

    pub fn positions(&self) -> Vec<Vector3<f64>> {
        self.points.iter().map(|p| p.position).collect()
    }

    pub fn extend(&mut self, other: PointCloud) {
        self.points.extend(other.points);
    }
}

/// Applies a rigid transform: positions by `p ↦ R·p + t`, normals by
/// `n ↦ R·n`; colors and provenance are untouched.
pub fn transform_cloud(cloud: &PointCloud, t: &RigidTransform) -> PointCloud {
    let mut out = PointCloud::with_capacity(cloud.len());
    for p in cloud.iter() {
        out.push(CloudPoint {
            position: t.apply_point(&p.position),
            normal: p.normal.map(|n| t.apply_vector(&n)),
            color: p.color,
            provenance: p.provenance,
        });
    }
    out
}

const PLY_PROPERTIES: &str = "property float x
property float y
property float z
property float nx
property float ny
property float nz
property uchar red
property uchar green
property uchar blue
property uint view_id
property ushort px_row
property ushort px_col";

/// Writes a binary little-endian PLY with the pipeline's point schema.
/// Unset normals are stored as zeros.
pub fn write_cloud_ply(cloud: &PointCloud, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let header = format!(
        "ply\nformat binary_little_endian 1.0\nelement vertex {}\n{}\nend_header\n",
        cloud.len(),
        PLY_PROPERTIES
    );
    w.write_all(header.as_bytes())
        .map_err(|e| Error::io(path, e))?;
    let mut record = [0u8; 12 * 4 - 12 + 3 + 4 + 4]; // 6*f32 + 3*u8 + u32 + 2*u16 = 35 bytes
    for p in cloud.iter() {
        let n = p.normal.unwrap_or_else(Vector3::zeros);
        let mut off = 0;
        for v in [p.position.x, p.position.y, p.position.z, n.x, n.y, n.z] {
            record[off..off + 4].copy_from_slice(&(v as f32).to_le_bytes());
            off += 4;
        }
        for c in p.color {
            record[off] = (c.clamp(0.0, 1.0) * 255.0).round() as u8;
            off += 1;
        }
        record[off..off + 4].copy_from_slice(&p.provenance.view.to_le_bytes());
        off += 4;
        record[off..off + 2].copy_from_slice(&p.provenance.row.to_le_bytes());
        off += 2;
        record[off..off + 2].copy_from_slice(&p.provenance.col.to_le_bytes());
        w.write_all(&record).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a PLY written by [`write_cloud_ply`]. Zero normals load as unset.
pub fn read_cloud_ply(path: &Path) -> Result<PointCloud> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let mut offset = 0u64;
    let mut line = String::new();
    let mut count: Option<usize> = None;
    let mut in_header = true;
    while in_header {
        line.clear();
        let n = r
            .read_line(&mut line)
            .map_err(|e| Error::io(path, e))?;
        if n == 0 {
            return Err(Error::parse(path, offset, "unexpected end of PLY header"));
        }
        offset += n as u64;
        let trimmed = line.trim();
        if let Some(rest) = trimmed.strip_prefix("element vertex ") {
            count = Some(rest.parse().map_err(|_| {
                Error::parse(path, offset, format!("bad vertex count {rest:?}"))
            })?);
        } else if trimmed == "end_header" {
            in_header = false;
        }
    }
    let count = count.ok_or_else(|| Error::parse(path, offset, "missing element vertex"))?;
    let mut cloud = PointCloud::with_capacity(count);
    let mut record = [0u8; 35];
    for _ in 0..count {
        r.read_exact(&mut record)
            .map_err(|e| Error::io(path, e))?;
        let f = |i: usize| f32::from_le_bytes(record[i..i + 4].try_into().unwrap()) as f64;
        let position = Vector3::new(f(0), f(4), f(8));
        let normal = Vector3::new(f(12), f(16), f(20));
        let color = [
            f64::from(record[24]) / 255.0,
            f64::from(record[25]) / 255.0,
            f64::from(record[26]) / 255.0,
        ];
        let view = u32::from_le_bytes(record[27..31].try_into().unwrap());
        let row = u16::from_le_bytes(record[31..33].try_into().unwrap());
        let col = u16::from_le_bytes(record[33..35].try_into().unwrap());
        cloud.push(CloudPoint {
            position,
            normal: (normal.norm() > 0.0).then(|| normal.normalize()),
            color,
            provenance: Provenance { view, row, col },
        });
    }
    Ok(cloud)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn sample_cloud(n: usize, with_normals: bool) -> PointCloud {
        let mut rng = stream_rng(3, "cloud", n as u64);
        let mut cloud = PointCloud::new();
        for i in 0..n {
            cloud.push(CloudPoint {
                position: Vector3::new(rng.gen::<f64>(), rng.gen(), rng.gen()),
                normal: with_normals.then(|| {
                    Vector3::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5, rng.gen::<f64>())
                        .normalize()
                }),
                color: [rng.gen(), rng.gen(), rng.gen()],
                provenance: Provenance {
                    view: (i % 3) as u32,
                    row: (i % 480) as u16,
                    col: (i % 640) as u16,
                },
            });
        }
        cloud
    }

    #[test]
    fn identity_transform_is_bit_exact() {
        let cloud = sample_cloud(32, true);
        let moved = transform_cloud(&cloud, &RigidTransform::identity());
        for (a, b) in cloud.iter().zip(moved.iter()) {
            assert_eq!(a.position, b.position);
            assert_eq!(a.normal, b.normal);
        }
    }

    #[test]
    fn pure_translation_moves_points() {
        let mut cloud = PointCloud::new();
        cloud.push_with_provenance(
            Vector3::new(1.0, 2.0, 3.0),
            Provenance {
                view: 0,
                row: 0,
                col: 0,
            },
        );
        let t = RigidTransform::from_translation(Vector3::new(0.0, 0.0, 1.0));
        let moved = transform_cloud(&cloud, &t);
        assert_eq!(moved.point(0).position, Vector3::new(1.0, 2.0, 4.0));
    }

    #[test]
    fn rotations_preserve_normal_norms() {
        let cloud = sample_cloud(16, true);
        let mut rng = stream_rng(3, "rot", 0);
        for _ in 0..100 {
            let t = RigidTransform::random_rotation(&mut rng);
            let moved = transform_cloud(&cloud, &t);
            for p in moved.iter() {
                assert_abs_diff_eq!(p.normal.unwrap().norm(), 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn transform_round_trip_restores_cloud() {
        let cloud = sample_cloud(64, true);
        let mut rng = stream_rng(3, "rt", 0);
        let t = RigidTransform {
            translation: Vector3::new(0.4, -1.0, 2.0),
            ..RigidTransform::random_rotation(&mut rng)
        };
        let back = transform_cloud(&transform_cloud(&cloud, &t), &t.invert());
        for (a, b) in cloud.iter().zip(back.iter()) {
            for i in 0..3 {
                assert_abs_diff_eq!(a.position[i], b.position[i], epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn ply_round_trip_preserves_schema_fields() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cloud.ply");
        let cloud = sample_cloud(100, true);
        write_cloud_ply(&cloud, &path).unwrap();
        let back = read_cloud_ply(&path).unwrap();
        assert_eq!(back.len(), cloud.len());
        for (a, b) in cloud.iter().zip(back.iter()) {
            for i in 0..3 {
                assert_abs_diff_eq!(a.position[i], b.position[i], epsilon = 1e-6);
            }
            assert_eq!(a.provenance, b.provenance);
            assert!(b.normal.is_some());
        }
    }
}
