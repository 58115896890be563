//! Area-weighted surface sampling.

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::cloud::{PointCloud, Provenance};
use crate::mesh::TriangleMesh;
use crate::rng::stream_rng;

/// Draws `n` points uniformly over the mesh surface: triangles are chosen
/// proportionally to area, positions by uniform barycentric coordinates.
/// Deterministic for a given seed.
pub fn sample_surface(mesh: &TriangleMesh, n: usize, seed: u64) -> Result<PointCloud> {
    if mesh.is_empty() {
        return Err(Error::EmptyMesh);
    }
    assert!(n >= 1, "sample count must be at least 1");

    let mut cumulative = Vec::with_capacity(mesh.triangles.len());
    let mut total = 0.0;
    for t in 0..mesh.triangles.len() {
        total += mesh.triangle_area(t);
        cumulative.push(total);
    }
    if total <= 0.0 {
        return Err(Error::EmptyMesh);
    }

    let mut rng = stream_rng(seed, "surface-sample", 0);
    let mut cloud = PointCloud::with_capacity(n);
    for _ in 0..n {
        let pick = rng.gen::<f64>() * total;
        let t = cumulative.partition_point(|&c| c < pick).min(mesh.triangles.len() - 1);
        let [ia, ib, ic] = mesh.triangles[t];
        let (a, b, c) = (
            mesh.vertices[ia as usize],
            mesh.vertices[ib as usize],
            mesh.vertices[ic as usize],
        );
        let (r1, r2): (f64, f64) = (rng.gen(), rng.gen());
        let sqrt_r1 = r1.sqrt();
        let u = 1.0 - sqrt_r1;
        let v = r2 * sqrt_r1;
        let p = a * u + b * v + c * (1.0 - u - v);
        cloud.push(crate::geometry::cloud::CloudPoint {
            position: p,
            normal: None,
            color: mesh.base_color,
            provenance: Provenance {
                view: 0,
                row: 0,
                col: 0,
            },
        });
    }
    Ok(cloud)
}

/// Index of the triangle each sample in `sample_surface` order came from.
/// Exposed for tests that need the generating triangle.
pub fn sample_surface_with_triangles(
    mesh: &TriangleMesh,
    n: usize,
    seed: u64,
) -> Result<(PointCloud, Vec<usize>)> {
    if mesh.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let mut cumulative = Vec::with_capacity(mesh.triangles.len());
    let mut total = 0.0;
    for t in 0..mesh.triangles.len() {
        total += mesh.triangle_area(t);
        cumulative.push(total);
    }
    let mut rng = stream_rng(seed, "surface-sample", 0);
    let mut cloud = PointCloud::with_capacity(n);
    let mut tri_ids = Vec::with_capacity(n);
    for _ in 0..n {
        let pick = rng.gen::<f64>() * total;
        let t = cumulative.partition_point(|&c| c < pick).min(mesh.triangles.len() - 1);
        tri_ids.push(t);
        let [ia, ib, ic] = mesh.triangles[t];
        let (a, b, c) = (
            mesh.vertices[ia as usize],
            mesh.vertices[ib as usize],
            mesh.vertices[ic as usize],
        );
        let (r1, r2): (f64, f64) = (rng.gen(), rng.gen());
        let sqrt_r1 = r1.sqrt();
        let u = 1.0 - sqrt_r1;
        let v = r2 * sqrt_r1;
        cloud.push(crate::geometry::cloud::CloudPoint {
            position: a * u + b * v + c * (1.0 - u - v),
            normal: None,
            color: mesh.base_color,
            provenance: Provenance {
                view: 0,
                row: 0,
                col: 0,
            },
        });
    }
    Ok((cloud, tri_ids))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives::box_mesh;
    use crate::mesh::TriangleMesh;
    use nalgebra::Vector3;

    #[test]
    fn cube_faces_get_equal_shares() {
        let mesh = box_mesh(1.0, 1.0, 1.0, 1);
        let n = 60_000;
        let cloud = sample_surface(&mesh, n, 0).unwrap();
        // classify samples by the face they landed on
        let mut counts = [0usize; 6];
        for p in cloud.iter() {
            let v = p.position;
            let candidates = [
                (0, (v.x + 0.5).abs()),
                (1, (v.x - 0.5).abs()),
                (2, (v.y + 0.5).abs()),
                (3, (v.y - 0.5).abs()),
                (4, (v.z + 0.5).abs()),
                (5, (v.z - 0.5).abs()),
            ];
            let face = candidates
                .iter()
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap()
                .0;
            counts[face] += 1;
        }
        let expect = n as f64 / 6.0;
        for c in counts {
            let share_err = (c as f64 - expect).abs() / n as f64;
            assert!(share_err < 0.02, "face share off by {share_err}");
        }
    }

    #[test]
    fn single_triangle_samples_stay_inside() {
        let mesh = TriangleMesh::new(
            vec![
                Vector3::new(0.0, 0.0, 0.0),
                Vector3::new(1.0, 0.0, 0.0),
                Vector3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2]],
        );
        let cloud = sample_surface(&mesh, 10, 7).unwrap();
        assert_eq!(cloud.len(), 10);
        for p in cloud.iter() {
            let v = p.position;
            assert!(v.x >= 0.0 && v.y >= 0.0 && v.x + v.y <= 1.0 + 1e-12);
            assert!(v.z.abs() < 1e-15);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let mesh = box_mesh(0.2, 0.3, 0.1, 2);
        let a = sample_surface(&mesh, 500, 42).unwrap();
        let b = sample_surface(&mesh, 500, 42).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(x.position, y.position);
        }
    }

    #[test]
    fn samples_lie_on_generating_triangle_plane() {
        let mesh = box_mesh(0.2, 0.15, 0.3, 2);
        let (cloud, tris) = sample_surface_with_triangles(&mesh, 2_000, 3).unwrap();
        for (p, &t) in cloud.iter().zip(tris.iter()) {
            let [a, b, c] = mesh.triangles[t];
            let (a, b, c) = (
                mesh.vertices[a as usize],
                mesh.vertices[b as usize],
                mesh.vertices[c as usize],
            );
            let n = (b - a).cross(&(c - a)).normalize();
            let dist = (p.position - a).dot(&n).abs();
            assert!(dist < 1e-9, "sample {dist} off its triangle plane");
        }
    }

    #[test]
    fn empty_mesh_is_an_error() {
        let mesh = TriangleMesh::new(vec![], vec![]);
        assert!(matches!(
            sample_surface(&mesh, 10, 0),
            Err(Error::EmptyMesh)
        ));
    }
}
