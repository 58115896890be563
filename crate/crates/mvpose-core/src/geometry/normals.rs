//! PCA surface normal estimation.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::geometry::cloud::PointCloud;
use crate::geometry::grid::SpatialGrid;

/// Default neighborhood size for normal estimation.
pub const DEFAULT_NORMAL_NEIGHBORS: usize = 16;

/// Estimates a unit normal per point from the covariance of its `k` nearest
/// neighbors (plus the point itself), oriented so that
/// `normal · (viewpoint − position) ≥ 0`.
///
/// Fails if the cloud holds fewer than `k + 1` points.
pub fn estimate_normals(
    cloud: &PointCloud,
    k: usize,
    viewpoint: &Vector3<f64>,
) -> Result<PointCloud> {
    assert!(k >= 3, "normal estimation needs k >= 3");
    if cloud.len() < k + 1 {
        return Err(Error::InsufficientPoints {
            needed: k + 1,
            have: cloud.len(),
        });
    }
    let positions = cloud.positions();
    let cell = neighbor_cell_size(&positions, k);
    let grid = SpatialGrid::build(&positions, cell);

    let mut out = cloud.clone();
    for (i, point) in out.iter_mut().enumerate() {
        let neighbors = grid.knn(&positions[i], k, Some(i));
        let mut mean = positions[i];
        for &(j, _) in &neighbors {
            mean += positions[j];
        }
        mean /= (neighbors.len() + 1) as f64;

        let mut cov = Matrix3::zeros();
        let mut accumulate = |p: &Vector3<f64>| {
            let d = p - mean;
            cov += d * d.transpose();
        };
        accumulate(&positions[i]);
        for &(j, _) in &neighbors {
            accumulate(&positions[j]);
        }

        let eig = cov.symmetric_eigen();
        let mut min_idx = 0;
        for c in 1..3 {
            if eig.eigenvalues[c] < eig.eigenvalues[min_idx] {
                min_idx = c;
            }
        }
        let mut normal: Vector3<f64> = eig.eigenvectors.column(min_idx).into();
        let len = normal.norm();
        if len > 0.0 {
            normal /= len;
        } else {
            normal = Vector3::z();
        }
        if normal.dot(&(viewpoint - positions[i])) < 0.0 {
            normal = -normal;
        }
        point.normal = Some(normal);
    }
    Ok(out)
}

/// Cell size that puts the k-neighborhood of a roughly uniform cloud within
/// a small number of grid rings.
fn neighbor_cell_size(positions: &[Vector3<f64>], k: usize) -> f64 {
    let mut lo = positions[0];
    let mut hi = positions[0];
    for p in positions {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let extent = hi - lo;
    let volume = (extent.x.max(1e-6)) * (extent.y.max(1e-6)) * (extent.z.max(1e-6));
    let per_point = volume / positions.len() as f64;
    (per_point * k as f64).cbrt().max(1e-6)
}
