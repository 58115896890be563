//! Coordinate substrate: rigid transforms, pinhole cameras, depth
//! back-projection, point clouds, and normal estimation.
//!
//! All operations here are pure functions of their inputs and safe to call
//! concurrently.

pub mod camera;
pub mod cloud;
pub mod grid;
pub mod image;
pub mod normals;
pub mod transform;

pub use camera::{backproject, CameraIntrinsics, DepthImage, DEFAULT_MAX_DEPTH, DEFAULT_MIN_DEPTH};
pub use cloud::{read_cloud_ply, transform_cloud, write_cloud_ply, CloudPoint, PointCloud, Provenance};
pub use grid::SpatialGrid;
pub use image::ColorImage;
pub use normals::{estimate_normals, DEFAULT_NORMAL_NEIGHBORS};
pub use transform::{PoseRecord, RigidTransform};
