//! Multi-view RGB-D 6D pose estimation pipeline.
//!
//! The crate covers the full non-neural path of a keypoint-voting pose
//! estimator: multi-camera point-cloud fusion with dense per-point feature
//! association, center/keypoint offset voting with mean-shift clustering,
//! least-squares pose fitting, the ADD/ADD-S evaluation suite, and a
//! synthetic multi-camera scene simulator plus a ground-truth-derived
//! oracle predictor that stands in for the learned network heads.

pub mod error;
pub mod fitting;
pub mod fusion;
pub mod geometry;
pub mod harness;
pub mod keypoints;
pub mod losses;
pub mod mesh;
pub mod metrics;
pub mod oracle;
pub mod rng;
pub mod sim;
pub mod voting;

pub use error::{Error, Result};
pub use fitting::{estimate_poses, least_squares_fit, PoseEstimate};
pub use fusion::{dense_fuse, fuse_views, FeatureProvider, FusedCloud, PointFeatures, ToyFeatureProvider, ViewInput};
pub use geometry::{CameraIntrinsics, ColorImage, DepthImage, PointCloud, RigidTransform};
pub use keypoints::{farthest_point_sample, KeypointSet, KEYPOINTS_PER_OBJECT};
pub use mesh::{ModelLibrary, ObjectModel, TriangleMesh};
pub use metrics::{add_distance, add_s_distance, auc, combined_distance, percent_below, MetricsReport};
pub use oracle::{oracle_predict, OracleConfig, PredictionBundle};
pub use sim::{enumerate_camera_combinations, generate_scene, render_view, CameraRigSpec, SceneInstance};
pub use voting::{mean_shift, InstanceHypothesis, MeanShiftConfig};
