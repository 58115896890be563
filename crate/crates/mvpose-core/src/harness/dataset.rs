//! On-disk dataset layout.
//!
//! ```text
//! <root>/
//!   index.json                  dataset index: config + scene table
//!   models/                     manifest.json, *.ply, keypoints_XX.json
//!   scenes/scene_000000/
//!     manifest.json             poses, cameras, intrinsics
//!     view_00_depth.mvdz        + _seg.mvsg, _color.mvcr per camera
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::ExperimentConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

/// 90/10 split by scene index: every tenth scene is test.
pub fn split_of(scene_index: u64) -> Split {
    if scene_index % 10 == 9 {
        Split::Test
    } else {
        Split::Train
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneEntry {
    pub scene_id: u64,
    pub split: Split,
    pub resamples: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetIndex {
    pub config: ExperimentConfig,
    pub scenes: Vec<SceneEntry>,
}

pub fn index_path(root: &Path) -> PathBuf {
    root.join("index.json")
}

pub fn models_dir(root: &Path) -> PathBuf {
    root.join("models")
}

pub fn scene_dir(root: &Path, scene_id: u64) -> PathBuf {
    root.join("scenes").join(format!("scene_{scene_id:06}"))
}

pub fn view_stem(camera_index: usize) -> String {
    format!("view_{camera_index:02}")
}

pub fn estimate_file_name(scene_id: u64, camera_ids: &[usize]) -> String {
    let cams: Vec<String> = camera_ids.iter().map(|c| c.to_string()).collect();
    format!(
        "scene_{scene_id:06}_k{}_cams_{}.json",
        camera_ids.len(),
        cams.join("-")
    )
}

impl DatasetIndex {
    pub fn write(&self, root: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Data(format!("index serialization: {e}")))?;
        std::fs::write(index_path(root), text).map_err(|e| Error::io(index_path(root), e))
    }

    pub fn read(root: &Path) -> Result<Self> {
        let path = index_path(root);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(&path, 0, e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_is_ninety_ten() {
        let test_count = (0..10).filter(|&i| split_of(i) == Split::Test).count();
        assert_eq!(test_count, 1);
        assert_eq!(split_of(9), Split::Test);
        assert_eq!(split_of(19), Split::Test);
        assert_eq!(split_of(10), Split::Train);
    }

    #[test]
    fn estimate_names_are_stable() {
        assert_eq!(
            estimate_file_name(9, &[2, 0, 1]),
            "scene_000009_k3_cams_2-0-1.json"
        );
    }
}
