//! Experiment orchestration: dataset generation, end-to-end estimation,
//! evaluation, the view-count ablation, and the camera-wiggle sweep.
//! Everything is deterministic from the experiment seed; scenes run on a
//! worker pool and results merge in scene order.

pub mod dataset;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitting::{estimate_poses, SceneEstimates};
use crate::fusion::{dense_fuse, fuse_prepared, prepare_view, PreparedView, ToyFeatureProvider, ViewInput, DEFAULT_SAMPLES_PER_VIEW};
use crate::geometry::camera::CameraIntrinsics;
use crate::geometry::transform::RigidTransform;
use crate::mesh::ModelLibrary;
use crate::metrics::{write_curve_csv, DistancePool, DistancesFile, MetricsReport, AUC_MAX_THRESHOLD};
use crate::oracle::{oracle_predict, OracleConfig};
use crate::rng::stream_key;
use crate::sim::{
    enumerate_camera_combinations, io as sim_io, render_view, simulate_scene, CameraRigSpec,
    RenderedView, SceneInstance, SceneSpec,
};
use crate::voting::{detect_instances, VotingConfig};

use dataset::{estimate_file_name, models_dir, scene_dir, view_stem, DatasetIndex, SceneEntry, Split};

/// How many views each estimation run fuses: a fixed `k` or a sweep over
/// `1..=V`. Serialized as the number or the string `"sweep"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViewsUsed {
    K(usize),
    Sweep,
}

impl Serialize for ViewsUsed {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ViewsUsed::K(k) => s.serialize_u64(*k as u64),
            ViewsUsed::Sweep => s.serialize_str("sweep"),
        }
    }
}

impl<'de> Deserialize<'de> for ViewsUsed {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = ViewsUsed;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                write!(f, "a view count or \"sweep\"")
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> std::result::Result<ViewsUsed, E> {
                Ok(ViewsUsed::K(v as usize))
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> std::result::Result<ViewsUsed, E> {
                if v < 1 {
                    return Err(E::custom("view count must be positive"));
                }
                Ok(ViewsUsed::K(v as usize))
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> std::result::Result<ViewsUsed, E> {
                if v == "sweep" {
                    Ok(ViewsUsed::Sweep)
                } else {
                    Err(E::custom(format!("expected \"sweep\", got {v:?}")))
                }
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalSplit {
    /// Estimate only scenes in the test split.
    Test,
    /// Estimate every generated scene.
    All,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OracleParams {
    pub offset_sigma: f64,
    pub label_flip_rate: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub scene_count: usize,
    pub rig: CameraRigSpec,
    pub views_used: ViewsUsed,
    pub oracle: OracleParams,
    pub samples_per_view: usize,
    pub mean_shift: crate::voting::MeanShiftConfig,
    pub min_support: usize,
    pub placement_sigma: f64,
    /// Empty means every class of the builtin library.
    pub object_classes: Vec<u16>,
    pub intrinsics: CameraIntrinsics,
    pub eval_split: EvalSplit,
    pub min_visible_pixels: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            scene_count: 10,
            rig: CameraRigSpec::default_fixed_ring(),
            views_used: ViewsUsed::K(3),
            oracle: OracleParams {
                offset_sigma: 0.0,
                label_flip_rate: 0.0,
            },
            samples_per_view: DEFAULT_SAMPLES_PER_VIEW,
            mean_shift: crate::voting::MeanShiftConfig::default(),
            min_support: crate::voting::DEFAULT_MIN_SUPPORT,
            placement_sigma: 0.12,
            object_classes: Vec::new(),
            intrinsics: CameraIntrinsics::default_vga(),
            eval_split: EvalSplit::Test,
            min_visible_pixels: 64,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.scene_count == 0 {
            return Err(Error::Config("scene count must be at least 1".into()));
        }
        self.rig.validate()?;
        self.intrinsics.validate()?;
        self.mean_shift.validate()?;
        if let ViewsUsed::K(k) = self.views_used {
            if k == 0 || k > self.rig.camera_count() {
                return Err(Error::Config(format!(
                    "views_used {k} exceeds rig camera count {}",
                    self.rig.camera_count()
                )));
            }
        }
        if self.oracle.offset_sigma < 0.0 || !(0.0..=1.0).contains(&self.oracle.label_flip_rate) {
            return Err(Error::Config("invalid oracle corruption parameters".into()));
        }
        if self.samples_per_view == 0 {
            return Err(Error::Config("samples per view must be positive".into()));
        }
        Ok(())
    }

    pub fn object_classes_or_default(&self, library: &ModelLibrary) -> Vec<u16> {
        if self.object_classes.is_empty() {
            library.class_ids()
        } else {
            self.object_classes.clone()
        }
    }

    pub fn scene_spec(&self, library: &ModelLibrary) -> SceneSpec {
        SceneSpec {
            object_classes: self.object_classes_or_default(library),
            placement_sigma: self.placement_sigma,
            rig: self.rig.clone(),
            intrinsics: self.intrinsics,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self =
            serde_json::from_str(&text).map_err(|e| Error::parse(path, 0, e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// One stage's run record: the config snapshot reproduces the run bit-exactly,
/// timings are informational only.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub stage: String,
    pub config: ExperimentConfig,
    pub scene_count: usize,
    pub timings_ms: BTreeMap<String, f64>,
    pub outputs: Vec<String>,
}

impl RunRecord {
    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Data(format!("run record serialization: {e}")))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Generates a dataset under `out`: the model library, per-scene manifests,
/// and depth/seg/color rasters for every camera.
pub fn run_gen(config: &ExperimentConfig, out: &Path) -> Result<RunRecord> {
    config.validate()?;
    let started = Instant::now();
    create_dir(out)?;
    let library = ModelLibrary::builtin();
    create_dir(&models_dir(out))?;
    library.save(&models_dir(out))?;
    let spec = config.scene_spec(&library);

    let entries: Vec<SceneEntry> = (0..config.scene_count as u64)
        .into_par_iter()
        .map(|scene_id| -> Result<SceneEntry> {
            let (scene, views) =
                simulate_scene(&spec, &library, config.seed, scene_id, config.min_visible_pixels)?;
            let dir = scene_dir(out, scene_id);
            create_dir(&dir)?;
            sim_io::write_scene_manifest(&scene, &dir.join("manifest.json"))?;
            for (ci, view) in views.iter().enumerate() {
                sim_io::write_view_rasters(view, &dir, &view_stem(ci))?;
            }
            Ok(SceneEntry {
                scene_id,
                split: dataset::split_of(scene_id),
                resamples: scene.resample_count,
            })
        })
        .collect::<Result<_>>()?;

    let index = DatasetIndex {
        config: config.clone(),
        scenes: entries,
    };
    index.write(out)?;

    let mut timings = BTreeMap::new();
    timings.insert("gen_total".into(), started.elapsed().as_secs_f64() * 1e3);
    let record = RunRecord {
        stage: "gen".into(),
        config: config.clone(),
        scene_count: config.scene_count,
        timings_ms: timings,
        outputs: vec![out.display().to_string()],
    };
    record.write(&out.join("run.json"))?;
    Ok(record)
}

/// Optional overrides applied on top of the dataset's stored config before
/// estimation.
#[derive(Debug, Clone, Default)]
pub struct EstimateOptions {
    pub views: Option<ViewsUsed>,
    pub offset_sigma: Option<f64>,
    pub label_flip_rate: Option<f64>,
    pub samples_per_view: Option<usize>,
    pub seed: Option<u64>,
    pub eval_split: Option<EvalSplit>,
}

impl EstimateOptions {
    pub fn apply(&self, mut config: ExperimentConfig) -> ExperimentConfig {
        if let Some(v) = self.views {
            config.views_used = v;
        }
        if let Some(s) = self.offset_sigma {
            config.oracle.offset_sigma = s;
        }
        if let Some(r) = self.label_flip_rate {
            config.oracle.label_flip_rate = r;
        }
        if let Some(n) = self.samples_per_view {
            config.samples_per_view = n;
        }
        if let Some(s) = self.seed {
            config.seed = s;
        }
        if let Some(e) = self.eval_split {
            config.eval_split = e;
        }
        config
    }
}

/// Per-stage wall-clock totals for one estimation run.
#[derive(Debug, Clone, Default)]
pub struct StageTimings {
    pub load_ms: f64,
    pub fuse_ms: f64,
    pub features_ms: f64,
    pub oracle_ms: f64,
    pub voting_ms: f64,
    pub fitting_ms: f64,
}

impl StageTimings {
    fn add(&mut self, other: &StageTimings) {
        self.load_ms += other.load_ms;
        self.fuse_ms += other.fuse_ms;
        self.features_ms += other.features_ms;
        self.oracle_ms += other.oracle_ms;
        self.voting_ms += other.voting_ms;
        self.fitting_ms += other.fitting_ms;
    }
}

/// Runs the full per-combination pipeline for one scene:
/// fuse → dense feature association → oracle heads → voting → fitting.
pub fn estimate_scene_combos(
    scene: &SceneInstance,
    views: &[RenderedView],
    library: &ModelLibrary,
    config: &ExperimentConfig,
    ks: &[usize],
) -> Result<(Vec<SceneEstimates>, StageTimings)> {
    let mut timings = StageTimings::default();
    let camera_count = scene.cameras.len();

    let t0 = Instant::now();
    let prepared: Vec<PreparedView> = views
        .iter()
        .enumerate()
        .map(|(ci, view)| {
            prepare_view(
                &ViewInput {
                    global_id: ci as u32,
                    depth: &view.depth,
                    color: &view.color,
                    camera_pose: scene.cameras[ci].nominal_pose,
                },
                config.samples_per_view,
                config.seed,
            )
        })
        .collect();
    timings.fuse_ms += t0.elapsed().as_secs_f64() * 1e3;

    let segs: Vec<&crate::sim::SegImage> = views.iter().map(|v| &v.seg).collect();
    let voting_cfg = VotingConfig {
        mean_shift: config.mean_shift,
        min_support: config.min_support,
    };

    let mut outputs = Vec::new();
    let mut combo_counter = 0u64;
    for &k in ks {
        for combo in enumerate_camera_combinations(camera_count, k)? {
            let t = Instant::now();
            let selected: Vec<&PreparedView> = combo.iter().map(|&c| &prepared[c]).collect();
            let fused = fuse_prepared(&selected, config.samples_per_view)?;
            timings.fuse_ms += t.elapsed().as_secs_f64() * 1e3;

            let t = Instant::now();
            let images: Vec<&crate::geometry::image::ColorImage> =
                combo.iter().map(|&c| &views[c].color).collect();
            let _features = dense_fuse(&fused, &images, &ToyFeatureProvider)?;
            timings.features_ms += t.elapsed().as_secs_f64() * 1e3;

            let t = Instant::now();
            let oracle_cfg = OracleConfig {
                offset_sigma: config.oracle.offset_sigma,
                label_flip_rate: config.oracle.label_flip_rate,
                seed: stream_key(config.seed, "oracle", scene.scene_id * 4096 + combo_counter),
            };
            let bundle = oracle_predict(&fused, scene, &segs, library, &oracle_cfg)?;
            timings.oracle_ms += t.elapsed().as_secs_f64() * 1e3;

            let t = Instant::now();
            let hypotheses = detect_instances(&bundle, &fused, &voting_cfg, library)?;
            timings.voting_ms += t.elapsed().as_secs_f64() * 1e3;

            let t = Instant::now();
            let poses = estimate_poses(&hypotheses, library)?;
            timings.fitting_ms += t.elapsed().as_secs_f64() * 1e3;

            outputs.push(SceneEstimates::new(
                scene.scene_id,
                combo.iter().map(|&c| c as u32).collect(),
                &poses,
            ));
            combo_counter += 1;
        }
    }
    Ok((outputs, timings))
}

fn selected_scene_ids(index: &DatasetIndex, split: EvalSplit) -> Vec<u64> {
    index
        .scenes
        .iter()
        .filter(|e| split == EvalSplit::All || e.split == Split::Test)
        .map(|e| e.scene_id)
        .collect()
}

/// Runs estimation over the selected split of a dataset, writing one JSON
/// estimate file per (scene, camera combination) under `out`.
pub fn run_estimate(
    dataset_root: &Path,
    out: &Path,
    options: &EstimateOptions,
) -> Result<RunRecord> {
    let started = Instant::now();
    let index = DatasetIndex::read(dataset_root)?;
    let config = options.apply(index.config.clone());
    config.validate()?;
    let library = ModelLibrary::load(&models_dir(dataset_root).join("manifest.json"))?;
    create_dir(out)?;

    let scene_ids = selected_scene_ids(&index, config.eval_split);
    if scene_ids.is_empty() {
        return Err(Error::Data("no scenes selected for estimation".into()));
    }
    let camera_count = config.rig.camera_count();
    let ks: Vec<usize> = match config.views_used {
        ViewsUsed::K(k) => vec![k],
        ViewsUsed::Sweep => (1..=camera_count).collect(),
    };

    let results: Vec<(Vec<String>, StageTimings)> = scene_ids
        .par_iter()
        .map(|&scene_id| -> Result<(Vec<String>, StageTimings)> {
            let dir = scene_dir(dataset_root, scene_id);
            let t = Instant::now();
            let manifest_path = dir.join("manifest.json");
            if !manifest_path.exists() {
                return Err(Error::Data(format!(
                    "scene {scene_id}: missing manifest {}",
                    manifest_path.display()
                )));
            }
            let scene = sim_io::read_scene_manifest(&manifest_path)?.to_scene();
            let views: Vec<RenderedView> = (0..scene.cameras.len())
                .map(|ci| {
                    sim_io::read_view_rasters(&dir, &view_stem(ci), scene.cameras[ci].intrinsics)
                        .map_err(|e| {
                            Error::Data(format!("scene {scene_id}: missing raster ({e})"))
                        })
                })
                .collect::<Result<_>>()?;
            let mut timings = StageTimings {
                load_ms: t.elapsed().as_secs_f64() * 1e3,
                ..StageTimings::default()
            };

            let (estimates, combo_timings) =
                estimate_scene_combos(&scene, &views, &library, &config, &ks)?;
            timings.add(&combo_timings);

            let mut written = Vec::new();
            for est in &estimates {
                let cams: Vec<usize> = est.camera_ids.iter().map(|&c| c as usize).collect();
                let name = estimate_file_name(scene_id, &cams);
                let text = serde_json::to_string_pretty(est)
                    .map_err(|e| Error::Data(format!("estimate serialization: {e}")))?;
                std::fs::write(out.join(&name), text).map_err(|e| Error::io(out.join(&name), e))?;
                written.push(name);
            }
            Ok((written, timings))
        })
        .collect::<Result<_>>()?;

    let mut all_outputs = Vec::new();
    let mut stage_totals = StageTimings::default();
    for (files, timings) in &results {
        all_outputs.extend(files.iter().cloned());
        stage_totals.add(timings);
    }

    let elapsed_ms = started.elapsed().as_secs_f64() * 1e3;
    let mut timings = BTreeMap::new();
    timings.insert("estimate_total".into(), elapsed_ms);
    timings.insert("load".into(), stage_totals.load_ms);
    timings.insert("fuse".into(), stage_totals.fuse_ms);
    timings.insert("features".into(), stage_totals.features_ms);
    timings.insert("oracle".into(), stage_totals.oracle_ms);
    timings.insert("voting".into(), stage_totals.voting_ms);
    timings.insert("fitting".into(), stage_totals.fitting_ms);
    timings.insert(
        "scenes_per_sec".into(),
        scene_ids.len() as f64 / (elapsed_ms / 1e3),
    );

    let record = RunRecord {
        stage: "estimate".into(),
        config,
        scene_count: scene_ids.len(),
        timings_ms: timings,
        outputs: all_outputs,
    };
    record.write(&out.join("run.json"))?;
    Ok(record)
}

/// Ground-truth pose of an object in the believed frame of the reference
/// camera: `invert(nominal_pose) ∘ world_pose`.
pub fn gt_pose_in_reference(
    scene: &SceneInstance,
    reference_camera: usize,
    object_index: usize,
) -> RigidTransform {
    scene.cameras[reference_camera]
        .nominal_pose
        .invert()
        .compose(&scene.objects[object_index].gt_pose)
}

/// Evaluates estimate files against dataset ground truth, producing the
/// metrics report, raw distance pools, and per-class accuracy curves.
/// `k_filter` restricts evaluation to combinations of that view count.
pub fn run_eval(
    dataset_root: &Path,
    estimates_dir: &Path,
    out: &Path,
    k_filter: Option<usize>,
) -> Result<MetricsReport> {
    let library = ModelLibrary::load(&models_dir(dataset_root).join("manifest.json"))?;
    create_dir(out)?;

    let mut estimate_files: Vec<PathBuf> = std::fs::read_dir(estimates_dir)
        .map_err(|e| Error::io(estimates_dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|e| e == "json")
                && p.file_name().is_some_and(|n| n != "run.json")
        })
        .collect();
    estimate_files.sort();
    if estimate_files.is_empty() {
        return Err(Error::Data(format!(
            "no estimate files in {}",
            estimates_dir.display()
        )));
    }

    let mut pools: BTreeMap<u16, DistancePool> = BTreeMap::new();
    let mut scene_cache: BTreeMap<u64, SceneInstance> = BTreeMap::new();
    for path in &estimate_files {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let est: SceneEstimates =
            serde_json::from_str(&text).map_err(|e| Error::parse(path, 0, e.to_string()))?;
        if k_filter.is_some_and(|k| est.camera_ids.len() != k) {
            continue;
        }
        let scene = match scene_cache.get(&est.scene_id) {
            Some(s) => s,
            None => {
                let manifest = scene_dir(dataset_root, est.scene_id).join("manifest.json");
                if !manifest.exists() {
                    return Err(Error::Data(format!(
                        "estimates reference scene {} with no manifest",
                        est.scene_id
                    )));
                }
                let scene = sim_io::read_scene_manifest(&manifest)?.to_scene();
                scene_cache.entry(est.scene_id).or_insert(scene)
            }
        };
        for (obj_idx, obj) in scene.objects.iter().enumerate() {
            let model = library.get(obj.class_id)?;
            let gt_ref = gt_pose_in_reference(scene, est.reference_camera as usize, obj_idx);
            let pool = pools.entry(obj.class_id).or_default();
            match est.poses.iter().find(|p| p.class_id == obj.class_id) {
                Some(entry) => {
                    let pred = RigidTransform::from(&crate::geometry::transform::PoseRecord {
                        quat_wxyz: entry.quat_wxyz,
                        t_xyz: entry.t_xyz,
                    });
                    let add_s =
                        crate::metrics::add_s_distance(&model.mesh.vertices, &gt_ref, &pred)?;
                    let combined = crate::metrics::combined_distance(model, &gt_ref, &pred)?;
                    pool.push(add_s, combined);
                }
                None => pool.push_miss(),
            }
        }
    }

    let names: BTreeMap<u16, String> = library
        .iter()
        .map(|m| (m.class_id, m.name.clone()))
        .collect();
    let report = MetricsReport::from_pools(&pools, &names)?;
    report.write_json(&out.join("report.json"))?;
    report.write_csv(&out.join("report.csv"))?;
    DistancesFile::from_pools(&pools, &names).write(&out.join("distances.json"))?;

    let curves = out.join("curves");
    create_dir(&curves)?;
    let mut all: Vec<f64> = Vec::new();
    for (&class_id, pool) in &pools {
        let name = names
            .get(&class_id)
            .cloned()
            .unwrap_or_else(|| format!("class_{class_id}"));
        write_curve_csv(&pool.combined, AUC_MAX_THRESHOLD, &curves.join(format!("{name}.csv")))?;
        all.extend_from_slice(&pool.combined);
    }
    write_curve_csv(&all, AUC_MAX_THRESHOLD, &curves.join("ALL.csv"))?;
    Ok(report)
}

/// Regenerates accuracy-threshold curves from a saved distances file.
pub fn run_curve(distances_path: &Path, out: &Path) -> Result<()> {
    let file = DistancesFile::read(distances_path)?;
    create_dir(out)?;
    let mut all = Vec::new();
    for (name, class) in &file.classes {
        let mut distances = class.combined.clone();
        distances.extend(std::iter::repeat(f64::INFINITY).take(class.misses));
        write_curve_csv(&distances, AUC_MAX_THRESHOLD, &out.join(format!("{name}.csv")))?;
        all.extend_from_slice(&distances);
    }
    if all.is_empty() {
        return Err(Error::Data("distances file holds no classes".into()));
    }
    write_curve_csv(&all, AUC_MAX_THRESHOLD, &out.join("ALL.csv"))
}

/// View-count ablation: generate once, estimate with a sweep over
/// `k = 1..=V`, evaluate per k, and emit a table with one row per k.
pub fn run_ablate_views(config: &ExperimentConfig, out: &Path) -> Result<Vec<(usize, MetricsReport)>> {
    let mut config = config.clone();
    config.views_used = ViewsUsed::Sweep;
    create_dir(out)?;
    let dataset = out.join("dataset");
    run_gen(&config, &dataset)?;
    let estimates = out.join("estimates");
    run_estimate(&dataset, &estimates, &EstimateOptions::default())?;

    let camera_count = config.rig.camera_count();
    let mut rows = Vec::new();
    for k in 1..=camera_count {
        let eval_dir = out.join(format!("eval_k{k}"));
        let report = run_eval(&dataset, &estimates, &eval_dir, Some(k))?;
        rows.push((k, report));
    }
    write_ablation_csv(&rows, &out.join("ablate_views.csv"))?;
    Ok(rows)
}

fn write_ablation_csv(rows: &[(usize, MetricsReport)], path: &Path) -> Result<()> {
    let mut header = String::from("k");
    if let Some((_, first)) = rows.first() {
        for class in &first.per_class {
            header.push_str(&format!(",{0}_add_s_auc,{0}_adds_auc", class.name));
        }
    }
    header.push_str(",all_add_s_auc,all_adds_auc\n");
    let mut text = header;
    for (k, report) in rows {
        text.push_str(&k.to_string());
        for class in &report.per_class {
            text.push_str(&format!(",{:.4},{:.4}", class.add_s_auc, class.adds_auc));
        }
        text.push_str(&format!(
            ",{:.4},{:.4}\n",
            report.overall.add_s_auc, report.overall.adds_auc
        ));
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Camera-wiggle robustness sweep: one dataset per position sigma (same
/// seed, fusion always on nominal poses), each estimated with all views and
/// evaluated; rows land in `wiggle_sweep.csv`.
pub fn run_wiggle_sweep(
    config: &ExperimentConfig,
    sigmas: &[f64],
    out: &Path,
) -> Result<Vec<(f64, MetricsReport)>> {
    if sigmas.is_empty() {
        return Err(Error::Config("wiggle sweep needs at least one sigma".into()));
    }
    let (count, radius, height) = match config.rig {
        CameraRigSpec::FixedRing { count, radius, height } => (count, radius, height),
        CameraRigSpec::WiggleRing { count, radius, height, .. } => (count, radius, height),
        CameraRigSpec::SphereQuadrant { .. } => {
            return Err(Error::Config(
                "wiggle sweep requires a ring rig".into(),
            ))
        }
    };
    create_dir(out)?;
    let mut rows = Vec::new();
    for (i, &sigma) in sigmas.iter().enumerate() {
        let mut cfg = config.clone();
        cfg.rig = CameraRigSpec::WiggleRing {
            count,
            radius,
            height,
            position_sigma: sigma,
        };
        cfg.views_used = ViewsUsed::K(count);
        let sub = out.join(format!("sigma_{i:02}"));
        let dataset = sub.join("dataset");
        run_gen(&cfg, &dataset)?;
        let estimates = sub.join("estimates");
        run_estimate(&dataset, &estimates, &EstimateOptions::default())?;
        let report = run_eval(&dataset, &estimates, &sub.join("eval"), None)?;
        rows.push((sigma, report));
    }
    let mut text = String::from("sigma_m,add_s_auc,adds_auc,add_s_2cm,adds_2cm\n");
    for (sigma, report) in &rows {
        text.push_str(&format!(
            "{:.6},{:.4},{:.4},{:.4},{:.4}\n",
            sigma,
            report.overall.add_s_auc,
            report.overall.adds_auc,
            report.overall.add_s_below_2cm,
            report.overall.adds_below_2cm
        ));
    }
    std::fs::write(out.join("wiggle_sweep.csv"), text)
        .map_err(|e| Error::io(out.join("wiggle_sweep.csv"), e))?;
    Ok(rows)
}

/// In-memory convenience wrapper used by tests: generate, estimate, and
/// evaluate one scene without touching disk.
pub fn run_scene_in_memory(
    config: &ExperimentConfig,
    scene_id: u64,
) -> Result<(SceneInstance, Vec<SceneEstimates>)> {
    config.validate()?;
    let library = ModelLibrary::builtin();
    let spec = config.scene_spec(&library);
    let (scene, views) =
        simulate_scene(&spec, &library, config.seed, scene_id, config.min_visible_pixels)?;
    let ks: Vec<usize> = match config.views_used {
        ViewsUsed::K(k) => vec![k],
        ViewsUsed::Sweep => (1..=scene.cameras.len()).collect(),
    };
    let (estimates, _) = estimate_scene_combos(&scene, &views, &library, config, &ks)?;
    Ok((scene, estimates))
}

/// Renders every view of a scene; exposed for tests and tools.
pub fn render_scene(scene: &SceneInstance, library: &ModelLibrary) -> Result<Vec<RenderedView>> {
    (0..scene.cameras.len())
        .map(|ci| render_view(scene, library, ci))
        .collect()
}
