//! Object model library: triangle meshes, surface sampling, centers,
//! radii, and the default set of eleven desk-scale objects.

pub mod io;
pub mod primitives;
pub mod sample;

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::keypoints::{compute_keypoints, load_keypoint_bank};

pub use io::{load_mesh, write_mesh_ply, LibraryManifestEntry, MeshFormat};
pub use sample::sample_surface;

#[derive(Debug, Clone)]
pub struct TriangleMesh {
    /// Vertex positions in meters, object frame.
    pub vertices: Vec<Vector3<f64>>,
    /// Counter-clockwise vertex index triples.
    pub triangles: Vec<[u32; 3]>,
    /// Flat render color, RGB in `[0, 1]`.
    pub base_color: [f64; 3],
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Vector3<f64>>, triangles: Vec<[u32; 3]>) -> Self {
        let mut mesh = Self {
            vertices,
            triangles,
            base_color: [0.7, 0.7, 0.7],
        };
        mesh.drop_degenerate_triangles();
        mesh
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let (a, b, c) = (
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        );
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    /// Removes triangles with (numerically) zero area.
    pub fn drop_degenerate_triangles(&mut self) {
        let verts = &self.vertices;
        self.triangles.retain(|&[a, b, c]| {
            let (a, b, c) = (verts[a as usize], verts[b as usize], verts[c as usize]);
            (b - a).cross(&(c - a)).norm() > 1e-14
        });
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty() || self.triangles.is_empty()
    }
}

/// Axis-aligned bounding-box midpoint and the max vertex distance from it.
pub fn model_center_radius(mesh: &TriangleMesh) -> Result<(Vector3<f64>, f64)> {
    if mesh.vertices.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let mut lo = mesh.vertices[0];
    let mut hi = mesh.vertices[0];
    for v in &mesh.vertices {
        lo = lo.inf(v);
        hi = hi.sup(v);
    }
    let center = (lo + hi) * 0.5;
    let radius = mesh
        .vertices
        .iter()
        .map(|v| (v - center).norm())
        .fold(0.0, f64::max);
    Ok((center, radius))
}

#[derive(Debug, Clone)]
pub struct ObjectModel {
    pub class_id: u16,
    pub name: String,
    pub mesh: TriangleMesh,
    /// Eight target keypoints in the object frame.
    pub keypoints: [Vector3<f64>; 8],
    /// Bounding-box midpoint in the object frame.
    pub center: Vector3<f64>,
    /// Max vertex distance from the center.
    pub radius: f64,
    pub symmetric: bool,
}

impl ObjectModel {
    /// Builds a model, deriving center, radius, and FPS keypoints from the mesh.
    pub fn from_mesh(class_id: u16, name: &str, mesh: TriangleMesh, symmetric: bool) -> Result<Self> {
        if class_id == 0 {
            return Err(Error::Config("class id 0 is reserved for background".into()));
        }
        let (center, radius) = model_center_radius(&mesh)?;
        let keypoints = compute_keypoints(&mesh)?;
        Ok(Self {
            class_id,
            name: name.to_string(),
            mesh,
            keypoints,
            center,
            radius,
            symmetric,
        })
    }

    /// As [`Self::from_mesh`], but with a precomputed keypoint bank.
    pub fn with_keypoints(
        class_id: u16,
        name: &str,
        mesh: TriangleMesh,
        symmetric: bool,
        keypoints: [Vector3<f64>; 8],
    ) -> Result<Self> {
        if class_id == 0 {
            return Err(Error::Config("class id 0 is reserved for background".into()));
        }
        let (center, radius) = model_center_radius(&mesh)?;
        Ok(Self {
            class_id,
            name: name.to_string(),
            mesh,
            keypoints,
            center,
            radius,
            symmetric,
        })
    }
}

/// Immutable map from class id to object model; class 0 is background and
/// never present.
#[derive(Debug, Clone, Default)]
pub struct ModelLibrary {
    models: BTreeMap<u16, ObjectModel>,
}

impl ModelLibrary {
    pub fn from_models(models: Vec<ObjectModel>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for m in models {
            if map.insert(m.class_id, m).is_some() {
                return Err(Error::Config("duplicate class id in library".into()));
            }
        }
        Ok(Self { models: map })
    }

    /// The default eleven-object library of procedurally generated meshes.
    pub fn builtin() -> Self {
        primitives::builtin_library()
    }

    /// Loads a library from a JSON manifest; mesh paths resolve relative to
    /// the manifest. Keypoint banks are read from `keypoints_<class>.json`
    /// sidecars when present, otherwise recomputed.
    pub fn load(manifest_path: &Path) -> Result<Self> {
        let entries = io::read_manifest(manifest_path)?;
        let dir = manifest_path.parent().unwrap_or_else(|| Path::new("."));
        let mut models = Vec::new();
        for e in &entries {
            let mesh_path = dir.join(&e.mesh_path);
            let mut mesh = load_mesh(&mesh_path, MeshFormat::from_path(&mesh_path)?)?;
            mesh.base_color = primitives::palette_color(e.class_id);
            let sidecar = dir.join(format!("keypoints_{:02}.json", e.class_id));
            let model = if sidecar.exists() {
                let bank = load_keypoint_bank(&sidecar)?;
                if bank.class_id != e.class_id {
                    return Err(Error::Data(format!(
                        "keypoint bank {} is for class {}, expected {}",
                        sidecar.display(),
                        bank.class_id,
                        e.class_id
                    )));
                }
                ObjectModel::with_keypoints(e.class_id, &e.name, mesh, e.symmetric, bank.keypoints)?
            } else {
                ObjectModel::from_mesh(e.class_id, &e.name, mesh, e.symmetric)?
            };
            models.push(model);
        }
        Self::from_models(models)
    }

    /// Writes meshes, the manifest, and keypoint sidecars under `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut entries = Vec::new();
        for model in self.models.values() {
            let mesh_file = format!("{}.ply", model.name);
            write_mesh_ply(&model.mesh, &dir.join(&mesh_file))?;
            crate::keypoints::save_keypoint_bank(
                &dir.join(format!("keypoints_{:02}.json", model.class_id)),
                model.class_id,
                &model.keypoints,
            )?;
            entries.push(LibraryManifestEntry {
                class_id: model.class_id,
                name: model.name.clone(),
                mesh_path: mesh_file,
                symmetric: model.symmetric,
            });
        }
        io::write_manifest(&dir.join("manifest.json"), &entries)
    }

    pub fn get(&self, class_id: u16) -> Result<&ObjectModel> {
        self.models
            .get(&class_id)
            .ok_or(Error::UnknownClass(class_id))
    }

    pub fn contains(&self, class_id: u16) -> bool {
        self.models.contains_key(&class_id)
    }

    pub fn class_ids(&self) -> Vec<u16> {
        self.models.keys().copied().collect()
    }

    /// Largest class id; labels are drawn from `0..=max_class_id`.
    pub fn max_class_id(&self) -> u16 {
        self.models.keys().next_back().copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = &ObjectModel> {
        self.models.values()
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }
}
