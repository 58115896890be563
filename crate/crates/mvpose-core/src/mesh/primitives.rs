//! Procedural meshes for the default object library.
//!
//! The eleven objects are primitive shapes (boxes, cylinders, a bent tube,
//! and small compounds) matched in rough size to common desk-scale items.
//! Meshes are centered so their bounding-box midpoint sits at the origin.

use nalgebra::Vector3;

use crate::geometry::transform::RigidTransform;
use crate::mesh::{ModelLibrary, ObjectModel, TriangleMesh};

/// Flat render color for a class id.
pub fn palette_color(class_id: u16) -> [f64; 3] {
    const PALETTE: [[f64; 3]; 12] = [
        [0.50, 0.50, 0.50], // background, unused
        [0.95, 0.85, 0.25], // banana
        [0.80, 0.20, 0.15], // cracker box
        [0.90, 0.45, 0.60], // gelatin box
        [0.15, 0.35, 0.70], // master chef can
        [0.90, 0.75, 0.10], // mustard bottle
        [0.35, 0.55, 0.85], // potted meat can
        [0.20, 0.65, 0.45], // power drill
        [0.70, 0.40, 0.15], // pudding box
        [0.95, 0.95, 0.80], // sugar box
        [0.85, 0.30, 0.25], // tomato soup can
        [0.40, 0.70, 0.90], // tuna fish can
    ];
    PALETTE[usize::from(class_id) % PALETTE.len()]
}

/// Axis-aligned box of the given side lengths, each face split into an
/// `n × n` grid so the vertex set resolves the surface, centered at origin.
pub fn box_mesh(sx: f64, sy: f64, sz: f64, n: usize) -> TriangleMesh {
    let n = n.max(1);
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let half = Vector3::new(sx / 2.0, sy / 2.0, sz / 2.0);

    // each face: fixed axis, sign, and the two varying axes
    let faces: [(usize, f64, usize, usize); 6] = [
        (0, -1.0, 1, 2),
        (0, 1.0, 1, 2),
        (1, -1.0, 0, 2),
        (1, 1.0, 0, 2),
        (2, -1.0, 0, 1),
        (2, 1.0, 0, 1),
    ];
    for (axis, sign, u_axis, v_axis) in faces {
        let base = vertices.len() as u32;
        for iu in 0..=n {
            for iv in 0..=n {
                let mut p = Vector3::zeros();
                p[axis] = sign * half[axis];
                p[u_axis] = -half[u_axis] + 2.0 * half[u_axis] * iu as f64 / n as f64;
                p[v_axis] = -half[v_axis] + 2.0 * half[v_axis] * iv as f64 / n as f64;
                vertices.push(p);
            }
        }
        let stride = (n + 1) as u32;
        for iu in 0..n as u32 {
            for iv in 0..n as u32 {
                let a = base + iu * stride + iv;
                let b = a + stride;
                triangles.push([a, b, a + 1]);
                triangles.push([a + 1, b, b + 1]);
            }
        }
    }
    TriangleMesh::new(vertices, triangles)
}

/// Closed cylinder along z with triangulated caps, centered at origin.
pub fn cylinder_mesh(radius: f64, height: f64, segments: usize, rings: usize) -> TriangleMesh {
    let segments = segments.max(3);
    let rings = rings.max(1);
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let half = height / 2.0;

    for ring in 0..=rings {
        let z = -half + height * ring as f64 / rings as f64;
        for s in 0..segments {
            let a = std::f64::consts::TAU * s as f64 / segments as f64;
            vertices.push(Vector3::new(radius * a.cos(), radius * a.sin(), z));
        }
    }
    let ring_stride = segments as u32;
    for ring in 0..rings as u32 {
        for s in 0..segments as u32 {
            let s1 = (s + 1) % ring_stride;
            let a = ring * ring_stride + s;
            let b = ring * ring_stride + s1;
            let c = (ring + 1) * ring_stride + s;
            let d = (ring + 1) * ring_stride + s1;
            triangles.push([a, b, c]);
            triangles.push([b, d, c]);
        }
    }
    // caps
    for (z, flip) in [(-half, true), (half, false)] {
        let center = vertices.len() as u32;
        vertices.push(Vector3::new(0.0, 0.0, z));
        let ring_base = if flip { 0 } else { rings as u32 * ring_stride };
        for s in 0..segments as u32 {
            let s1 = (s + 1) % ring_stride;
            let (a, b) = if flip {
                (ring_base + s1, ring_base + s)
            } else {
                (ring_base + s, ring_base + s1)
            };
            triangles.push([center, a, b]);
        }
    }
    TriangleMesh::new(vertices, triangles)
}

/// Tube swept along a polyline with circular cross-sections and end caps.
pub fn tube_mesh(path: &[Vector3<f64>], radius: f64, segments: usize) -> TriangleMesh {
    assert!(path.len() >= 2, "tube path needs at least two points");
    let segments = segments.max(3);
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();

    // frames by parallel transport along the path
    let mut tangents = Vec::with_capacity(path.len());
    for i in 0..path.len() {
        let t = if i == 0 {
            path[1] - path[0]
        } else if i == path.len() - 1 {
            path[i] - path[i - 1]
        } else {
            path[i + 1] - path[i - 1]
        };
        tangents.push(t.normalize());
    }
    let mut normal = {
        let t = tangents[0];
        let pick = if t.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
        (pick - t * pick.dot(&t)).normalize()
    };
    for (i, p) in path.iter().enumerate() {
        if i > 0 {
            let prev = tangents[i - 1];
            let cur = tangents[i];
            let axis = prev.cross(&cur);
            let s = axis.norm();
            if s > 1e-12 {
                let angle = prev.dot(&cur).clamp(-1.0, 1.0).acos();
                let rot = RigidTransform::from_axis_angle(axis, angle);
                normal = rot.apply_vector(&normal).normalize();
            }
        }
        let binormal = tangents[i].cross(&normal).normalize();
        for s in 0..segments {
            let a = std::f64::consts::TAU * s as f64 / segments as f64;
            vertices.push(p + normal * (radius * a.cos()) + binormal * (radius * a.sin()));
        }
    }
    let stride = segments as u32;
    for ring in 0..(path.len() - 1) as u32 {
        for s in 0..segments as u32 {
            let s1 = (s + 1) % stride;
            let a = ring * stride + s;
            let b = ring * stride + s1;
            let c = (ring + 1) * stride + s;
            let d = (ring + 1) * stride + s1;
            triangles.push([a, b, c]);
            triangles.push([b, d, c]);
        }
    }
    for (end, base) in [(0usize, 0u32), (path.len() - 1, (path.len() as u32 - 1) * stride)] {
        let center = vertices.len() as u32;
        vertices.push(path[end]);
        for s in 0..segments as u32 {
            let s1 = (s + 1) % stride;
            if end == 0 {
                triangles.push([center, base + s1, base + s]);
            } else {
                triangles.push([center, base + s, base + s1]);
            }
        }
    }
    TriangleMesh::new(vertices, triangles)
}

/// Concatenates parts, each placed by a rigid transform, then recenters the
/// result on its bounding-box midpoint.
pub fn compound_mesh(parts: &[(TriangleMesh, RigidTransform)]) -> TriangleMesh {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (mesh, t) in parts {
        let base = vertices.len() as u32;
        vertices.extend(mesh.vertices.iter().map(|v| t.apply_point(v)));
        triangles.extend(mesh.triangles.iter().map(|&[a, b, c]| [a + base, b + base, c + base]));
    }
    let mut mesh = TriangleMesh::new(vertices, triangles);
    recenter(&mut mesh);
    mesh
}

fn recenter(mesh: &mut TriangleMesh) {
    if mesh.vertices.is_empty() {
        return;
    }
    let mut lo = mesh.vertices[0];
    let mut hi = mesh.vertices[0];
    for v in &mesh.vertices {
        lo = lo.inf(v);
        hi = hi.sup(v);
    }
    let mid = (lo + hi) * 0.5;
    for v in &mut mesh.vertices {
        *v -= mid;
    }
}

fn rot_y(angle: f64) -> RigidTransform {
    RigidTransform::from_axis_angle(Vector3::y(), angle)
}

fn at(x: f64, y: f64, z: f64) -> RigidTransform {
    RigidTransform::from_translation(Vector3::new(x, y, z))
}

fn banana_mesh() -> TriangleMesh {
    // bent tube along a circular arc, about 19 cm tip to tip
    let arc_radius = 0.15;
    let arc_span = 75_f64.to_radians();
    let n = 9;
    let path: Vec<Vector3<f64>> = (0..n)
        .map(|i| {
            let a = -arc_span / 2.0 + arc_span * i as f64 / (n - 1) as f64;
            Vector3::new(arc_radius * a.sin(), 0.0, arc_radius * (a.cos() - 1.0))
        })
        .collect();
    let mut mesh = tube_mesh(&path, 0.018, 12);
    recenter(&mut mesh);
    mesh
}

fn mustard_bottle_mesh() -> TriangleMesh {
    compound_mesh(&[
        (box_mesh(0.058, 0.095, 0.160, 3), at(0.0, 0.0, 0.0)),
        (cylinder_mesh(0.016, 0.035, 16, 1), at(0.0, 0.0, 0.0975)),
    ])
}

fn power_drill_mesh() -> TriangleMesh {
    // barrel along x, pistol-grip handle below, battery foot
    let barrel = cylinder_mesh(0.026, 0.150, 20, 3);
    let handle = box_mesh(0.035, 0.045, 0.110, 2);
    let foot = box_mesh(0.055, 0.050, 0.030, 1);
    compound_mesh(&[
        (barrel, rot_y(std::f64::consts::FRAC_PI_2)),
        (handle, at(0.020, 0.0, -0.070)),
        (foot, at(0.025, 0.0, -0.135)),
    ])
}

struct Spec {
    class_id: u16,
    name: &'static str,
    mesh: fn() -> TriangleMesh,
}

fn builtin_specs() -> [Spec; 11] {
    [
        Spec { class_id: 1, name: "banana", mesh: banana_mesh },
        Spec { class_id: 2, name: "cracker_box", mesh: || box_mesh(0.060, 0.158, 0.210, 4) },
        Spec { class_id: 3, name: "gelatin_box", mesh: || box_mesh(0.085, 0.073, 0.028, 3) },
        Spec { class_id: 4, name: "master_chef_can", mesh: || cylinder_mesh(0.051, 0.140, 32, 4) },
        Spec { class_id: 5, name: "mustard_bottle", mesh: mustard_bottle_mesh },
        Spec { class_id: 6, name: "potted_meat_can", mesh: || box_mesh(0.057, 0.101, 0.083, 3) },
        Spec { class_id: 7, name: "power_drill", mesh: power_drill_mesh },
        Spec { class_id: 8, name: "pudding_box", mesh: || box_mesh(0.110, 0.089, 0.035, 3) },
        Spec { class_id: 9, name: "sugar_box", mesh: || box_mesh(0.038, 0.089, 0.175, 3) },
        Spec { class_id: 10, name: "tomato_soup_can", mesh: || cylinder_mesh(0.033, 0.101, 32, 4) },
        Spec { class_id: 11, name: "tuna_fish_can", mesh: || cylinder_mesh(0.0425, 0.033, 32, 2) },
    ]
}

/// Builds the default eleven-object library. All objects are non-symmetric;
/// several have symmetric shapes that only the flat color disambiguates,
/// which keeps ADD strict while ADD-S stays forgiving.
pub fn builtin_library() -> ModelLibrary {
    let models: Vec<ObjectModel> = builtin_specs()
        .into_iter()
        .map(|spec| {
            let mut mesh = (spec.mesh)();
            mesh.base_color = palette_color(spec.class_id);
            ObjectModel::from_mesh(spec.class_id, spec.name, mesh, false)
                .expect("builtin meshes are valid")
        })
        .collect();
    ModelLibrary::from_models(models).expect("builtin class ids are unique")
}
