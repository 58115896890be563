//! Mesh file readers (PLY ascii/binary, OBJ) and the library manifest.

use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::TriangleMesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Ply,
    Obj,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref()
        {
            Some("ply") => Ok(MeshFormat::Ply),
            Some("obj") => Ok(MeshFormat::Obj),
            other => Err(Error::Config(format!(
                "cannot infer mesh format from extension {other:?} of {}",
                path.display()
            ))),
        }
    }
}

/// Loads a triangle mesh. Vertices are taken as meters; degenerate triangles
/// are dropped; non-triangle OBJ faces are fan-triangulated.
pub fn load_mesh(path: &Path, format: MeshFormat) -> Result<TriangleMesh> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let (vertices, triangles) = match format {
        MeshFormat::Ply => parse_ply(path, &bytes)?,
        MeshFormat::Obj => parse_obj(path, &bytes)?,
    };
    for t in &triangles {
        for &i in t {
            if i as usize >= vertices.len() {
                return Err(Error::parse(
                    path,
                    0,
                    format!("face references vertex {} of {}", i, vertices.len()),
                ));
            }
        }
    }
    Ok(TriangleMesh::new(vertices, triangles))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PlyScalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl PlyScalar {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => PlyScalar::I8,
            "uchar" | "uint8" => PlyScalar::U8,
            "short" | "int16" => PlyScalar::I16,
            "ushort" | "uint16" => PlyScalar::U16,
            "int" | "int32" => PlyScalar::I32,
            "uint" | "uint32" => PlyScalar::U32,
            "float" | "float32" => PlyScalar::F32,
            "double" | "float64" => PlyScalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            PlyScalar::I8 | PlyScalar::U8 => 1,
            PlyScalar::I16 | PlyScalar::U16 => 2,
            PlyScalar::I32 | PlyScalar::U32 | PlyScalar::F32 => 4,
            PlyScalar::F64 => 8,
        }
    }

    fn read_le(self, bytes: &[u8]) -> f64 {
        match self {
            PlyScalar::I8 => bytes[0] as i8 as f64,
            PlyScalar::U8 => bytes[0] as f64,
            PlyScalar::I16 => i16::from_le_bytes([bytes[0], bytes[1]]) as f64,
            PlyScalar::U16 => u16::from_le_bytes([bytes[0], bytes[1]]) as f64,
            PlyScalar::I32 => i32::from_le_bytes(bytes[..4].try_into().unwrap()) as f64,
            PlyScalar::U32 => u32::from_le_bytes(bytes[..4].try_into().unwrap()) as f64,
            PlyScalar::F32 => f32::from_le_bytes(bytes[..4].try_into().unwrap()) as f64,
            PlyScalar::F64 => f64::from_le_bytes(bytes[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug, Clone)]
enum PlyProperty {
    Scalar { name: String, ty: PlyScalar },
    List { count: PlyScalar, item: PlyScalar },
}

#[derive(Debug, Clone)]
struct PlyElement {
    name: String,
    count: usize,
    properties: Vec<PlyProperty>,
}

fn parse_ply(path: &Path, bytes: &[u8]) -> Result<(Vec<Vector3<f64>>, Vec<[u32; 3]>)> {
    let mut offset = 0usize;
    let read_line = |offset: &mut usize| -> Result<String> {
        let start = *offset;
        let end = bytes[start..]
            .iter()
            .position(|&b| b == b'\n')
            .map(|p| start + p)
            .ok_or_else(|| Error::parse(path, start as u64, "unexpected end of PLY header"))?;
        *offset = end + 1;
        Ok(String::from_utf8_lossy(&bytes[start..end]).trim().to_string())
    };

    let magic = read_line(&mut offset)?;
    if magic != "ply" {
        return Err(Error::parse(path, 0, "missing 'ply' magic"));
    }
    let mut ascii = None;
    let mut elements: Vec<PlyElement> = Vec::new();
    loop {
        let line_start = offset as u64;
        let line = read_line(&mut offset)?;
        let mut words = line.split_whitespace();
        match words.next() {
            Some("comment") | Some("obj_info") | None => {}
            Some("format") => match words.next() {
                Some("ascii") => ascii = Some(true),
                Some("binary_little_endian") => ascii = Some(false),
                other => {
                    return Err(Error::parse(
                        path,
                        line_start,
                        format!("unsupported PLY format {other:?}"),
                    ))
                }
            },
            Some("element") => {
                let name = words
                    .next()
                    .ok_or_else(|| Error::parse(path, line_start, "element without name"))?;
                let count: usize = words
                    .next()
                    .and_then(|w| w.parse().ok())
                    .ok_or_else(|| Error::parse(path, line_start, "element without count"))?;
                elements.push(PlyElement {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            Some("property") => {
                let element = elements
                    .last_mut()
                    .ok_or_else(|| Error::parse(path, line_start, "property before element"))?;
                let first = words
                    .next()
                    .ok_or_else(|| Error::parse(path, line_start, "property without type"))?;
                if first == "list" {
                    let count = words.next().and_then(PlyScalar::parse).ok_or_else(|| {
                        Error::parse(path, line_start, "bad list count type")
                    })?;
                    let item = words.next().and_then(PlyScalar::parse).ok_or_else(|| {
                        Error::parse(path, line_start, "bad list item type")
                    })?;
                    words
                        .next()
                        .ok_or_else(|| Error::parse(path, line_start, "list without name"))?;
                    element.properties.push(PlyProperty::List { count, item });
                } else {
                    let ty = PlyScalar::parse(first).ok_or_else(|| {
                        Error::parse(path, line_start, format!("unknown scalar type {first:?}"))
                    })?;
                    let name = words
                        .next()
                        .ok_or_else(|| Error::parse(path, line_start, "property without name"))?;
                    element.properties.push(PlyProperty::Scalar {
                        name: name.to_string(),
                        ty,
                    });
                }
            }
            Some("end_header") => break,
            Some(other) => {
                return Err(Error::parse(
                    path,
                    line_start,
                    format!("unexpected header keyword {other:?}"),
                ))
            }
        }
    }
    let ascii =
        ascii.ok_or_else(|| Error::parse(path, offset as u64, "PLY header missing format"))?;

    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    if ascii {
        let body = String::from_utf8_lossy(&bytes[offset..]);
        let mut tokens = body.split_whitespace();
        let mut take = |what: &str| -> Result<f64> {
            tokens
                .next()
                .and_then(|t| t.parse::<f64>().ok())
                .ok_or_else(|| Error::parse(path, offset as u64, format!("expected {what}")))
        };
        for element in &elements {
            for _ in 0..element.count {
                let mut xyz = [f64::NAN; 3];
                let mut list: Vec<f64> = Vec::new();
                for prop in &element.properties {
                    match prop {
                        PlyProperty::Scalar { name, .. } => {
                            let v = take(name)?;
                            match name.as_str() {
                                "x" => xyz[0] = v,
                                "y" => xyz[1] = v,
                                "z" => xyz[2] = v,
                                _ => {}
                            }
                        }
                        PlyProperty::List { .. } => {
                            let n = take("list count")? as usize;
                            list.clear();
                            for _ in 0..n {
                                list.push(take("list item")?);
                            }
                        }
                    }
                }
                finish_ply_record(element, &xyz, &list, &mut vertices, &mut triangles);
            }
        }
    } else {
        for element in &elements {
            for _ in 0..element.count {
                let mut xyz = [f64::NAN; 3];
                let mut list: Vec<f64> = Vec::new();
                for prop in &element.properties {
                    match prop {
                        PlyProperty::Scalar { name, ty } => {
                            if offset + ty.size() > bytes.len() {
                                return Err(Error::parse(path, offset as u64, "truncated PLY body"));
                            }
                            let v = ty.read_le(&bytes[offset..]);
                            offset += ty.size();
                            match name.as_str() {
                                "x" => xyz[0] = v,
                                "y" => xyz[1] = v,
                                "z" => xyz[2] = v,
                                _ => {}
                            }
                        }
                        PlyProperty::List { count, item, .. } => {
                            if offset + count.size() > bytes.len() {
                                return Err(Error::parse(path, offset as u64, "truncated PLY body"));
                            }
                            let n = count.read_le(&bytes[offset..]) as usize;
                            offset += count.size();
                            list.clear();
                            for _ in 0..n {
                                if offset + item.size() > bytes.len() {
                                    return Err(Error::parse(
                                        path,
                                        offset as u64,
                                        "truncated PLY list",
                                    ));
                                }
                                list.push(item.read_le(&bytes[offset..]));
                                offset += item.size();
                            }
                        }
                    }
                }
                finish_ply_record(element, &xyz, &list, &mut vertices, &mut triangles);
            }
        }
    }
    Ok((vertices, triangles))
}

fn finish_ply_record(
    element: &PlyElement,
    xyz: &[f64; 3],
    list: &[f64],
    vertices: &mut Vec<Vector3<f64>>,
    triangles: &mut Vec<[u32; 3]>,
) {
    if element.name == "vertex" {
        vertices.push(Vector3::new(xyz[0], xyz[1], xyz[2]));
    } else if element.name == "face" && list.len() >= 3 {
        // fan triangulation of polygons
        for i in 1..list.len() - 1 {
            triangles.push([list[0] as u32, list[i] as u32, list[i + 1] as u32]);
        }
    }
}

fn parse_obj(path: &Path, bytes: &[u8]) -> Result<(Vec<Vector3<f64>>, Vec<[u32; 3]>)> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| Error::parse(path, e.valid_up_to() as u64, "OBJ is not valid UTF-8"))?;
    let mut vertices: Vec<Vector3<f64>> = Vec::new();
    let mut triangles = Vec::new();
    let mut offset = 0u64;
    for line in text.lines() {
        let line_start = offset;
        offset += line.len() as u64 + 1;
        let line = line.trim();
        let mut words = line.split_whitespace();
        match words.next() {
            Some("v") => {
                let mut coords = [0.0f64; 3];
                for c in &mut coords {
                    *c = words
                        .next()
                        .and_then(|w| w.parse().ok())
                        .ok_or_else(|| Error::parse(path, line_start, "bad vertex line"))?;
                }
                vertices.push(Vector3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let mut idx: Vec<u32> = Vec::new();
                for word in words {
                    let first = word.split('/').next().unwrap_or("");
                    let raw: i64 = first
                        .parse()
                        .map_err(|_| Error::parse(path, line_start, format!("bad face index {word:?}")))?;
                    let resolved = if raw > 0 {
                        raw - 1
                    } else if raw < 0 {
                        vertices.len() as i64 + raw
                    } else {
                        return Err(Error::parse(path, line_start, "face index 0 is invalid"));
                    };
                    if resolved < 0 {
                        return Err(Error::parse(path, line_start, "negative face index out of range"));
                    }
                    idx.push(resolved as u32);
                }
                if idx.len() < 3 {
                    return Err(Error::parse(path, line_start, "face with fewer than 3 vertices"));
                }
                for i in 1..idx.len() - 1 {
                    triangles.push([idx[0], idx[i], idx[i + 1]]);
                }
            }
            _ => {}
        }
    }
    Ok((vertices, triangles))
}

/// Writes a binary little-endian PLY mesh (float positions, uint indices).
pub fn write_mesh_ply(mesh: &TriangleMesh, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let header = format!(
        "ply\nformat binary_little_endian 1.0\nelement vertex {}\nproperty float x\nproperty float y\nproperty float z\nelement face {}\nproperty list uchar uint vertex_indices\nend_header\n",
        mesh.vertices.len(),
        mesh.triangles.len()
    );
    w.write_all(header.as_bytes()).map_err(|e| Error::io(path, e))?;
    for v in &mesh.vertices {
        for c in [v.x, v.y, v.z] {
            w.write_all(&(c as f32).to_le_bytes())
                .map_err(|e| Error::io(path, e))?;
        }
    }
    for t in &mesh.triangles {
        w.write_all(&[3u8]).map_err(|e| Error::io(path, e))?;
        for &i in t {
            w.write_all(&i.to_le_bytes()).map_err(|e| Error::io(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LibraryManifestEntry {
    pub class_id: u16,
    pub name: String,
    pub mesh_path: String,
    pub symmetric: bool,
}

pub fn read_manifest(path: &Path) -> Result<Vec<LibraryManifestEntry>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, 0, e.to_string()))
}

pub fn write_manifest(path: &Path, entries: &[LibraryManifestEntry]) -> Result<()> {
    let text = serde_json::to_string_pretty(entries)
        .map_err(|e| Error::Data(format!("manifest serialization: {e}")))?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
