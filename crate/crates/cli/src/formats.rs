//! On-disk formats: cage JSON, boundary-loop and quad JSON, an OBJ subset
//! for meshes, and the binary coordinate-table container.

use nalgebra::Point3;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use beziercage::coords::{CageLayout, CoordParams, CoordinateTable, Variant};
use beziercage::{Cage, EmbeddedMesh, Patch, TensorPatch, TrianglePatch};

use crate::error::{CliError, Result};

pub const CAGE_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CageFile {
    version: u32,
    patches: Vec<PatchEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PatchEntry {
    kind: String,
    /// `[m, n]` for tensor patches, a single integer for triangles.
    degree: Value,
    points: Vec<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
}

fn point_from(xyz: &[f64; 3]) -> Point3<f64> {
    Point3::new(xyz[0], xyz[1], xyz[2])
}

fn usize_from(v: &Value) -> Option<usize> {
    v.as_u64().map(|n| n as usize)
}

/// Parse cage JSON without the watertightness gate (for diagnostics).
pub fn parse_cage_raw(text: &str) -> Result<Cage> {
    let file: CageFile = serde_json::from_str(text)
        .map_err(|e| CliError::cage_file(format!("malformed cage file: {e}")))?;
    if file.version != CAGE_FORMAT_VERSION {
        return Err(CliError::cage_file(format!(
            "unsupported cage format version {}",
            file.version
        )));
    }
    let mut patches = Vec::with_capacity(file.patches.len());
    for (idx, entry) in file.patches.iter().enumerate() {
        let label = match &entry.name {
            Some(n) => format!("patch {idx} ({n})"),
            None => format!("patch {idx}"),
        };
        let points: Vec<Point3<f64>> = entry.points.iter().map(point_from).collect();
        let patch = match entry.kind.as_str() {
            "tensor" => {
                let dims = entry
                    .degree
                    .as_array()
                    .filter(|a| a.len() == 2)
                    .and_then(|a| Some((usize_from(&a[0])?, usize_from(&a[1])?)))
                    .ok_or_else(|| {
                        CliError::cage_file(format!(
                            "{label}: tensor degree must be a two-integer array"
                        ))
                    })?;
                let want = (dims.0 + 1) * (dims.1 + 1);
                if points.len() != want {
                    return Err(CliError::cage_file(format!(
                        "{label}: degree ({}, {}) needs {want} points, found {}",
                        dims.0,
                        dims.1,
                        points.len()
                    )));
                }
                Patch::Tensor(TensorPatch::new(dims.0, dims.1, points)?)
            }
            "triangle" => {
                let n = usize_from(&entry.degree).ok_or_else(|| {
                    CliError::cage_file(format!("{label}: triangle degree must be an integer"))
                })?;
                let want = (n + 1) * (n + 2) / 2;
                if points.len() != want {
                    return Err(CliError::cage_file(format!(
                        "{label}: degree {n} needs {want} points, found {}",
                        points.len()
                    )));
                }
                Patch::Triangle(TrianglePatch::new(n, points)?)
            }
            other => {
                return Err(CliError::cage_file(format!(
                    "{label}: unknown patch kind {other:?}"
                )))
            }
        };
        patches.push(patch);
    }
    Ok(Cage::new(patches))
}

/// Parse cage JSON and insist on a watertight, consistently oriented cage.
pub fn parse_cage(text: &str) -> Result<Cage> {
    let cage = parse_cage_raw(text)?;
    let report = beziercage::validate_cage(&cage);
    if !report.passed() {
        return Err(CliError::cage_file(report.summary()));
    }
    Ok(cage)
}

/// Canonical cage JSON: pretty-printed, patches in order, no names, newline
/// terminated. Parsing and re-writing a canonical file is byte-identical.
pub fn write_cage(cage: &Cage) -> String {
    let patches = cage
        .patches()
        .iter()
        .map(|p| {
            let points: Vec<[f64; 3]> =
                p.control_points().iter().map(|q| [q.x, q.y, q.z]).collect();
            match p {
                Patch::Tensor(t) => {
                    let (m, n) = t.degrees();
                    PatchEntry {
                        kind: "tensor".into(),
                        degree: serde_json::json!([m, n]),
                        points,
                        name: None,
                    }
                }
                Patch::Triangle(t) => PatchEntry {
                    kind: "triangle".into(),
                    degree: serde_json::json!(t.degree()),
                    points,
                    name: None,
                },
            }
        })
        .collect();
    let file = CageFile { version: CAGE_FORMAT_VERSION, patches };
    let mut text = serde_json::to_string_pretty(&file).expect("cage serialization cannot fail");
    text.push('\n');
    text
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct QuadsFile {
    version: u32,
    quads: Vec<[[f64; 3]; 4]>,
}

/// Quad-shell JSON: a list of planar-or-not quads given by their corners.
pub fn parse_quads(text: &str) -> Result<Vec<[Point3<f64>; 4]>> {
    let file: QuadsFile = serde_json::from_str(text)
        .map_err(|e| CliError::quads_file(format!("malformed quads file: {e}")))?;
    if file.version != CAGE_FORMAT_VERSION {
        return Err(CliError::quads_file(format!(
            "unsupported quads format version {}",
            file.version
        )));
    }
    Ok(file
        .quads
        .iter()
        .map(|q| [point_from(&q[0]), point_from(&q[1]), point_from(&q[2]), point_from(&q[3])])
        .collect())
}

pub fn write_quads(quads: &[[Point3<f64>; 4]]) -> String {
    let file = QuadsFile {
        version: CAGE_FORMAT_VERSION,
        quads: quads
            .iter()
            .map(|q| {
                [
                    [q[0].x, q[0].y, q[0].z],
                    [q[1].x, q[1].y, q[1].z],
                    [q[2].x, q[2].y, q[2].z],
                    [q[3].x, q[3].y, q[3].z],
                ]
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&file).expect("quads serialization cannot fail");
    text.push('\n');
    text
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LoopsFile {
    version: u32,
    loops: Vec<LoopEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LoopEntry {
    bottom: Vec<[f64; 3]>,
    top: Vec<[f64; 3]>,
    left: Vec<[f64; 3]>,
    right: Vec<[f64; 3]>,
}

/// Boundary-loop JSON: four polylines per loop, one loop per patch to fill.
pub fn parse_loops(text: &str) -> Result<Vec<beziercage::BoundaryLoop>> {
    let file: LoopsFile = serde_json::from_str(text)
        .map_err(|e| CliError::loops_file(format!("malformed loops file: {e}")))?;
    if file.version != CAGE_FORMAT_VERSION {
        return Err(CliError::loops_file(format!(
            "unsupported loops format version {}",
            file.version
        )));
    }
    file.loops
        .iter()
        .enumerate()
        .map(|(i, entry)| {
            let side = |pts: &[[f64; 3]]| pts.iter().map(point_from).collect();
            beziercage::BoundaryLoop::new(
                side(&entry.bottom),
                side(&entry.top),
                side(&entry.left),
                side(&entry.right),
            )
            .map_err(|e| CliError::loops_file(format!("loop {i}: {e}")))
        })
        .collect()
}

pub fn write_loops(loops: &[beziercage::BoundaryLoop]) -> String {
    let entry = |l: &beziercage::BoundaryLoop| {
        let row = |pts: &[Point3<f64>]| pts.iter().map(|p| [p.x, p.y, p.z]).collect();
        let (bottom, top, left, right) = l.sides();
        LoopEntry { bottom: row(bottom), top: row(top), left: row(left), right: row(right) }
    };
    let file = LoopsFile { version: CAGE_FORMAT_VERSION, loops: loops.iter().map(entry).collect() };
    let mut text = serde_json::to_string_pretty(&file).expect("loops serialization cannot fail");
    text.push('\n');
    text
}

/// Parse the `v`/`f` subset of OBJ. Polygonal faces become triangle fans;
/// other record types are ignored. Vertex order is preserved.
pub fn parse_obj(text: &str) -> Result<EmbeddedMesh> {
    let mut vertices: Vec<Point3<f64>> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let tag = parts.next().unwrap();
        let context = |msg: String| CliError::mesh_file(format!("line {}: {msg}", lineno + 1));
        match tag {
            "v" => {
                let coords: Vec<f64> = parts
                    .map(|p| p.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| context(format!("bad vertex coordinate: {e}")))?;
                if coords.len() < 3 {
                    return Err(context(format!(
                        "vertex needs 3 coordinates, found {}",
                        coords.len()
                    )));
                }
                vertices.push(Point3::new(coords[0], coords[1], coords[2]));
            }
            "f" => {
                let mut idx = Vec::new();
                for p in parts {
                    let first = p.split('/').next().unwrap_or("");
                    let i: i64 = first
                        .parse()
                        .map_err(|e| context(format!("bad face index {first:?}: {e}")))?;
                    if i < 1 {
                        return Err(context(format!(
                            "face index {i} out of range (indices are positive and 1-based)"
                        )));
                    }
                    idx.push((i - 1) as usize);
                }
                if idx.len() < 3 {
                    return Err(context("face needs at least 3 vertices".into()));
                }
                for k in 1..idx.len() - 1 {
                    faces.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    EmbeddedMesh::new(vertices, faces).map_err(CliError::from)
}

pub fn write_obj(vertices: &[Point3<f64>], faces: &[[usize; 3]]) -> String {
    let mut out = String::new();
    for v in vertices {
        out.push_str(&format!("v {:.16e} {:.16e} {:.16e}\n", v.x, v.y, v.z));
    }
    for f in faces {
        out.push_str(&format!("f {} {} {}\n", f[0] + 1, f[1] + 1, f[2] + 1));
    }
    out
}

/// Hash of a cage's canonical text form.
pub fn cage_hash(cage: &Cage) -> [u8; 32] {
    Sha256::digest(write_cage(cage).as_bytes()).into()
}

/// Hash of the mesh content (vertex coordinates and face indices), so that
/// reformatting the OBJ file does not invalidate coordinate tables.
pub fn mesh_hash(mesh: &EmbeddedMesh) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update((mesh.vertices().len() as u64).to_le_bytes());
    for v in mesh.vertices() {
        h.update(v.x.to_le_bytes());
        h.update(v.y.to_le_bytes());
        h.update(v.z.to_le_bytes());
    }
    h.update((mesh.faces().len() as u64).to_le_bytes());
    for f in mesh.faces() {
        for i in f {
            h.update((*i as u64).to_le_bytes());
        }
    }
    h.finalize().into()
}

const COORD_MAGIC: &[u8; 8] = b"BZCGTAB\0";
const COORD_FORMAT_VERSION: u32 = 1;

/// Identity of the inputs a coordinate file was computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoordProvenance {
    pub cage_hash: [u8; 32],
    pub mesh_hash: [u8; 32],
}

/// Binary coordinate container: fixed header, per-patch block lengths, then
/// row-major 64-bit little-endian floats.
pub fn write_coords(table: &CoordinateTable, provenance: &CoordProvenance) -> Vec<u8> {
    let layout = table.layout();
    let mut out = Vec::with_capacity(128 + table.data().len() * 8);
    out.extend_from_slice(COORD_MAGIC);
    out.extend_from_slice(&COORD_FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&provenance.cage_hash);
    out.extend_from_slice(&provenance.mesh_hash);
    out.push(match table.params().variant {
        Variant::Normals => 0,
        Variant::CrossProduct => 1,
    });
    out.push(table.projected as u8);
    out.extend_from_slice(&(table.params().grid as u32).to_le_bytes());
    out.extend_from_slice(&(table.params().levels as u32).to_le_bytes());
    out.extend_from_slice(&(table.skipped_elements as u64).to_le_bytes());
    out.extend_from_slice(&(table.vertex_count() as u64).to_le_bytes());
    out.extend_from_slice(&(layout.patch_count() as u32).to_le_bytes());
    for k in 0..layout.patch_count() {
        out.extend_from_slice(&(layout.phi_count(k) as u32).to_le_bytes());
        out.extend_from_slice(&(layout.psi_count(k) as u32).to_le_bytes());
    }
    for x in table.data() {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(CliError::coords_file("coordinate file is truncated"));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn read_coords(bytes: &[u8]) -> Result<(CoordinateTable, CoordProvenance)> {
    let mut r = ByteReader { bytes, pos: 0 };
    if r.take(8)? != COORD_MAGIC {
        return Err(CliError::coords_file("not a coordinate file (bad magic)"));
    }
    let version = r.u32()?;
    if version != COORD_FORMAT_VERSION {
        return Err(CliError::coords_file(format!(
            "unsupported coordinate format version {version}"
        )));
    }
    let cage_hash: [u8; 32] = r.take(32)?.try_into().unwrap();
    let mesh_hash: [u8; 32] = r.take(32)?.try_into().unwrap();
    let variant = match r.u8()? {
        0 => Variant::Normals,
        1 => Variant::CrossProduct,
        other => {
            return Err(CliError::coords_file(format!("unknown variant tag {other}")));
        }
    };
    let projected = match r.u8()? {
        0 => false,
        1 => true,
        other => {
            return Err(CliError::coords_file(format!("bad projected flag {other}")));
        }
    };
    let grid = r.u32()? as usize;
    let levels = r.u32()? as usize;
    let skipped = r.u64()? as usize;
    let vertex_count = r.u64()? as usize;
    let patch_count = r.u32()? as usize;
    let mut phi_counts = Vec::with_capacity(patch_count);
    let mut psi_counts = Vec::with_capacity(patch_count);
    for _ in 0..patch_count {
        phi_counts.push(r.u32()? as usize);
        psi_counts.push(r.u32()? as usize);
    }
    let layout = CageLayout::from_counts(phi_counts, psi_counts);
    let expected = vertex_count
        .checked_mul(layout.row_len())
        .ok_or_else(|| CliError::coords_file("row count overflows"))?;
    let body = r.take(expected * 8)?;
    if r.pos != bytes.len() {
        return Err(CliError::coords_file(format!(
            "{} trailing bytes after the coordinate data",
            bytes.len() - r.pos
        )));
    }
    let data: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let params = CoordParams { grid, levels, variant };
    let table = CoordinateTable::from_parts(layout, params, data, projected, skipped)?;
    if table.vertex_count() != vertex_count {
        return Err(CliError::coords_file(format!(
            "header claims {vertex_count} rows, body holds {}",
            table.vertex_count()
        )));
    }
    Ok((table, CoordProvenance { cage_hash, mesh_hash }))
}
