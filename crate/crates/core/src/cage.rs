//! Cage geometry: tensor-product and triangular Bezier patches, watertight
//! cages assembled from them, and the embedded meshes they deform.
//!
//! Watertightness is a structural property here: two patches are considered
//! glued exactly when they carry bitwise-identical boundary control polylines
//! with opposite orientation. No epsilon snapping is performed anywhere, so
//! cage authoring tools must emit shared boundaries from identical arithmetic.

use std::collections::HashMap;

use nalgebra::{Point3, Vector3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::signed_solid_angle;

/// Highest supported polynomial degree along any parameter direction.
pub const MAX_DEGREE: usize = 16;

/// Resolution used when a cage is tessellated for point-in-cage queries.
pub const INTERIOR_TEST_RES: usize = 16;

/// Acceptance band around a full solid angle for the point-in-cage test.
pub const INTERIOR_TEST_TOL: f64 = 1e-2;

fn canonical(p: Point3<f64>) -> Point3<f64> {
    // Map -0.0 to +0.0 so bitwise boundary matching is insensitive to the
    // sign of zero, which different construction orders can produce.
    Point3::new(
        if p.x == 0.0 { 0.0 } else { p.x },
        if p.y == 0.0 { 0.0 } else { p.y },
        if p.z == 0.0 { 0.0 } else { p.z },
    )
}

fn check_degree(d: usize) -> Result<()> {
    if d < 1 || d > MAX_DEGREE {
        return Err(Error::InvalidPatch(format!(
            "degree {d} out of supported range 1..={MAX_DEGREE}"
        )));
    }
    Ok(())
}

fn check_finite(points: &[Point3<f64>]) -> Result<()> {
    for (i, p) in points.iter().enumerate() {
        if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
            return Err(Error::InvalidPatch(format!(
                "control point {i} has a non-finite coordinate"
            )));
        }
    }
    Ok(())
}

/// Which parameter domain a patch lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatchKind {
    /// Tensor-product patch over the unit square.
    Tensor,
    /// Triangular patch over the unit simplex `u, v >= 0, u + v <= 1`.
    Triangle,
}

/// Tensor-product Bezier patch of degree `(m, n)` over `[0,1]^2`.
///
/// Control points are stored row-major in `i` (the `u` index): entry
/// `i * (n + 1) + j` is the control point with `u`-index `i` and `v`-index `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorPatch {
    degree_u: usize,
    degree_v: usize,
    points: Vec<Point3<f64>>,
}

impl TensorPatch {
    pub fn new(degree_u: usize, degree_v: usize, points: Vec<Point3<f64>>) -> Result<Self> {
        check_degree(degree_u)?;
        check_degree(degree_v)?;
        let expect = (degree_u + 1) * (degree_v + 1);
        if points.len() != expect {
            return Err(Error::InvalidPatch(format!(
                "degree ({degree_u}, {degree_v}) needs {expect} control points, got {}",
                points.len()
            )));
        }
        check_finite(&points)?;
        let points = points.into_iter().map(canonical).collect();
        Ok(TensorPatch { degree_u, degree_v, points })
    }

    pub fn degrees(&self) -> (usize, usize) {
        (self.degree_u, self.degree_v)
    }

    pub fn points(&self) -> &[Point3<f64>] {
        &self.points
    }

    /// Flat index of control point `(i, j)`.
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i <= self.degree_u && j <= self.degree_v);
        i * (self.degree_v + 1) + j
    }

    pub fn point(&self, i: usize, j: usize) -> Point3<f64> {
        self.points[self.index(i, j)]
    }
}

/// Triangular Bezier patch of degree `n` over the unit simplex.
///
/// A control point carries barycentric indices `(i, j, k)` with
/// `i + j + k = n`; storage is lexicographic in `(i, j)` with `k` implied.
#[derive(Debug, Clone, PartialEq)]
pub struct TrianglePatch {
    degree: usize,
    points: Vec<Point3<f64>>,
}

impl TrianglePatch {
    pub fn new(degree: usize, points: Vec<Point3<f64>>) -> Result<Self> {
        check_degree(degree)?;
        let expect = (degree + 1) * (degree + 2) / 2;
        if points.len() != expect {
            return Err(Error::InvalidPatch(format!(
                "degree {degree} needs {expect} control points, got {}",
                points.len()
            )));
        }
        check_finite(&points)?;
        let points = points.into_iter().map(canonical).collect();
        Ok(TrianglePatch { degree, points })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn points(&self) -> &[Point3<f64>] {
        &self.points
    }

    /// Flat index of the control point with barycentric indices `(i, j, n-i-j)`.
    pub fn index(&self, i: usize, j: usize) -> usize {
        let n = self.degree;
        debug_assert!(i + j <= n);
        i * (n + 1) - i * (i.saturating_sub(1)) / 2 + j
    }

    pub fn point(&self, i: usize, j: usize) -> Point3<f64> {
        self.points[self.index(i, j)]
    }
}

/// A cage face: either patch flavor.
#[derive(Debug, Clone, PartialEq)]
pub enum Patch {
    Tensor(TensorPatch),
    Triangle(TrianglePatch),
}

impl Patch {
    pub fn kind(&self) -> PatchKind {
        match self {
            Patch::Tensor(_) => PatchKind::Tensor,
            Patch::Triangle(_) => PatchKind::Triangle,
        }
    }

    pub fn control_count(&self) -> usize {
        self.control_points().len()
    }

    pub fn control_points(&self) -> &[Point3<f64>] {
        match self {
            Patch::Tensor(p) => p.points(),
            Patch::Triangle(p) => p.points(),
        }
    }

    /// Degrees as a pair; a triangular patch reports `(n, n)`.
    pub fn degrees(&self) -> (usize, usize) {
        match self {
            Patch::Tensor(p) => p.degrees(),
            Patch::Triangle(p) => (p.degree(), p.degree()),
        }
    }

    /// Boundary control polylines, each traversed along the patch's
    /// counter-clockwise boundary loop. Tensor patches yield four, triangular
    /// patches three.
    pub(crate) fn boundary_polylines(&self) -> Vec<Vec<Point3<f64>>> {
        match self {
            Patch::Tensor(p) => {
                let (m, n) = p.degrees();
                let side0 = (0..=m).map(|i| p.point(i, 0)).collect();
                let side1 = (0..=n).map(|j| p.point(m, j)).collect();
                let side2 = (0..=m).rev().map(|i| p.point(i, n)).collect();
                let side3 = (0..=n).rev().map(|j| p.point(0, j)).collect();
                vec![side0, side1, side2, side3]
            }
            Patch::Triangle(p) => {
                let n = p.degree();
                let side0 = (0..=n).map(|i| p.point(i, 0)).collect();
                let side1 = (0..=n).rev().map(|i| p.point(i, n - i)).collect();
                let side2 = (0..=n).rev().map(|j| p.point(0, j)).collect();
                vec![side0, side1, side2]
            }
        }
    }

    /// Total unsigned area of the control net, used to detect collapsed patches.
    fn control_net_area(&self) -> f64 {
        let tri_area = |a: Point3<f64>, b: Point3<f64>, c: Point3<f64>| {
            0.5 * (b - a).cross(&(c - a)).norm()
        };
        let mut area = 0.0;
        match self {
            Patch::Tensor(p) => {
                let (m, n) = p.degrees();
                for i in 0..m {
                    for j in 0..n {
                        let a = p.point(i, j);
                        let b = p.point(i + 1, j);
                        let c = p.point(i + 1, j + 1);
                        let d = p.point(i, j + 1);
                        area += tri_area(a, b, c) + tri_area(a, c, d);
                    }
                }
            }
            Patch::Triangle(p) => {
                let n = p.degree();
                for i in 0..n {
                    for j in 0..n - i {
                        area += tri_area(p.point(i, j), p.point(i + 1, j), p.point(i, j + 1));
                        if i + j + 2 <= n {
                            area += tri_area(
                                p.point(i + 1, j),
                                p.point(i + 1, j + 1),
                                p.point(i, j + 1),
                            );
                        }
                    }
                }
            }
        }
        area
    }
}

/// A closed surface assembled from Bezier patches with outward orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct Cage {
    patches: Vec<Patch>,
    outward: bool,
}

impl Cage {
    /// Wrap patches into a cage. The caller asserts that patch normals point
    /// out of the enclosed volume; [`validate_cage`] checks the structural
    /// consequences of that claim.
    pub fn new(patches: Vec<Patch>) -> Self {
        Cage { patches, outward: true }
    }

    pub fn patches(&self) -> &[Patch] {
        &self.patches
    }

    pub fn outward(&self) -> bool {
        self.outward
    }

    pub fn total_controls(&self) -> usize {
        self.patches.iter().map(|p| p.control_count()).sum()
    }

    /// Diagonal of the control-point bounding box.
    pub fn diameter(&self) -> f64 {
        let mut lo = Vector3::repeat(f64::INFINITY);
        let mut hi = Vector3::repeat(f64::NEG_INFINITY);
        for patch in &self.patches {
            for p in patch.control_points() {
                lo = lo.inf(&p.coords);
                hi = hi.sup(&p.coords);
            }
        }
        if lo.x > hi.x {
            return 0.0;
        }
        (hi - lo).norm()
    }

    /// Error unless `other` has the same patch count, kinds, and degrees.
    pub fn congruent_structure(&self, other: &Cage) -> Result<()> {
        if self.patches.len() != other.patches.len() {
            return Err(Error::StructureMismatch {
                index: self.patches.len().min(other.patches.len()),
                reason: format!(
                    "patch count {} vs {}",
                    self.patches.len(),
                    other.patches.len()
                ),
            });
        }
        for (k, (a, b)) in self.patches.iter().zip(&other.patches).enumerate() {
            if a.kind() != b.kind() || a.degrees() != b.degrees() {
                return Err(Error::StructureMismatch {
                    index: k,
                    reason: format!(
                        "kind/degree {:?} {:?} vs {:?} {:?}",
                        a.kind(),
                        a.degrees(),
                        b.kind(),
                        b.degrees()
                    ),
                });
            }
        }
        Ok(())
    }
}

/// Triangle mesh embedded in a cage: the geometry being deformed.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedMesh {
    vertices: Vec<Point3<f64>>,
    faces: Vec<[usize; 3]>,
}

impl EmbeddedMesh {
    pub fn new(vertices: Vec<Point3<f64>>, faces: Vec<[usize; 3]>) -> Result<Self> {
        for (i, p) in vertices.iter().enumerate() {
            if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
                return Err(Error::InvalidMesh(format!(
                    "vertex {i} has a non-finite coordinate"
                )));
            }
        }
        for (f, face) in faces.iter().enumerate() {
            for &v in face {
                if v >= vertices.len() {
                    return Err(Error::InvalidMesh(format!(
                        "face {f} references vertex {v}, but only {} exist",
                        vertices.len()
                    )));
                }
            }
        }
        Ok(EmbeddedMesh { vertices, faces })
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    /// Same connectivity, new vertex positions.
    pub fn with_vertices(&self, vertices: Vec<Point3<f64>>) -> Result<Self> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::InvalidMesh(format!(
                "vertex count changed: {} vs {}",
                vertices.len(),
                self.vertices.len()
            )));
        }
        EmbeddedMesh::new(vertices, self.faces.clone())
    }
}

/// Identifies one boundary polyline: `side` indexes the counter-clockwise
/// boundary loop of patch `patch` (four sides for tensor patches, three for
/// triangular ones).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryId {
    pub patch: usize,
    pub side: usize,
}

/// Outcome of structural cage validation.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    /// Boundary polylines with no reverse-oriented partner on another patch.
    pub unmatched: Vec<BoundaryId>,
    /// Pairs of boundary polylines that match with equal orientation,
    /// indicating a flipped patch.
    pub orientation_conflicts: Vec<(BoundaryId, BoundaryId)>,
    /// Patches whose control net has zero area.
    pub degenerate_patches: Vec<usize>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.unmatched.is_empty()
            && self.orientation_conflicts.is_empty()
            && self.degenerate_patches.is_empty()
    }

    pub fn summary(&self) -> String {
        if self.passed() {
            return "watertight, consistently oriented, no degenerate patches".to_string();
        }
        let mut parts = Vec::new();
        if !self.unmatched.is_empty() {
            parts.push(format!(
                "{} unmatched boundary polylines ({:?})",
                self.unmatched.len(),
                self.unmatched
                    .iter()
                    .take(4)
                    .map(|b| (b.patch, b.side))
                    .collect::<Vec<_>>()
            ));
        }
        if !self.orientation_conflicts.is_empty() {
            parts.push(format!(
                "{} orientation conflicts ({:?})",
                self.orientation_conflicts.len(),
                self.orientation_conflicts
                    .iter()
                    .take(4)
                    .map(|(a, b)| ((a.patch, a.side), (b.patch, b.side)))
                    .collect::<Vec<_>>()
            ));
        }
        if !self.degenerate_patches.is_empty() {
            parts.push(format!("degenerate patches {:?}", self.degenerate_patches));
        }
        parts.join("; ")
    }
}

fn polyline_key(points: &[Point3<f64>]) -> Vec<[u64; 3]> {
    points
        .iter()
        .map(|p| [p.x.to_bits(), p.y.to_bits(), p.z.to_bits()])
        .collect()
}

/// Check that every boundary polyline is shared, reverse-oriented, with
/// exactly one polyline of another patch, and that no patch has a collapsed
/// control net.
pub fn validate_cage(cage: &Cage) -> ValidationReport {
    let mut report = ValidationReport::default();

    struct Slot {
        id: BoundaryId,
        fwd: Vec<[u64; 3]>,
        rev: Vec<[u64; 3]>,
    }

    let mut slots = Vec::new();
    for (pi, patch) in cage.patches().iter().enumerate() {
        if patch.control_net_area() == 0.0 {
            report.degenerate_patches.push(pi);
        }
        for (si, line) in patch.boundary_polylines().into_iter().enumerate() {
            let fwd = polyline_key(&line);
            let mut rev = fwd.clone();
            rev.reverse();
            slots.push(Slot { id: BoundaryId { patch: pi, side: si }, fwd, rev });
        }
    }

    let mut by_fwd: HashMap<&[[u64; 3]], Vec<usize>> = HashMap::new();
    for (i, slot) in slots.iter().enumerate() {
        by_fwd.entry(slot.fwd.as_slice()).or_default().push(i);
    }

    let mut matched = vec![false; slots.len()];
    for i in 0..slots.len() {
        if matched[i] {
            continue;
        }
        let partner = by_fwd
            .get(slots[i].rev.as_slice())
            .into_iter()
            .flatten()
            .copied()
            .find(|&j| j != i && !matched[j] && slots[j].id.patch != slots[i].id.patch);
        if let Some(j) = partner {
            matched[i] = true;
            matched[j] = true;
        }
    }

    for i in 0..slots.len() {
        if matched[i] {
            continue;
        }
        // Not watertight here; distinguish a flipped neighbor from a hole.
        let same_oriented = by_fwd
            .get(slots[i].fwd.as_slice())
            .into_iter()
            .flatten()
            .copied()
            .find(|&j| j != i && slots[j].id.patch != slots[i].id.patch);
        match same_oriented {
            Some(j) if i < j => report
                .orientation_conflicts
                .push((slots[i].id, slots[j].id)),
            Some(_) => {}
            None => report.unmatched.push(slots[i].id),
        }
    }

    report
}

/// Promote a quad mesh to a cage of degree-`(d, d)` tensor patches.
///
/// Each quad `[q0, q1, q2, q3]` is an oriented corner loop (counter-clockwise
/// seen from outside); control point `(i, j)` samples the bilinear
/// interpolant at `(i/d, j/d)`, with `u` running from the `q0q3` edge toward
/// `q1q2` and `v` from `q0q1` toward `q3q2`.
///
/// The interpolation weights are formed from integer products so that two
/// quads sharing an edge (in opposite directions) produce bitwise-identical
/// boundary control polylines, keeping the elevated cage watertight.
pub fn elevate_quad_cage(quads: &[[Point3<f64>; 4]], d: usize) -> Result<Cage> {
    check_degree(d).map_err(|_| {
        Error::InvalidPatch(format!("elevation degree {d} out of range 1..={MAX_DEGREE}"))
    })?;
    let mut patches = Vec::with_capacity(quads.len());
    for (qi, quad) in quads.iter().enumerate() {
        for a in 0..4 {
            for b in a + 1..4 {
                if quad[a] == quad[b] {
                    return Err(Error::DegenerateQuad { index: qi });
                }
            }
        }
        let q: Vec<Point3<f64>> = quad.iter().copied().map(canonical).collect();
        let dd = (d * d) as f64;
        let mut points = Vec::with_capacity((d + 1) * (d + 1));
        for i in 0..=d {
            for j in 0..=d {
                let w0 = ((d - i) * (d - j)) as f64 / dd;
                let w1 = (i * (d - j)) as f64 / dd;
                let w2 = (i * j) as f64 / dd;
                let w3 = ((d - i) * j) as f64 / dd;
                let coord = |a: usize| {
                    (w0 * q[0][a] + w1 * q[1][a]) + (w2 * q[2][a] + w3 * q[3][a])
                };
                points.push(Point3::new(coord(0), coord(1), coord(2)));
            }
        }
        patches.push(Patch::Tensor(TensorPatch::new(d, d, points)?));
    }
    Ok(Cage::new(patches))
}

/// Sample every patch on a uniform `r x r` parameter grid and emit one
/// triangle mesh. Patch samples are not welded across shared boundaries;
/// orientation follows the patches, so a valid cage tessellates to a closed,
/// outward-oriented triangle soup.
pub fn tessellate_cage(cage: &Cage, r: usize) -> EmbeddedMesh {
    assert!(r >= 1, "tessellation resolution must be at least 1");
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for patch in cage.patches() {
        let base = vertices.len();
        match patch.kind() {
            PatchKind::Tensor => {
                for i in 0..=r {
                    for j in 0..=r {
                        let (u, v) = (i as f64 / r as f64, j as f64 / r as f64);
                        vertices.push(patch.point_raw(u, v));
                    }
                }
                let idx = |i: usize, j: usize| base + i * (r + 1) + j;
                for i in 0..r {
                    for j in 0..r {
                        faces.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
                        faces.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
                    }
                }
            }
            PatchKind::Triangle => {
                // Row-major over i with rows shrinking as i grows.
                let mut offsets = Vec::with_capacity(r + 1);
                let mut count = 0usize;
                for i in 0..=r {
                    offsets.push(count);
                    count += r + 1 - i;
                }
                for i in 0..=r {
                    for j in 0..=r - i {
                        let (u, v) = (i as f64 / r as f64, j as f64 / r as f64);
                        vertices.push(patch.point_raw(u, v));
                    }
                }
                let idx = |i: usize, j: usize| base + offsets[i] + j;
                for i in 0..r {
                    for j in 0..r - i {
                        faces.push([idx(i, j), idx(i + 1, j), idx(i, j + 1)]);
                        if i + j + 2 <= r {
                            faces.push([idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)]);
                        }
                    }
                }
            }
        }
    }
    EmbeddedMesh::new(vertices, faces).expect("tessellation indices are in range by construction")
}

/// Winding-number classification of `points` against the tessellated cage:
/// `true` where the accumulated signed solid angle is within
/// [`INTERIOR_TEST_TOL`] of a full sphere.
pub fn interior_flags(cage: &Cage, points: &[Point3<f64>], r: usize) -> Vec<bool> {
    let shell = tessellate_cage(cage, r);
    let verts = shell.vertices();
    points
        .par_iter()
        .map(|p| {
            let mut total = 0.0;
            for f in shell.faces() {
                total += signed_solid_angle(&verts[f[0]], &verts[f[1]], &verts[f[2]], p);
            }
            (total - 4.0 * std::f64::consts::PI).abs() < INTERIOR_TEST_TOL
        })
        .collect()
}
