//! Coordinate tables: for every mesh vertex, one row of influence weights
//! against the cage's control points.
//!
//! A row has two blocks. The first holds point weights `phi`, one per cage
//! control point; blending control points with them reconstructs the harmonic
//! extension of the boundary position data. The second block holds normal
//! weights `psi`, which multiply either the control-net normals or — in the
//! cross-product variant — the pairwise control-point cross products, and
//! carry the derivative part of the reconstruction.
//!
//! Rows are raw accumulation results; exactness on affine motions comes from
//! the separate projection step (see the sibling `projection` module).

use nalgebra::Point3;
use rayon::prelude::*;

use crate::cage::{interior_flags, validate_cage, Cage, EmbeddedMesh, Patch, INTERIOR_TEST_RES};
use crate::error::{Error, Result};
use crate::kernels::{green_integral_triangle, invert_point, signed_solid_angle};
use crate::normals::{cage_control_net_normals, ControlNetNormals};
use crate::tess::{build_uv_tessellation, TessellationPattern};

/// How the normal block of a coordinate row is parameterized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// One weight per control point, paired with control-net normals.
    Normals,
    /// One weight per unordered control-point pair `(a, b)`, `a < b`, paired
    /// with `b_a x b_b`. Degree-dependent and exact for the surface normal,
    /// at the price of quadratically more columns.
    CrossProduct,
}

/// Sampling parameters for coordinate computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoordParams {
    /// Base tessellation grid per patch (cells per parameter direction).
    pub grid: usize,
    /// Refinement rounds toward each vertex's closest-point seed.
    pub levels: usize,
    pub variant: Variant,
}

impl Default for CoordParams {
    fn default() -> Self {
        CoordParams { grid: 8, levels: 4, variant: Variant::Normals }
    }
}

/// Column layout of a coordinate row for a given cage and variant:
/// `[phi per patch, patch-major][psi per patch, patch-major]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CageLayout {
    phi_counts: Vec<usize>,
    psi_counts: Vec<usize>,
    phi_total: usize,
    psi_total: usize,
}

impl CageLayout {
    pub fn new(cage: &Cage, variant: Variant) -> Self {
        let phi_counts: Vec<usize> = cage.patches().iter().map(|p| p.control_count()).collect();
        let psi_counts: Vec<usize> = cage
            .patches()
            .iter()
            .map(|p| {
                let c = p.control_count();
                match variant {
                    Variant::Normals => c,
                    Variant::CrossProduct => c * (c - 1) / 2,
                }
            })
            .collect();
        let phi_total = phi_counts.iter().sum();
        let psi_total = psi_counts.iter().sum();
        CageLayout { phi_counts, psi_counts, phi_total, psi_total }
    }

    /// Rebuild a layout from stored per-patch block lengths.
    pub fn from_counts(phi_counts: Vec<usize>, psi_counts: Vec<usize>) -> Self {
        let phi_total = phi_counts.iter().sum();
        let psi_total = psi_counts.iter().sum();
        CageLayout { phi_counts, psi_counts, phi_total, psi_total }
    }

    pub fn row_len(&self) -> usize {
        self.phi_total + self.psi_total
    }

    pub fn phi_total(&self) -> usize {
        self.phi_total
    }

    pub fn psi_total(&self) -> usize {
        self.psi_total
    }

    /// Column where patch `k`'s phi block starts.
    pub fn phi_offset(&self, k: usize) -> usize {
        self.phi_counts[..k].iter().sum()
    }

    /// Column where patch `k`'s psi block starts.
    pub fn psi_offset(&self, k: usize) -> usize {
        self.phi_total + self.psi_counts[..k].iter().sum::<usize>()
    }

    pub fn patch_count(&self) -> usize {
        self.phi_counts.len()
    }

    pub fn phi_count(&self, k: usize) -> usize {
        self.phi_counts[k]
    }

    pub fn psi_count(&self, k: usize) -> usize {
        self.psi_counts[k]
    }
}

/// Dense per-vertex coordinate rows plus the bookkeeping needed to use them.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateTable {
    layout: CageLayout,
    params: CoordParams,
    data: Vec<f64>,
    vertex_count: usize,
    /// Whether rows have been through linear-reproduction projection.
    pub projected: bool,
    /// Elements dropped because their blended normal vanished at the sample
    /// point (zero for well-formed cages).
    pub skipped_elements: usize,
}

impl CoordinateTable {
    pub fn layout(&self) -> &CageLayout {
        &self.layout
    }

    pub fn params(&self) -> &CoordParams {
        &self.params
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn row(&self, vertex: usize) -> &[f64] {
        let w = self.layout.row_len();
        &self.data[vertex * w..(vertex + 1) * w]
    }

    pub fn row_mut(&mut self, vertex: usize) -> &mut [f64] {
        let w = self.layout.row_len();
        &mut self.data[vertex * w..(vertex + 1) * w]
    }

    pub(crate) fn data_mut(&mut self) -> &mut Vec<f64> {
        &mut self.data
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.layout.row_len())
    }

    /// Assemble a table from raw parts (used when loading persisted rows).
    pub fn from_parts(
        layout: CageLayout,
        params: CoordParams,
        data: Vec<f64>,
        projected: bool,
        skipped_elements: usize,
    ) -> Result<Self> {
        let w = layout.row_len();
        if w == 0 || data.len() % w != 0 {
            return Err(Error::InvalidMesh(format!(
                "coordinate data length {} is not a multiple of the row width {w}",
                data.len()
            )));
        }
        let vertex_count = data.len() / w;
        Ok(CoordinateTable { layout, params, data, vertex_count, projected, skipped_elements })
    }
}

/// Reusable per-thread scratch for the accumulation hot path.
struct Scratch {
    mapped: Vec<Point3<f64>>,
    weights: Vec<f64>,
    grad_u: Vec<f64>,
    grad_v: Vec<f64>,
}

impl Scratch {
    fn new() -> Self {
        Scratch {
            mapped: Vec::new(),
            weights: Vec::new(),
            grad_u: Vec::new(),
            grad_v: Vec::new(),
        }
    }
}

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

/// Point-weight contributions of one patch at `eta`, one value per control
/// point, using the given sample pattern.
pub fn patch_phi(patch: &Patch, pattern: &TessellationPattern, eta: &Point3<f64>) -> Vec<f64> {
    let mut out = vec![0.0; patch.control_count()];
    let mut scratch = Scratch::new();
    accumulate(
        patch,
        None,
        pattern,
        eta,
        Some(&mut out),
        None,
        Variant::Normals,
        &mut scratch,
    );
    out
}

/// Normal-weight contributions of one patch at `eta` (one per control point)
/// plus the number of skipped elements.
pub fn patch_psi(
    patch: &Patch,
    nets: &ControlNetNormals,
    pattern: &TessellationPattern,
    eta: &Point3<f64>,
) -> (Vec<f64>, usize) {
    let mut out = vec![0.0; patch.control_count()];
    let mut scratch = Scratch::new();
    let skipped = accumulate(
        patch,
        Some(nets),
        pattern,
        eta,
        None,
        Some(&mut out),
        Variant::Normals,
        &mut scratch,
    );
    (out, skipped)
}

/// Cross-product-variant normal weights of one patch at `eta`, one value per
/// control-point pair `(a, b)` with `a < b` in lexicographic order, plus the
/// skipped-element count.
pub fn patch_psi_crossproduct(
    patch: &Patch,
    pattern: &TessellationPattern,
    eta: &Point3<f64>,
) -> (Vec<f64>, usize) {
    let c = patch.control_count();
    let mut out = vec![0.0; c * (c - 1) / 2];
    let mut scratch = Scratch::new();
    let skipped = accumulate(
        patch,
        None,
        pattern,
        eta,
        None,
        Some(&mut out),
        Variant::CrossProduct,
        &mut scratch,
    );
    (out, skipped)
}

/// Shared accumulation core. Writing both blocks in one pass performs, per
/// output slot, exactly the operations the single-block calls perform, so
/// fused and separate results agree bit for bit.
#[allow(clippy::too_many_arguments)]
fn accumulate(
    patch: &Patch,
    nets: Option<&ControlNetNormals>,
    pattern: &TessellationPattern,
    eta: &Point3<f64>,
    mut phi_out: Option<&mut [f64]>,
    mut psi_out: Option<&mut [f64]>,
    variant: Variant,
    scratch: &mut Scratch,
) -> usize {
    let count = patch.control_count();
    scratch.mapped.clear();
    scratch
        .mapped
        .extend(pattern.verts.iter().map(|&(u, v)| patch.point_raw(u, v)));

    let mut skipped = 0usize;
    for (t, tri) in pattern.tris.iter().enumerate() {
        let a = &scratch.mapped[tri[0] as usize];
        let b = &scratch.mapped[tri[1] as usize];
        let c = &scratch.mapped[tri[2] as usize];
        let (cu, cv) = pattern.centroid(t);

        if phi_out.is_some() || matches!(variant, Variant::Normals) {
            patch.weights_raw_into(cu, cv, &mut scratch.weights);
        }

        if let Some(phi) = phi_out.as_deref_mut() {
            let omega = signed_solid_angle(a, b, c, eta);
            let w = omega / FOUR_PI;
            for (slot, lam) in phi.iter_mut().zip(&scratch.weights) {
                *slot += lam * w;
            }
        }

        if let Some(psi) = psi_out.as_deref_mut() {
            let gint = green_integral_triangle(a, b, c, eta);
            match variant {
                Variant::Normals => {
                    let nets = nets.expect("normals variant needs control-net normals");
                    let mut nfield = nalgebra::Vector3::zeros();
                    for (lam, nv) in scratch.weights.iter().zip(nets.normals()) {
                        nfield += *lam * *nv;
                    }
                    let nn = nfield.norm();
                    if nn == 0.0 {
                        skipped += 1;
                        continue;
                    }
                    let coef = gint / nn;
                    for (slot, lam) in psi.iter_mut().zip(&scratch.weights) {
                        *slot += lam * coef;
                    }
                }
                Variant::CrossProduct => {
                    let a_mapped = 0.5 * (b - a).cross(&(c - a)).norm();
                    if a_mapped == 0.0 {
                        skipped += 1;
                        continue;
                    }
                    patch.weight_grads_raw_into(cu, cv, &mut scratch.grad_u, &mut scratch.grad_v);
                    let scale = gint * pattern.param_area(t) / a_mapped;
                    let gu = &scratch.grad_u;
                    let gv = &scratch.grad_v;
                    let mut idx = 0;
                    for p in 0..count {
                        for q in p + 1..count {
                            psi[idx] += (gu[p] * gv[q] - gu[q] * gv[p]) * scale;
                            idx += 1;
                        }
                    }
                }
            }
        }
    }
    skipped
}

/// Compute raw coordinate rows for every mesh vertex against `cage`.
///
/// The cage must validate as watertight and consistently oriented, and every
/// mesh vertex must lie inside it. Rows come back unprojected.
pub fn cage_coordinates(
    cage: &Cage,
    mesh: &EmbeddedMesh,
    params: &CoordParams,
) -> Result<CoordinateTable> {
    let report = validate_cage(cage);
    if !report.passed() {
        return Err(Error::InvalidCage(report.summary()));
    }
    let inside = interior_flags(cage, mesh.vertices(), INTERIOR_TEST_RES);
    let outside: Vec<usize> = inside
        .iter()
        .enumerate()
        .filter(|(_, ok)| !**ok)
        .map(|(i, _)| i)
        .collect();
    if !outside.is_empty() {
        return Err(Error::outside_cage(outside));
    }

    let layout = CageLayout::new(cage, params.variant);
    let nets = match params.variant {
        Variant::Normals => cage_control_net_normals(cage.patches()),
        Variant::CrossProduct => Vec::new(),
    };

    let row_len = layout.row_len();
    let n_verts = mesh.vertices().len();
    let mut data = vec![0.0f64; n_verts * row_len];
    let layout_ref = &layout;
    let nets_ref = &nets;

    let skipped: usize = data
        .par_chunks_exact_mut(row_len)
        .zip_eq(mesh.vertices().par_iter())
        .map(|(row, eta)| {
            let mut scratch = Scratch::new();
            let mut skipped = 0usize;
            for (k, patch) in cage.patches().iter().enumerate() {
                let seed = invert_point(patch, eta);
                let pattern = build_uv_tessellation(
                    patch.kind(),
                    seed.u,
                    seed.v,
                    params.grid,
                    params.levels,
                );
                let (phi_block, rest) = row[layout_ref.phi_offset(k)..].split_at_mut(
                    layout_ref.phi_count(k),
                );
                // `rest` spans up to the row end; re-slice for the psi block.
                let psi_start = layout_ref.psi_offset(k) - layout_ref.phi_offset(k)
                    - layout_ref.phi_count(k);
                let psi_block = &mut rest[psi_start..psi_start + layout_ref.psi_count(k)];
                let patch_nets = match params.variant {
                    Variant::Normals => Some(&nets_ref[k]),
                    Variant::CrossProduct => None,
                };
                skipped += accumulate(
                    patch,
                    patch_nets,
                    &pattern,
                    eta,
                    Some(phi_block),
                    Some(psi_block),
                    params.variant,
                    &mut scratch,
                );
            }
            skipped
        })
        .sum();

    Ok(CoordinateTable {
        layout,
        params: *params,
        data,
        vertex_count: n_verts,
        projected: false,
        skipped_elements: skipped,
    })
}

/// Evaluate the phi-weighted control-point sum plus the psi-weighted normal
/// sum for one row: the position the row reconstructs for its vertex.
pub fn reconstruct_row(
    cage: &Cage,
    nets: &[ControlNetNormals],
    layout: &CageLayout,
    variant: Variant,
    row: &[f64],
) -> Point3<f64> {
    let mut acc = nalgebra::Vector3::zeros();
    for (k, patch) in cage.patches().iter().enumerate() {
        let phi = &row[layout.phi_offset(k)..layout.phi_offset(k) + layout.phi_count(k)];
        for (w, p) in phi.iter().zip(patch.control_points()) {
            acc += *w * p.coords;
        }
        let psi = &row[layout.psi_offset(k)..layout.psi_offset(k) + layout.psi_count(k)];
        match variant {
            Variant::Normals => {
                for (w, nv) in psi.iter().zip(nets[k].normals()) {
                    acc += *w * *nv;
                }
            }
            Variant::CrossProduct => {
                let pts = patch.control_points();
                let mut idx = 0;
                for p in 0..pts.len() {
                    for q in p + 1..pts.len() {
                        acc += psi[idx] * pts[p].coords.cross(&pts[q].coords);
                        idx += 1;
                    }
                }
            }
        }
    }
    Point3::from(acc)
}
