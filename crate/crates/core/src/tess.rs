//! Adaptive parameter-domain tessellation, concentrated around a seed point.
//!
//! Patterns start from a uniform grid and refine in rounds: a round halves
//! its predecessor's distance threshold and quarters every triangle whose
//! centroid is closer to the seed than the threshold. A closure pass then
//! removes hanging vertices, so the pattern is always a conforming
//! triangulation — adjacent triangles meet edge-to-edge, which is what keeps
//! accumulated solid angles telescoping cleanly across the whole patch.
//!
//! All vertices live on an integer lattice of `grid * 2^(levels + 2)`
//! subdivisions per unit. Midpoints are computed in integer arithmetic, so a
//! vertex shared by any number of triangles is one vertex, bit for bit, and
//! the emitted pattern is identical across runs and thread schedules.

use std::cell::RefCell;
use std::collections::HashMap;

use crate::cage::PatchKind;

/// A triangulation of the parameter domain with counter-clockwise triangles.
#[derive(Debug, Clone, PartialEq)]
pub struct TessellationPattern {
    scale: u32,
    lattice: Vec<(u32, u32)>,
    /// Parameter-space vertex positions, `lattice / scale`.
    pub verts: Vec<(f64, f64)>,
    /// Indices into `verts`, counter-clockwise in the parameter plane.
    pub tris: Vec<[u32; 3]>,
}

impl TessellationPattern {
    /// Lattice subdivisions per parameter unit.
    pub fn scale(&self) -> u32 {
        self.scale
    }

    /// Integer lattice coordinates backing `verts`.
    pub fn lattice_verts(&self) -> &[(u32, u32)] {
        &self.lattice
    }

    /// Centroid of triangle `t` in parameter space.
    pub fn centroid(&self, t: usize) -> (f64, f64) {
        let [a, b, c] = self.tris[t];
        let (ua, va) = self.verts[a as usize];
        let (ub, vb) = self.verts[b as usize];
        let (uc, vc) = self.verts[c as usize];
        ((ua + ub + uc) / 3.0, (va + vb + vc) / 3.0)
    }

    /// Parameter-space area of triangle `t`.
    pub fn param_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.tris[t];
        let (ua, va) = self.verts[a as usize];
        let (ub, vb) = self.verts[b as usize];
        let (uc, vc) = self.verts[c as usize];
        0.5 * ((ub - ua) * (vc - va) - (uc - ua) * (vb - va))
    }

    /// Shortest edge length over all triangles, in parameter units.
    pub fn min_edge(&self) -> f64 {
        let mut best = f64::INFINITY;
        for t in &self.tris {
            for e in 0..3 {
                let (ua, va) = self.verts[t[e] as usize];
                let (ub, vb) = self.verts[t[(e + 1) % 3] as usize];
                best = best.min((ub - ua).hypot(vb - va));
            }
        }
        best
    }
}

trait VertexMap {
    fn get(&self, key: (u32, u32)) -> Option<u32>;
    fn set(&mut self, key: (u32, u32), idx: u32);
}

/// Dense lattice-indexed map with generation stamps: reused across calls on
/// the same thread, cleared in O(1) by bumping the generation.
struct DenseMap {
    dim: usize,
    gen: u32,
    cells: Vec<(u32, u32)>,
}

impl DenseMap {
    fn prepare(&mut self, dim: usize) {
        if self.dim != dim || self.gen == u32::MAX {
            self.dim = dim;
            self.gen = 1;
            self.cells.clear();
            self.cells.resize(dim * dim, (0, 0));
        } else {
            self.gen += 1;
        }
    }
}

impl VertexMap for DenseMap {
    fn get(&self, (iu, iv): (u32, u32)) -> Option<u32> {
        let (gen, idx) = self.cells[iu as usize * self.dim + iv as usize];
        (gen == self.gen).then_some(idx)
    }

    fn set(&mut self, (iu, iv): (u32, u32), idx: u32) {
        self.cells[iu as usize * self.dim + iv as usize] = (self.gen, idx);
    }
}

impl VertexMap for HashMap<(u32, u32), u32> {
    fn get(&self, key: (u32, u32)) -> Option<u32> {
        HashMap::get(self, &key).copied()
    }

    fn set(&mut self, key: (u32, u32), idx: u32) {
        self.insert(key, idx);
    }
}

thread_local! {
    static DENSE: RefCell<DenseMap> = RefCell::new(DenseMap {
        dim: 0,
        gen: 0,
        cells: Vec::new(),
    });
}

const DENSE_LIMIT: usize = 8_000_000;

/// Build the pattern for one patch domain, refined toward `(seed_u, seed_v)`.
pub fn build_uv_tessellation(
    kind: PatchKind,
    seed_u: f64,
    seed_v: f64,
    grid: usize,
    levels: usize,
) -> TessellationPattern {
    assert!(grid >= 1 && grid <= 4096, "grid resolution {grid} out of range");
    assert!(levels <= 12, "refinement depth {levels} out of range");
    let scale = (grid as u32) << (levels + 2);
    let dim = scale as usize + 1;
    if dim * dim <= DENSE_LIMIT {
        DENSE.with(|cell| {
            let mut map = cell.borrow_mut();
            map.prepare(dim);
            build_with(&mut *map, kind, seed_u, seed_v, grid, levels, scale)
        })
    } else {
        let mut map: HashMap<(u32, u32), u32> = HashMap::new();
        build_with(&mut map, kind, seed_u, seed_v, grid, levels, scale)
    }
}

fn build_with<M: VertexMap>(
    map: &mut M,
    kind: PatchKind,
    seed_u: f64,
    seed_v: f64,
    grid: usize,
    levels: usize,
    scale: u32,
) -> TessellationPattern {
    let mut lattice: Vec<(u32, u32)> = Vec::new();
    let mut tris: Vec<[u32; 3]> = Vec::new();

    let intern = |map: &mut M, lattice: &mut Vec<(u32, u32)>, key: (u32, u32)| -> u32 {
        if let Some(idx) = map.get(key) {
            return idx;
        }
        let idx = lattice.len() as u32;
        lattice.push(key);
        map.set(key, idx);
        idx
    };

    // Base grid.
    let cell = 1u32 << (levels + 2);
    let g = grid as u32;
    match kind {
        PatchKind::Tensor => {
            let at = |i: u32, j: u32| (i * cell, j * cell);
            let mut idx = vec![0u32; (grid + 1) * (grid + 1)];
            for i in 0..=g {
                for j in 0..=g {
                    idx[(i * (g + 1) + j) as usize] = intern(map, &mut lattice, at(i, j));
                }
            }
            let v = |i: u32, j: u32| idx[(i * (g + 1) + j) as usize];
            for i in 0..g {
                for j in 0..g {
                    tris.push([v(i, j), v(i + 1, j), v(i + 1, j + 1)]);
                    tris.push([v(i, j), v(i + 1, j + 1), v(i, j + 1)]);
                }
            }
        }
        PatchKind::Triangle => {
            let mut idx = vec![0u32; (grid + 1) * (grid + 1)];
            for i in 0..=g {
                for j in 0..=g - i {
                    idx[(i * (g + 1) + j) as usize] = intern(map, &mut lattice, (i * cell, j * cell));
                }
            }
            let v = |i: u32, j: u32| idx[(i * (g + 1) + j) as usize];
            for i in 0..g {
                for j in 0..g - i {
                    tris.push([v(i, j), v(i + 1, j), v(i, j + 1)]);
                    if i + j + 2 <= g {
                        tris.push([v(i + 1, j), v(i + 1, j + 1), v(i, j + 1)]);
                    }
                }
            }
        }
    }

    let inv_scale = 1.0 / scale as f64;
    let centroid_dist2 = |lattice: &[(u32, u32)], t: &[u32; 3]| -> f64 {
        let (au, av) = lattice[t[0] as usize];
        let (bu, bv) = lattice[t[1] as usize];
        let (cu, cv) = lattice[t[2] as usize];
        let cu_ = (au as f64 + bu as f64 + cu as f64) * inv_scale / 3.0;
        let cv_ = (av as f64 + bv as f64 + cv as f64) * inv_scale / 3.0;
        let du = cu_ - seed_u;
        let dv = cv_ - seed_v;
        du * du + dv * dv
    };

    let midpoint = |a: (u32, u32), b: (u32, u32)| -> Option<(u32, u32)> {
        let su = a.0 + b.0;
        let sv = a.1 + b.1;
        (su % 2 == 0 && sv % 2 == 0).then(|| (su / 2, sv / 2))
    };

    // Refinement rounds with halving capture radius.
    for r in 1..=levels {
        let t_r = std::f64::consts::SQRT_2 * (0.5f64).powi(r as i32);
        let t2 = t_r * t_r;
        let mut next = Vec::with_capacity(tris.len());
        for tri in &tris {
            if centroid_dist2(&lattice, tri) < t2 {
                let [a, b, c] = *tri;
                let (ka, kb, kc) = (
                    lattice[a as usize],
                    lattice[b as usize],
                    lattice[c as usize],
                );
                let mab = midpoint(ka, kb).expect("refinement keeps even parity");
                let mbc = midpoint(kb, kc).expect("refinement keeps even parity");
                let mca = midpoint(kc, ka).expect("refinement keeps even parity");
                let ab = intern(map, &mut lattice, mab);
                let bc = intern(map, &mut lattice, mbc);
                let ca = intern(map, &mut lattice, mca);
                next.push([a, ab, ca]);
                next.push([ab, b, bc]);
                next.push([ca, bc, c]);
                next.push([ab, bc, ca]);
            } else {
                next.push(*tri);
            }
        }
        tris = next;
    }

    // Conformity closure: a triangle adjoining finer neighbors sees their
    // shared vertices as existing midpoints of its own edges. Quarter it when
    // two or more edges are split, bisect toward a single split edge, repeat
    // until no triangle has a split edge left. Each pass only subdivides, so
    // the loop terminates; on exit, no vertex hangs on any edge.
    loop {
        let mut changed = false;
        let mut next = Vec::with_capacity(tris.len());
        for tri in &tris {
            let [a, b, c] = *tri;
            let keys = [
                lattice[a as usize],
                lattice[b as usize],
                lattice[c as usize],
            ];
            let mids = [
                midpoint(keys[0], keys[1]),
                midpoint(keys[1], keys[2]),
                midpoint(keys[2], keys[0]),
            ];
            let present = [
                mids[0].and_then(|k| map.get(k)),
                mids[1].and_then(|k| map.get(k)),
                mids[2].and_then(|k| map.get(k)),
            ];
            let n = present.iter().flatten().count();
            if n == 0 {
                next.push(*tri);
                continue;
            }
            changed = true;
            if n >= 2 && mids.iter().all(|m| m.is_some()) {
                let ab = intern(map, &mut lattice, mids[0].unwrap());
                let bc = intern(map, &mut lattice, mids[1].unwrap());
                let ca = intern(map, &mut lattice, mids[2].unwrap());
                next.push([a, ab, ca]);
                next.push([ab, b, bc]);
                next.push([ca, bc, c]);
                next.push([ab, bc, ca]);
            } else {
                // Bisect toward the first split edge; later passes pick up
                // anything deeper.
                let e = present.iter().position(|p| p.is_some()).unwrap();
                let x = present[e].unwrap();
                let verts = [a, b, c];
                next.push([verts[e], x, verts[(e + 2) % 3]]);
                next.push([x, verts[(e + 1) % 3], verts[(e + 2) % 3]]);
            }
        }
        tris = next;
        if !changed {
            break;
        }
    }

    let verts = lattice
        .iter()
        .map(|&(iu, iv)| (iu as f64 / scale as f64, iv as f64 / scale as f64))
        .collect();
    TessellationPattern {
        scale,
        lattice,
        verts,
        tris,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn edge_histogram(p: &TessellationPattern) -> HashMap<(u32, u32), usize> {
        let mut h = HashMap::new();
        for t in &p.tris {
            for e in 0..3 {
                let (a, b) = (t[e], t[(e + 1) % 3]);
                let key = (a.min(b), a.max(b));
                *h.entry(key).or_insert(0) += 1;
            }
        }
        h
    }

    fn on_domain_boundary(p: &TessellationPattern, kind: PatchKind, v: u32) -> bool {
        let (iu, iv) = p.lattice_verts()[v as usize];
        let s = p.scale();
        match kind {
            PatchKind::Tensor => iu == 0 || iv == 0 || iu == s || iv == s,
            PatchKind::Triangle => iu == 0 || iv == 0 || iu + iv == s,
        }
    }

    /// Every interior edge is shared by exactly two triangles, every boundary
    /// edge by one: the conformity invariant the closure pass must deliver.
    fn assert_conforming(p: &TessellationPattern, kind: PatchKind) {
        for (&(a, b), &count) in &edge_histogram(p) {
            let boundary = on_domain_boundary(p, kind, a)
                && on_domain_boundary(p, kind, b)
                && shares_a_side(p, kind, a, b);
            let expect = if boundary { 1 } else { 2 };
            assert_eq!(
                count, expect,
                "edge {:?}-{:?} appears {count} times",
                p.lattice_verts()[a as usize],
                p.lattice_verts()[b as usize]
            );
        }
    }

    fn shares_a_side(p: &TessellationPattern, kind: PatchKind, a: u32, b: u32) -> bool {
        let (au, av) = p.lattice_verts()[a as usize];
        let (bu, bv) = p.lattice_verts()[b as usize];
        let s = p.scale();
        match kind {
            PatchKind::Tensor => {
                (au == 0 && bu == 0)
                    || (av == 0 && bv == 0)
                    || (au == s && bu == s)
                    || (av == s && bv == s)
            }
            PatchKind::Triangle => {
                (au == 0 && bu == 0)
                    || (av == 0 && bv == 0)
                    || (au + av == s && bu + bv == s)
            }
        }
    }

    #[test]
    fn unrefined_patterns_match_the_plain_grid() {
        let p = build_uv_tessellation(PatchKind::Tensor, 0.5, 0.5, 4, 0);
        assert_eq!(p.verts.len(), 25);
        assert_eq!(p.tris.len(), 32);
        let t = build_uv_tessellation(PatchKind::Triangle, 0.3, 0.3, 4, 0);
        assert_eq!(t.verts.len(), 15);
        assert_eq!(t.tris.len(), 16);
    }

    #[test]
    fn refinement_stays_conforming_for_many_seeds() {
        let seeds = [
            (0.5, 0.5),
            (0.0, 0.0),
            (1.0, 1.0),
            (0.31, 0.77),
            (0.0, 0.62),
            (0.991, 0.013),
        ];
        for &(su, sv) in &seeds {
            let p = build_uv_tessellation(PatchKind::Tensor, su, sv, 8, 4);
            assert_conforming(&p, PatchKind::Tensor);
            assert!(p.tris.len() > 128, "seed ({su}, {sv}) never refined");
        }
        for &(su, sv) in &[(0.2, 0.2), (0.0, 0.0), (0.5, 0.5), (0.9, 0.05)] {
            let p = build_uv_tessellation(PatchKind::Triangle, su, sv, 8, 4);
            assert_conforming(&p, PatchKind::Triangle);
        }
    }

    #[test]
    fn triangles_stay_counter_clockwise_and_cover_the_domain() {
        for (kind, want) in [(PatchKind::Tensor, 1.0), (PatchKind::Triangle, 0.5)] {
            let p = build_uv_tessellation(kind, 0.37, 0.58, 8, 4);
            let mut total = 0.0;
            for t in 0..p.tris.len() {
                let area = p.param_area(t);
                assert!(area > 0.0, "triangle {t} flipped or degenerate");
                total += area;
            }
            assert!((total - want).abs() < 1e-12, "covered {total}, want {want}");
        }
    }

    #[test]
    fn refinement_shrinks_triangles_near_the_seed() {
        let p = build_uv_tessellation(PatchKind::Tensor, 0.5, 0.5, 4, 4);
        // Four halvings under a quarter-unit base cell.
        assert!(p.min_edge() <= (1.0 / 4.0) / 8.0);
        // Cells far from a corner seed stay coarse.
        let q = build_uv_tessellation(PatchKind::Tensor, 0.0, 0.0, 4, 4);
        let mut far_max: f64 = 0.0;
        for t in 0..q.tris.len() {
            let (cu, cv) = q.centroid(t);
            if cu.hypot(cv) > 0.9 {
                far_max = far_max.max(q.param_area(t));
            }
        }
        assert!(far_max >= 0.9 * (0.25 * 0.25) / 2.0, "far cells got {far_max}");
    }

    #[test]
    fn vertices_are_unique_on_the_lattice() {
        let p = build_uv_tessellation(PatchKind::Tensor, 0.31, 0.64, 8, 4);
        let mut seen = std::collections::HashSet::new();
        for &key in p.lattice_verts() {
            assert!(seen.insert(key), "duplicate lattice vertex {key:?}");
        }
    }

    #[test]
    fn base_grid_parameters_match_direct_division() {
        let g = 8usize;
        let p = build_uv_tessellation(PatchKind::Tensor, 0.77, 0.13, g, 4);
        let s = p.scale();
        for (k, &(iu, iv)) in p.lattice_verts().iter().enumerate() {
            if iu % (s / g as u32) == 0 && iv % (s / g as u32) == 0 {
                let i = iu / (s / g as u32);
                let j = iv / (s / g as u32);
                let (u, v) = p.verts[k];
                assert_eq!(u.to_bits(), (i as f64 / g as f64).to_bits());
                assert_eq!(v.to_bits(), (j as f64 / g as f64).to_bits());
            }
        }
    }

    #[test]
    fn patterns_are_bit_reproducible() {
        let a = build_uv_tessellation(PatchKind::Tensor, 0.123456, 0.654321, 8, 4);
        let b = build_uv_tessellation(PatchKind::Tensor, 0.123456, 0.654321, 8, 4);
        assert_eq!(a, b);
        let c = build_uv_tessellation(PatchKind::Triangle, 0.2, 0.3, 8, 4);
        let d = build_uv_tessellation(PatchKind::Triangle, 0.2, 0.3, 8, 4);
        assert_eq!(c, d);
    }

    #[test]
    fn simplex_vertices_respect_the_domain() {
        let p = build_uv_tessellation(PatchKind::Triangle, 0.4, 0.55, 8, 4);
        for &(iu, iv) in p.lattice_verts() {
            assert!(iu + iv <= p.scale());
        }
        for &(u, v) in &p.verts {
            assert!(u + v <= 1.0 + 1e-12);
        }
    }
}
