//! Scalar kernels evaluated per mesh vertex: signed solid angles, the
//! single-layer potential of a flat triangle, and nearest-point parameter
//! estimation on a patch.

use nalgebra::{Point3, Vector3};

use crate::cage::{Patch, PatchKind};

/// Signed solid angle subtended at `eta` by triangle `(a, b, c)`.
///
/// Positive when the triangle winds counter-clockwise as seen from the far
/// side of its plane relative to `eta`: a closed outward-oriented surface
/// accumulates `4π` at interior points and `0` outside.
pub fn signed_solid_angle(
    a: &Point3<f64>,
    b: &Point3<f64>,
    c: &Point3<f64>,
    eta: &Point3<f64>,
) -> f64 {
    let av = a - eta;
    let bv = b - eta;
    let cv = c - eta;
    let la = av.norm();
    let lb = bv.norm();
    let lc = cv.norm();
    let num = av.dot(&bv.cross(&cv));
    let den = la * lb * lc + av.dot(&bv) * lc + bv.dot(&cv) * la + cv.dot(&av) * lb;
    2.0 * num.atan2(den)
}

/// Integral of `1 / (4π |ξ - η|)` over the flat triangle `(a, b, c)`,
/// evaluated in closed form edge by edge.
///
/// Finite for every `eta`, including points on the triangle itself; the
/// result does not depend on the triangle's orientation.
pub fn green_integral_triangle(
    a: &Point3<f64>,
    b: &Point3<f64>,
    c: &Point3<f64>,
    eta: &Point3<f64>,
) -> f64 {
    let n = (b - a).cross(&(c - a));
    let nn = n.norm();
    if nn == 0.0 {
        return 0.0;
    }
    let nh = n / nn;
    // Signed height of eta's plane offset and its in-plane projection q.
    let h = (a - eta).dot(&nh);
    let q = eta + h * nh;

    let verts = [a, b, c];
    let mut sum = 0.0;
    for e in 0..3 {
        let pa = verts[e];
        let pb = verts[(e + 1) % 3];
        let t = pb - pa;
        let tl = t.norm();
        if tl == 0.0 {
            continue;
        }
        let th = t / tl;
        // In-plane edge normal pointing out of the triangle (for either
        // orientation the signs below cancel in pairs).
        let uh = th.cross(&nh);
        let p0 = (pa - q).dot(&uh);
        let la = (pa - q).dot(&th);
        let lb = (pb - q).dot(&th);
        let ra = (pa - eta).norm();
        let rb = (pb - eta).norm();
        let r0sq = p0 * p0 + h * h;

        // Pick the algebraically equivalent log form free of cancellation
        // for the sign pattern of the arc coordinates.
        let lterm = if la >= 0.0 {
            ((rb + lb) / (ra + la)).ln()
        } else if lb <= 0.0 {
            ((ra - la) / (rb - lb)).ln()
        } else {
            ((rb + lb) * (ra - la) / r0sq).ln()
        };
        // p0 == 0 makes both factors of the edge term vanish in the limit;
        // skipping them dodges 0 * inf when eta sits on the edge line.
        if p0 != 0.0 {
            sum += p0 * lterm;
        }
        if h != 0.0 {
            let habs = h.abs();
            sum -= habs
                * ((p0 * lb).atan2(r0sq + habs * rb) - (p0 * la).atan2(r0sq + habs * ra));
        }
    }
    sum / (4.0 * std::f64::consts::PI)
}

/// Result of projecting a point onto a patch: the estimated nearest
/// parameter and the distance achieved there.
#[derive(Debug, Clone, Copy)]
pub struct ProjectedSeed {
    pub u: f64,
    pub v: f64,
    pub distance: f64,
}

fn project_domain(kind: PatchKind, u: f64, v: f64) -> (f64, f64) {
    let u = u.clamp(0.0, 1.0);
    let v = v.clamp(0.0, 1.0);
    match kind {
        PatchKind::Tensor => (u, v),
        PatchKind::Triangle => {
            if u + v <= 1.0 {
                (u, v)
            } else {
                let up = ((u - v + 1.0) / 2.0).clamp(0.0, 1.0);
                (up, 1.0 - up)
            }
        }
    }
}

/// Estimate the patch parameter closest to `eta`.
///
/// Scans midpoints of a coarse grid, then runs projected gradient descent
/// with backtracking from the best few cells. The result seeds refinement
/// around the point, so a nearby local minimum is as good as the global one.
pub fn invert_point(patch: &Patch, eta: &Point3<f64>) -> ProjectedSeed {
    const SCAN: usize = 8;
    let kind = patch.kind();
    let dist2 = |u: f64, v: f64| (patch.point_raw(u, v) - eta).norm_squared();

    let mut cells: Vec<(f64, f64, f64)> = Vec::with_capacity(SCAN * SCAN);
    for i in 0..SCAN {
        for j in 0..SCAN {
            let u = (i as f64 + 0.5) / SCAN as f64;
            let v = (j as f64 + 0.5) / SCAN as f64;
            if kind == PatchKind::Triangle && u + v > 1.0 {
                continue;
            }
            cells.push((dist2(u, v), u, v));
        }
    }
    cells.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut best = cells[0];
    for &(f_start, u0, v0) in cells.iter().take(4) {
        let (mut u, mut v) = (u0, v0);
        let mut f = f_start;
        let mut step = 0.25;
        for _ in 0..100 {
            let d = patch.point_raw(u, v) - eta;
            let (du, dv) = patch.partials_raw(u, v);
            let g = Vector3::new(d.dot(&du), d.dot(&dv), 0.0);
            let g2 = g.x * g.x + g.y * g.y;
            if g2 == 0.0 {
                break;
            }
            step *= 2.0;
            let mut moved = false;
            for _ in 0..40 {
                let (nu, nv) = project_domain(kind, u - step * g.x, v - step * g.y);
                let fn_ = dist2(nu, nv);
                if fn_ <= f - 1e-4 * step * g2 {
                    let dx = (nu - u).hypot(nv - v);
                    u = nu;
                    v = nv;
                    f = fn_;
                    moved = dx > 1e-10;
                    break;
                }
                step *= 0.5;
            }
            if !moved {
                break;
            }
        }
        if f < best.0 {
            best = (f, u, v);
        }
    }
    ProjectedSeed {
        u: best.1,
        v: best.2,
        distance: best.0.sqrt(),
    }
}
