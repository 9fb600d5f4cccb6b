//! Ready-made cages used by tests, benchmarks, and the bundled data files.
//!
//! All presets keep their boundary control polylines on straight segments:
//! only strictly interior control points are ever displaced. Shared
//! boundaries are built from identical arithmetic on both sides, so every
//! preset validates as watertight.

use nalgebra::{Point3, Vector3};

use crate::cage::{elevate_quad_cage, Cage, Patch, TensorPatch, TrianglePatch};

/// Corner loops for the six faces of the axis-aligned cube `[lo, hi]^3`,
/// each counter-clockwise seen from outside.
pub fn cube_quads(lo: f64, hi: f64) -> Vec<[Point3<f64>; 4]> {
    let p = |x: f64, y: f64, z: f64| Point3::new(x, y, z);
    vec![
        // z = lo, outward -z
        [p(lo, lo, lo), p(lo, hi, lo), p(hi, hi, lo), p(hi, lo, lo)],
        // z = hi, outward +z
        [p(lo, lo, hi), p(hi, lo, hi), p(hi, hi, hi), p(lo, hi, hi)],
        // x = lo, outward -x
        [p(lo, lo, lo), p(lo, lo, hi), p(lo, hi, hi), p(lo, hi, lo)],
        // x = hi, outward +x
        [p(hi, lo, lo), p(hi, hi, lo), p(hi, hi, hi), p(hi, lo, hi)],
        // y = lo, outward -y
        [p(lo, lo, lo), p(hi, lo, lo), p(hi, lo, hi), p(lo, lo, hi)],
        // y = hi, outward +y
        [p(lo, hi, lo), p(lo, hi, hi), p(hi, hi, hi), p(hi, hi, lo)],
    ]
}

/// The unit cube `[0, 1]^3` as six bilinear patches.
pub fn unit_cube() -> Cage {
    elevate_quad_cage(&cube_quads(0.0, 1.0), 1).expect("cube quads are non-degenerate")
}

/// The cube `[-1, 1]^3` elevated to six degree-`(d, d)` patches.
pub fn elevated_cube(d: usize) -> Cage {
    elevate_quad_cage(&cube_quads(-1.0, 1.0), d).expect("cube quads are non-degenerate")
}

/// [`elevated_cube`] with every strictly interior control point pushed
/// outward along its face normal by `amp`. Requires `d >= 2` so interior
/// points exist; face boundaries stay straight.
pub fn bulged_cube(d: usize, amp: f64) -> Cage {
    assert!(d >= 2, "bulging needs interior control points (d >= 2)");
    let quads = cube_quads(-1.0, 1.0);
    let base = elevated_cube(d);
    let patches = base
        .patches()
        .iter()
        .zip(&quads)
        .map(|(patch, quad)| {
            let Patch::Tensor(p) = patch else { unreachable!() };
            let normal = (quad[1] - quad[0]).cross(&(quad[3] - quad[0])).normalize();
            let mut pts = p.points().to_vec();
            for i in 1..d {
                for j in 1..d {
                    pts[p.index(i, j)] += amp * normal;
                }
            }
            Patch::Tensor(TensorPatch::new(d, d, pts).expect("displaced net stays valid"))
        })
        .collect();
    Cage::new(patches)
}

/// Control point with barycentric weights `(i, j, k)` on the corner triple
/// `(pu, pv, pw)`. Zero-weight terms are skipped so shared edges accumulate
/// the same operations on every face that builds them.
fn bary_ctrl(
    pu: Point3<f64>,
    pv: Point3<f64>,
    pw: Point3<f64>,
    i: usize,
    j: usize,
    k: usize,
    n: usize,
) -> Point3<f64> {
    let mut acc = Vector3::zeros();
    if i > 0 {
        acc += i as f64 * pu.coords;
    }
    if j > 0 {
        acc += j as f64 * pv.coords;
    }
    if k > 0 {
        acc += k as f64 * pw.coords;
    }
    Point3::from(acc / n as f64)
}

/// Point `i/n` of the way along segment `a -> b`, same zero-skip convention
/// as [`bary_ctrl`].
fn edge_ctrl(a: Point3<f64>, b: Point3<f64>, i: usize, n: usize) -> Point3<f64> {
    let mut acc = Vector3::zeros();
    if i < n {
        acc += (n - i) as f64 * a.coords;
    }
    if i > 0 {
        acc += i as f64 * b.coords;
    }
    Point3::from(acc / n as f64)
}

/// Degree-3 triangular face on corners `(pw, pu, pv)` (the counter-clockwise
/// outward loop), with the single interior control point pushed `amp` along
/// the face normal.
fn curved_tri_face(pw: Point3<f64>, pu: Point3<f64>, pv: Point3<f64>, amp: f64) -> Patch {
    let n = 3;
    let mut pts = Vec::with_capacity(10);
    for i in 0..=n {
        for j in 0..=n - i {
            pts.push(bary_ctrl(pu, pv, pw, i, j, n - i - j, n));
        }
    }
    if amp != 0.0 {
        let normal = (pu - pw).cross(&(pv - pw)).normalize();
        // Flat index of barycentric (1, 1, 1).
        pts[5] += amp * normal;
    }
    Patch::Triangle(TrianglePatch::new(n, pts).expect("face corners are affinely independent"))
}

/// Regular tetrahedron on alternating cube corners, each face a degree-3
/// triangular patch bulged outward by `amp` at its interior control point.
pub fn curved_tetrahedron(amp: f64) -> Cage {
    let a = Point3::new(1.0, 1.0, 1.0);
    let b = Point3::new(1.0, -1.0, -1.0);
    let c = Point3::new(-1.0, 1.0, -1.0);
    let d = Point3::new(-1.0, -1.0, 1.0);
    Cage::new(vec![
        curved_tri_face(a, b, c, amp),
        curved_tri_face(a, c, d, amp),
        curved_tri_face(a, d, b, amp),
        curved_tri_face(b, d, c, amp),
    ])
}

/// Triangular prism mixing both patch flavors: degree-3 triangular caps
/// (bulged outward by `amp` at their interior point) and flat degree-`(3, 1)`
/// tensor sides.
pub fn mixed_prism(amp: f64) -> Cage {
    let v = [
        Point3::new(1.0, 0.0, 0.0),
        Point3::new(-1.0, 1.0, 0.0),
        Point3::new(-1.0, -1.0, 0.0),
    ];
    let bot: Vec<Point3<f64>> = v.iter().map(|p| Point3::new(p.x, p.y, -1.0)).collect();
    let top: Vec<Point3<f64>> = v.iter().map(|p| Point3::new(p.x, p.y, 1.0)).collect();

    // Side over cross-section edge a -> b: degree 3 along the edge, linear
    // bottom-to-top; normal points out of the prism.
    let side = |ea: usize, eb: usize| {
        let n = 3;
        let mut pts = Vec::with_capacity((n + 1) * 2);
        for i in 0..=n {
            pts.push(edge_ctrl(bot[ea], bot[eb], i, n));
            pts.push(edge_ctrl(top[ea], top[eb], i, n));
        }
        Patch::Tensor(TensorPatch::new(n, 1, pts).expect("prism side is non-degenerate"))
    };

    Cage::new(vec![
        curved_tri_face(bot[0], bot[2], bot[1], amp),
        curved_tri_face(top[0], top[1], top[2], amp),
        side(0, 1),
        side(1, 2),
        side(2, 0),
    ])
}
