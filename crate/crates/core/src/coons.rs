//! Interior control points for a tensor patch from its four boundary
//! polylines, by bilinear blending of the piecewise-linear boundary curves.

use nalgebra::Point3;

use crate::cage::TensorPatch;
use crate::error::{Error, Result};

/// Four boundary control polylines of a tensor patch, validated so that
/// adjacent sides share their corner points bitwise.
///
/// `bottom`/`top` run along `u` at `v = 0` / `v = 1`; `left`/`right` run
/// along `v` at `u = 0` / `u = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryLoop {
    bottom: Vec<Point3<f64>>,
    top: Vec<Point3<f64>>,
    left: Vec<Point3<f64>>,
    right: Vec<Point3<f64>>,
}

impl BoundaryLoop {
    pub fn new(
        bottom: Vec<Point3<f64>>,
        top: Vec<Point3<f64>>,
        left: Vec<Point3<f64>>,
        right: Vec<Point3<f64>>,
    ) -> Result<Self> {
        if bottom.len() < 2 || top.len() < 2 || left.len() < 2 || right.len() < 2 {
            return Err(Error::InvalidLoop(
                "every side needs at least two control points".into(),
            ));
        }
        if bottom.len() != top.len() || left.len() != right.len() {
            return Err(Error::InvalidLoop(format!(
                "opposite sides disagree: bottom {} vs top {}, left {} vs right {}",
                bottom.len(),
                top.len(),
                left.len(),
                right.len()
            )));
        }
        let corners = [
            (bottom[0], left[0], "bottom/left"),
            (*bottom.last().unwrap(), right[0], "bottom/right"),
            (top[0], *left.last().unwrap(), "top/left"),
            (*top.last().unwrap(), *right.last().unwrap(), "top/right"),
        ];
        for (a, b, which) in corners {
            if a != b {
                return Err(Error::InvalidLoop(format!(
                    "{which} corner mismatch: {a:?} vs {b:?}"
                )));
            }
        }
        Ok(BoundaryLoop { bottom, top, left, right })
    }

    /// The boundary polylines of an existing patch, in loop form.
    pub fn from_patch(patch: &TensorPatch) -> Self {
        let (m, n) = patch.degrees();
        BoundaryLoop {
            bottom: (0..=m).map(|i| patch.point(i, 0)).collect(),
            top: (0..=m).map(|i| patch.point(i, n)).collect(),
            left: (0..=n).map(|j| patch.point(0, j)).collect(),
            right: (0..=n).map(|j| patch.point(m, j)).collect(),
        }
    }

    pub fn degrees(&self) -> (usize, usize) {
        (self.bottom.len() - 1, self.left.len() - 1)
    }

    /// The four polylines in `(bottom, top, left, right)` order.
    pub fn sides(
        &self,
    ) -> (&[Point3<f64>], &[Point3<f64>], &[Point3<f64>], &[Point3<f64>]) {
        (&self.bottom, &self.top, &self.left, &self.right)
    }
}

fn piecewise_linear(points: &[Point3<f64>], t: f64) -> Point3<f64> {
    let m = points.len() - 1;
    let s = t * m as f64;
    if s <= 0.0 {
        return points[0];
    }
    if s >= m as f64 {
        return points[m];
    }
    let i = s.floor() as usize;
    let f = s - i as f64;
    points[i] + f * (points[i + 1] - points[i])
}

fn blend(
    loop_: &BoundaryLoop,
    u: f64,
    v: f64,
    bottom: Point3<f64>,
    top: Point3<f64>,
    left: Point3<f64>,
    right: Point3<f64>,
) -> Point3<f64> {
    let m = loop_.bottom.len() - 1;
    let c00 = loop_.bottom[0].coords;
    let c10 = loop_.bottom[m].coords;
    let c01 = loop_.top[0].coords;
    let c11 = loop_.top[m].coords;
    let sides = (1.0 - u) * left.coords + u * right.coords + (1.0 - v) * bottom.coords
        + v * top.coords;
    let corners = (1.0 - u) * (1.0 - v) * c00 + u * (1.0 - v) * c10 + (1.0 - u) * v * c01
        + u * v * c11;
    Point3::from(sides - corners)
}

/// Bilinearly blended interpolant of the loop's boundary curves at `(u, v)`.
pub fn coons_point(loop_: &BoundaryLoop, u: f64, v: f64) -> Point3<f64> {
    let u = u.clamp(0.0, 1.0);
    let v = v.clamp(0.0, 1.0);
    blend(
        loop_,
        u,
        v,
        piecewise_linear(&loop_.bottom, u),
        piecewise_linear(&loop_.top, u),
        piecewise_linear(&loop_.left, v),
        piecewise_linear(&loop_.right, v),
    )
}

/// A degree-`(m, n)` patch whose boundary rows and columns are the loop's
/// polylines copied verbatim, and whose interior points sit at the blend of
/// the boundary data at the uniform parameters `(i/m, j/n)`. Interior
/// evaluation looks the boundary nodes up by index, so the result does not
/// depend on whether `i/m` rounds across a polyline segment boundary.
pub fn fill_interior(loop_: &BoundaryLoop, m: usize, n: usize) -> Result<TensorPatch> {
    let (lm, ln) = loop_.degrees();
    if (lm, ln) != (m, n) {
        return Err(Error::InvalidLoop(format!(
            "loop implies degrees ({lm}, {ln}), requested ({m}, {n})"
        )));
    }
    let mut points = vec![Point3::origin(); (m + 1) * (n + 1)];
    let at = |i: usize, j: usize| i * (n + 1) + j;
    for i in 0..=m {
        points[at(i, 0)] = loop_.bottom[i];
        points[at(i, n)] = loop_.top[i];
    }
    for j in 0..=n {
        points[at(0, j)] = loop_.left[j];
        points[at(m, j)] = loop_.right[j];
    }
    for i in 1..m {
        let u = i as f64 / m as f64;
        for j in 1..n {
            let v = j as f64 / n as f64;
            points[at(i, j)] = blend(
                loop_,
                u,
                v,
                loop_.bottom[i],
                loop_.top[i],
                loop_.left[j],
                loop_.right[j],
            );
        }
    }
    TensorPatch::new(m, n, points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn square_loop(n: usize) -> BoundaryLoop {
        let seg = |a: Point3<f64>, b: Point3<f64>| -> Vec<Point3<f64>> {
            (0..=n)
                .map(|i| {
                    let t = i as f64 / n as f64;
                    Point3::from((1.0 - t) * a.coords + t * b.coords)
                })
                .collect()
        };
        let p00 = Point3::new(0.0, 0.0, 0.0);
        let p10 = Point3::new(1.0, 0.0, 0.0);
        let p01 = Point3::new(0.0, 1.0, 0.0);
        let p11 = Point3::new(1.0, 1.0, 0.0);
        BoundaryLoop::new(seg(p00, p10), seg(p01, p11), seg(p00, p01), seg(p10, p11)).unwrap()
    }

    fn random_loop(rng: &mut StdRng, m: usize, n: usize) -> BoundaryLoop {
        let mut pt = |x: f64, y: f64| {
            Point3::new(
                x + rng.gen_range(-0.2..0.2),
                y + rng.gen_range(-0.2..0.2),
                rng.gen_range(-0.5..0.5),
            )
        };
        let p00 = pt(0.0, 0.0);
        let p10 = pt(1.0, 0.0);
        let p01 = pt(0.0, 1.0);
        let p11 = pt(1.0, 1.0);
        let mut side = |a: Point3<f64>, b: Point3<f64>, count: usize| -> Vec<Point3<f64>> {
            let mut v = vec![a];
            for i in 1..count {
                let t = i as f64 / count as f64;
                let base = (1.0 - t) * a.coords + t * b.coords;
                v.push(Point3::from(base) + nalgebra::Vector3::new(
                    rng.gen_range(-0.1..0.1),
                    rng.gen_range(-0.1..0.1),
                    rng.gen_range(-0.1..0.1),
                ));
            }
            v.push(b);
            v
        };
        BoundaryLoop::new(
            side(p00, p10, m),
            side(p01, p11, m),
            side(p00, p01, n),
            side(p10, p11, n),
        )
        .unwrap()
    }

    #[test]
    fn boundaries_are_interpolated() {
        let mut rng = StdRng::seed_from_u64(77);
        let loop_ = random_loop(&mut rng, 4, 3);
        for i in 0..=20 {
            let t = i as f64 / 20.0;
            let on_left = coons_point(&loop_, 0.0, t);
            let want = piecewise_linear(&loop_.left, t);
            assert!((on_left - want).norm() < 1e-14);
            let on_bottom = coons_point(&loop_, t, 0.0);
            let want = piecewise_linear(&loop_.bottom, t);
            assert!((on_bottom - want).norm() < 1e-14);
        }
    }

    #[test]
    fn straight_boundaries_give_bilinear_points() {
        let loop_ = square_loop(3);
        let mut rng = StdRng::seed_from_u64(8);
        for _ in 0..50 {
            let (u, v) = (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
            let got = coons_point(&loop_, u, v);
            assert!((got - Point3::new(u, v, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn planar_loops_stay_planar() {
        let loop_ = square_loop(5);
        let mut rng = StdRng::seed_from_u64(8);
        for _ in 0..50 {
            let got = coons_point(&loop_, rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
            assert_eq!(got.z, 0.0);
        }
    }

    #[test]
    fn filling_a_square_puts_interior_points_on_the_grid() {
        let patch = fill_interior(&square_loop(3), 3, 3).unwrap();
        for i in 0..=3 {
            for j in 0..=3 {
                let want = Point3::new(i as f64 / 3.0, j as f64 / 3.0, 0.0);
                assert!((patch.point(i, j) - want).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn boundary_rows_are_copied_verbatim() {
        let mut rng = StdRng::seed_from_u64(301);
        let loop_ = random_loop(&mut rng, 5, 4);
        let patch = fill_interior(&loop_, 5, 4).unwrap();
        let back = BoundaryLoop::from_patch(&patch);
        assert_eq!(back, loop_);
    }

    #[test]
    fn degree_one_fill_is_just_the_corners() {
        let p00 = Point3::new(0.0, 0.0, 1.0);
        let p10 = Point3::new(2.0, 0.0, 0.5);
        let p01 = Point3::new(0.0, 2.0, 0.0);
        let p11 = Point3::new(2.0, 2.0, 1.5);
        let loop_ = BoundaryLoop::new(
            vec![p00, p10],
            vec![p01, p11],
            vec![p00, p01],
            vec![p10, p11],
        )
        .unwrap();
        let patch = fill_interior(&loop_, 1, 1).unwrap();
        assert_eq!(patch.points(), &[p00, p01, p10, p11]);
    }

    #[test]
    fn filling_commutes_with_affine_maps() {
        let mut rng = StdRng::seed_from_u64(55);
        let loop_ = random_loop(&mut rng, 4, 4);
        let map = |p: &Point3<f64>| {
            Point3::new(
                2.0 * p.x - 0.5 * p.y + 1.0,
                p.y + 0.25 * p.z - 2.0,
                0.5 * p.x + 3.0 * p.z,
            )
        };
        let mapped = BoundaryLoop::new(
            loop_.bottom.iter().map(map).collect(),
            loop_.top.iter().map(map).collect(),
            loop_.left.iter().map(map).collect(),
            loop_.right.iter().map(map).collect(),
        )
        .unwrap();
        let direct = fill_interior(&mapped, 4, 4).unwrap();
        let pushed = fill_interior(&loop_, 4, 4).unwrap();
        for (a, b) in direct.points().iter().zip(pushed.points()) {
            assert!((a - map(b)).norm() < 1e-12);
        }
    }

    #[test]
    fn bad_loops_are_rejected() {
        let p = |x: f64, y: f64| Point3::new(x, y, 0.0);
        // Corner mismatch between bottom and left.
        let err = BoundaryLoop::new(
            vec![p(0.0, 0.0), p(1.0, 0.0)],
            vec![p(0.0, 1.0), p(1.0, 1.0)],
            vec![p(0.1, 0.0), p(0.0, 1.0)],
            vec![p(1.0, 0.0), p(1.0, 1.0)],
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidLoop(_)), "{err}");
        // Opposite-side count mismatch.
        let err = BoundaryLoop::new(
            vec![p(0.0, 0.0), p(0.5, 0.0), p(1.0, 0.0)],
            vec![p(0.0, 1.0), p(1.0, 1.0)],
            vec![p(0.0, 0.0), p(0.0, 1.0)],
            vec![p(1.0, 0.0), p(1.0, 1.0)],
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidLoop(_)), "{err}");
        // Degree requested differs from what the loop provides.
        let loop_ = square_loop(3);
        assert!(fill_interior(&loop_, 2, 3).is_err());
    }
}
