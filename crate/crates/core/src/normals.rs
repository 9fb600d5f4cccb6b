//! Outward normal vectors attached to control nets.
//!
//! Each control point gets a normal averaged from the wedge products of its
//! grid neighborhood, scaled so that blending the normals with the patch's
//! own basis functions yields a surface normal field with meaningful length:
//! for a bilinear patch the blended field equals `d/du x d/dv` exactly, and
//! it stays first-order close for higher degrees.

use nalgebra::Vector3;

use crate::cage::Patch;
use crate::error::Result;

/// Per-control-point normals for one patch, in storage order.
#[derive(Debug, Clone)]
pub struct ControlNetNormals {
    normals: Vec<Vector3<f64>>,
    zeros: Vec<usize>,
}

impl ControlNetNormals {
    pub fn normals(&self) -> &[Vector3<f64>] {
        &self.normals
    }

    pub fn normal(&self, idx: usize) -> Vector3<f64> {
        self.normals[idx]
    }

    /// Indices of control points whose averaged normal vanished (flat or
    /// collapsed neighborhoods). Elements dominated by these are skipped
    /// during coordinate accumulation.
    pub fn zero_indices(&self) -> &[usize] {
        &self.zeros
    }
}

/// Compute wedge-averaged normals for every control point of `patch`.
pub fn control_net_normals(patch: &Patch) -> ControlNetNormals {
    let mut normals = Vec::with_capacity(patch.control_count());
    match patch {
        Patch::Tensor(p) => {
            let (m, n) = p.degrees();
            let get = |i: isize, j: isize| -> Option<Vector3<f64>> {
                if i < 0 || j < 0 || i > m as isize || j > n as isize {
                    None
                } else {
                    Some(p.point(i as usize, j as usize).coords)
                }
            };
            for i in 0..=m as isize {
                for j in 0..=n as isize {
                    let base = p.point(i as usize, j as usize).coords;
                    // Cyclic neighbor edges: +v, -u, -v, +u.
                    let edges = [
                        get(i, j + 1).map(|q| q - base),
                        get(i - 1, j).map(|q| q - base),
                        get(i, j - 1).map(|q| q - base),
                        get(i + 1, j).map(|q| q - base),
                    ];
                    normals.push(wedge_average(&edges, (m * n) as f64));
                }
            }
        }
        Patch::Triangle(p) => {
            let n = p.degree();
            let get = |i: isize, j: isize| -> Option<Vector3<f64>> {
                if i < 0 || j < 0 || i + j > n as isize {
                    None
                } else {
                    Some(p.point(i as usize, j as usize).coords)
                }
            };
            // Cyclic neighbor steps on the barycentric grid.
            const DIRS: [(isize, isize); 6] = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)];
            for i in 0..=n as isize {
                for j in 0..=(n as isize - i) {
                    let base = p.point(i as usize, j as usize).coords;
                    let edges = DIRS
                        .map(|(di, dj)| get(i + di, j + dj).map(|q| q - base));
                    normals.push(wedge_average(&edges, (n * n) as f64));
                }
            }
        }
    }
    let zeros = normals
        .iter()
        .enumerate()
        .filter(|(_, v)| v.norm_squared() == 0.0)
        .map(|(i, _)| i)
        .collect();
    ControlNetNormals { normals, zeros }
}

fn wedge_average(edges: &[Option<Vector3<f64>>], degree_scale: f64) -> Vector3<f64> {
    let k = edges.len();
    let mut acc = Vector3::zeros();
    let mut wedges = 0usize;
    for a in 0..k {
        if let (Some(e1), Some(e2)) = (edges[a], edges[(a + 1) % k]) {
            acc += e1.cross(&e2);
            wedges += 1;
        }
    }
    if wedges == 0 {
        return Vector3::zeros();
    }
    (degree_scale / wedges as f64) * acc
}

/// Blend precomputed basis weights with control-net normals.
pub fn normal_from_weights(weights: &[f64], nets: &ControlNetNormals) -> Vector3<f64> {
    debug_assert_eq!(weights.len(), nets.normals.len());
    let mut acc = Vector3::zeros();
    for (w, nv) in weights.iter().zip(&nets.normals) {
        acc += *w * *nv;
    }
    acc
}

/// The interpolated normal field of `patch` at `(u, v)`.
pub fn surface_normal(
    patch: &Patch,
    nets: &ControlNetNormals,
    u: f64,
    v: f64,
) -> Result<Vector3<f64>> {
    let weights = patch.basis_weights(u, v)?;
    Ok(normal_from_weights(&weights, nets))
}

/// Convenience: normals for every patch of a slice, in order.
pub fn cage_control_net_normals(patches: &[Patch]) -> Vec<ControlNetNormals> {
    patches.iter().map(control_net_normals).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cage::TensorPatch;
    use crate::presets;
    use nalgebra::Point3;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn planar_tensor_grid_gets_unit_normals() {
        for (m, n) in [(1, 1), (3, 3), (5, 2)] {
            let mut pts = Vec::new();
            for i in 0..=m {
                for j in 0..=n {
                    pts.push(Point3::new(i as f64 / m as f64, j as f64 / n as f64, 0.0));
                }
            }
            let patch = Patch::Tensor(TensorPatch::new(m, n, pts).unwrap());
            let nets = control_net_normals(&patch);
            assert!(nets.zero_indices().is_empty());
            for nv in nets.normals() {
                assert!((nv - Vector3::z()).norm() < 1e-14, "({m},{n}): {nv:?}");
            }
        }
    }

    #[test]
    fn flat_triangle_grid_gets_the_face_normal() {
        let cage = presets::curved_tetrahedron(0.0);
        for patch in cage.patches() {
            let Patch::Triangle(p) = patch else { unreachable!() };
            let pw = p.point(0, 0);
            let pu = p.point(3, 0);
            let pv = p.point(0, 3);
            let face = (pu - pw).cross(&(pv - pw));
            let nets = control_net_normals(patch);
            for nv in nets.normals() {
                assert!((nv - face).norm() < 1e-12 * face.norm(), "{nv:?} vs {face:?}");
            }
        }
    }

    #[test]
    fn bilinear_field_equals_the_exact_normal() {
        // For degree (1,1) the blended normals reproduce du x dv exactly,
        // including for non-planar quads.
        let mut rng = StdRng::seed_from_u64(30);
        for _ in 0..10 {
            let pts: Vec<Point3<f64>> = (0..4)
                .map(|_| Point3::new(rng.gen(), rng.gen(), rng.gen()))
                .collect();
            let patch = Patch::Tensor(TensorPatch::new(1, 1, pts).unwrap());
            let nets = control_net_normals(&patch);
            for _ in 0..10 {
                let (u, v) = (rng.gen::<f64>(), rng.gen::<f64>());
                let field = surface_normal(&patch, &nets, u, v).unwrap();
                let (du, dv) = patch.partials(u, v).unwrap();
                let exact = du.cross(&dv);
                assert!((field - exact).norm() < 1e-14 * (1.0 + exact.norm()));
            }
        }
    }

    #[test]
    fn bulged_cube_normals_stay_outward() {
        let cage = presets::bulged_cube(3, 0.3);
        for patch in cage.patches() {
            let nets = control_net_normals(patch);
            assert!(nets.zero_indices().is_empty());
            for i in 0..=4 {
                for j in 0..=4 {
                    let (u, v) = (i as f64 / 4.0, j as f64 / 4.0);
                    let field = surface_normal(patch, &nets, u, v).unwrap();
                    let (du, dv) = patch.partials(u, v).unwrap();
                    let geo = du.cross(&dv);
                    assert!(field.dot(&geo) > 0.0, "flipped at ({u}, {v})");
                    // Points off the cube center should see the normal leave.
                    let p = patch.point(u, v).unwrap();
                    assert!(field.dot(&p.coords) > 0.0);
                }
            }
        }
    }

    #[test]
    fn prism_side_normals_match_the_flat_side() {
        let cage = presets::mixed_prism(0.2);
        let Patch::Tensor(side) = &cage.patches()[2] else { unreachable!() };
        let patch = Patch::Tensor(side.clone());
        let nets = control_net_normals(&patch);
        let (du, dv) = patch.partials(0.5, 0.5).unwrap();
        let geo = du.cross(&dv).normalize();
        for nv in nets.normals() {
            let dir = nv.normalize();
            assert!((dir - geo).norm() < 1e-12, "{dir:?} vs {geo:?}");
        }
    }

    #[test]
    fn collapsed_net_reports_zero_normals() {
        let p = Point3::new(1.0, 2.0, 3.0);
        let line: Vec<Point3<f64>> = (0..4)
            .map(|i| Point3::from(p.coords * i as f64))
            .collect();
        let patch = Patch::Tensor(TensorPatch::new(1, 1, line).unwrap());
        let nets = control_net_normals(&patch);
        assert_eq!(nets.zero_indices().len(), 4);
        for nv in nets.normals() {
            assert_eq!(*nv, Vector3::zeros());
        }
    }
}
