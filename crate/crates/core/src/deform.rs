//! Deformation: move a mesh by evaluating its coordinate rows against a
//! modified cage, with per-control scale coefficients that trade the exact
//! normal magnitudes for a quasi-conformal look.

use nalgebra::{Point3, Vector3};
use rayon::prelude::*;

use crate::cage::{Cage, Patch, PatchKind};
use crate::coords::{CoordinateTable, Variant};
use crate::error::{Error, Result};
use crate::normals::{cage_control_net_normals, normal_from_weights};

/// Pointwise stretch ratio of the target parameterization against the source,
/// balanced so that pure rotations score 1 and uniform scaling by `c` scores
/// `c`.
pub fn linear_scale_factor(
    source_du: &Vector3<f64>,
    source_dv: &Vector3<f64>,
    target_du: &Vector3<f64>,
    target_dv: &Vector3<f64>,
) -> Result<f64> {
    let cross = source_du.cross(source_dv).norm_squared();
    if cross == 0.0 {
        return Err(Error::Degenerate(
            "source parameterization has a vanishing area element".into(),
        ));
    }
    let num = target_du.norm_squared() * source_dv.norm_squared()
        + source_du.norm_squared() * target_dv.norm_squared()
        - 2.0 * target_du.dot(target_dv) * source_du.dot(source_dv);
    Ok((num / (2.0 * cross)).sqrt())
}

/// Per-control scale coefficients for one cage deformation.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaFactors {
    per_patch: Vec<Vec<f64>>,
    pub quad_res: usize,
}

impl SigmaFactors {
    pub fn patch(&self, k: usize) -> &[f64] {
        &self.per_patch[k]
    }

    /// Factors fixed at one for every control of every patch.
    pub fn identity(cage: &Cage) -> Self {
        SigmaFactors {
            per_patch: cage
                .patches()
                .iter()
                .map(|p| vec![1.0; p.control_count()])
                .collect(),
            quad_res: 0,
        }
    }
}

/// Midpoint-style sample points covering the patch domain: cell centers of an
/// `r`×`r` grid for tensor patches, centroids of the `r²` equal-area
/// triangles of a uniform split for triangle patches.
fn sample_points(kind: PatchKind, r: usize) -> Vec<(f64, f64)> {
    let h = 1.0 / r as f64;
    let mut pts = Vec::new();
    match kind {
        PatchKind::Tensor => {
            for i in 0..r {
                for j in 0..r {
                    pts.push(((i as f64 + 0.5) * h, (j as f64 + 0.5) * h));
                }
            }
        }
        PatchKind::Triangle => {
            let third = 1.0 / 3.0;
            for i in 0..r {
                for j in 0..r - i {
                    let (u, v) = (i as f64 * h, j as f64 * h);
                    pts.push((u + third * h, v + third * h));
                    if i + j + 2 <= r {
                        pts.push((u + 2.0 * third * h, v + 2.0 * third * h));
                    }
                }
            }
        }
    }
    pts
}

/// Scale coefficients of one patch: for each control, the ratio of the
/// basis-weighted stretch integral to the basis-weighted area-ratio integral,
/// both taken against the source area element. Equal-weight sample sums stand
/// in for the integrals, and the shared weight cancels in the ratio.
pub fn sigma_coefficients(source: &Patch, target: &Patch, quad_res: usize) -> Result<Vec<f64>> {
    assert!(quad_res >= 4, "quadrature resolution too coarse");
    if source.kind() != target.kind() || source.degrees() != target.degrees() {
        return Err(Error::StructureMismatch {
            index: 0,
            reason: "source and target patch shapes differ".into(),
        });
    }
    let count = source.control_count();
    let src_nets = crate::normals::control_net_normals(source);
    let tgt_nets = crate::normals::control_net_normals(target);

    let mut num = vec![0.0; count];
    let mut den = vec![0.0; count];
    let mut weights = Vec::new();
    for (u, v) in sample_points(source.kind(), quad_res) {
        let (sdu, sdv) = source.partials_raw(u, v);
        let (tdu, tdv) = target.partials_raw(u, v);
        let jac = sdu.cross(&sdv).norm();
        let s_l = linear_scale_factor(&sdu, &sdv, &tdu, &tdv)?;
        source.weights_raw_into(u, v, &mut weights);
        let n_src = normal_from_weights(&weights, &src_nets).norm();
        let n_tgt = normal_from_weights(&weights, &tgt_nets).norm();
        if n_src == 0.0 {
            return Err(Error::Degenerate(
                "source control-net normals vanish at a sample point".into(),
            ));
        }
        let s_a = n_tgt / n_src;
        for c in 0..count {
            num[c] += weights[c] * s_l * jac;
            den[c] += weights[c] * s_a * jac;
        }
    }
    for c in 0..count {
        if den[c] <= 0.0 {
            return Err(Error::Degenerate(format!(
                "area-ratio integral is not positive for control {c}"
            )));
        }
        num[c] /= den[c];
    }
    Ok(num)
}

/// Scale coefficients for a whole cage deformation, parallel over patches.
pub fn cage_sigma(source: &Cage, target: &Cage, quad_res: usize) -> Result<SigmaFactors> {
    source.congruent_structure(target)?;
    let per_patch: Vec<Vec<f64>> = source
        .patches()
        .par_iter()
        .zip_eq(target.patches().par_iter())
        .map(|(s, t)| sigma_coefficients(s, t, quad_res))
        .collect::<Result<_>>()?;
    Ok(SigmaFactors { per_patch, quad_res })
}

/// Evaluate every coordinate row against the target cage.
///
/// Point weights multiply the target control points; normal weights multiply
/// the recomputed target control-net normals, scaled by `sigma` when given.
/// The cross-product variant pairs its weights with target control-point
/// cross products and takes no scale factors.
pub fn apply_deformation(
    table: &CoordinateTable,
    target: &Cage,
    sigma: Option<&SigmaFactors>,
) -> Result<Vec<Point3<f64>>> {
    let variant = table.params().variant;
    let layout = table.layout();
    if target.patches().len() != layout.patch_count() {
        return Err(Error::StructureMismatch {
            index: target.patches().len().min(layout.patch_count()),
            reason: format!(
                "table covers {} patches, target cage has {}",
                layout.patch_count(),
                target.patches().len()
            ),
        });
    }
    for (k, patch) in target.patches().iter().enumerate() {
        if layout.phi_count(k) != patch.control_count() {
            return Err(Error::StructureMismatch {
                index: k,
                reason: "target patch does not match the table layout".into(),
            });
        }
    }

    let nets = match variant {
        Variant::Normals => cage_control_net_normals(target.patches()),
        Variant::CrossProduct => Vec::new(),
    };

    let rows: Vec<&[f64]> = table.rows().collect();
    let out: Vec<Point3<f64>> = rows
        .par_iter()
        .map(|row| {
            let mut acc = Vector3::zeros();
            for (k, patch) in target.patches().iter().enumerate() {
                let phi = &row[layout.phi_offset(k)..layout.phi_offset(k) + layout.phi_count(k)];
                for (w, p) in phi.iter().zip(patch.control_points()) {
                    acc += *w * p.coords;
                }
                let psi = &row[layout.psi_offset(k)..layout.psi_offset(k) + layout.psi_count(k)];
                match variant {
                    Variant::Normals => {
                        let normals = nets[k].normals();
                        match sigma {
                            Some(s) => {
                                let sk = s.patch(k);
                                for (c, w) in psi.iter().enumerate() {
                                    acc += *w * sk[c] * normals[c];
                                }
                            }
                            None => {
                                for (w, n) in psi.iter().zip(normals) {
                                    acc += *w * *n;
                                }
                            }
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
        })
        .collect();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cage::{EmbeddedMesh, TensorPatch, TrianglePatch};
    use crate::coords::{cage_coordinates, CoordParams};
    use crate::presets;
    use crate::projection::ConstraintSystem;
    use nalgebra::{Rotation3, Vector3};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn transform_cage(cage: &Cage, f: impl Fn(&Point3<f64>) -> Point3<f64>) -> Cage {
        let patches = cage
            .patches()
            .iter()
            .map(|p| match p {
                Patch::Tensor(t) => {
                    let (m, n) = t.degrees();
                    Patch::Tensor(
                        TensorPatch::new(m, n, t.points().iter().map(&f).collect()).unwrap(),
                    )
                }
                Patch::Triangle(t) => Patch::Triangle(
                    TrianglePatch::new(t.degree(), t.points().iter().map(&f).collect()).unwrap(),
                ),
            })
            .collect();
        Cage::new(patches)
    }

    fn random_rotation(seed: u64) -> Rotation3<f64> {
        let mut rng = StdRng::seed_from_u64(seed);
        Rotation3::from_euler_angles(
            rng.gen_range(-3.0..3.0),
            rng.gen_range(-3.0..3.0),
            rng.gen_range(-3.0..3.0),
        )
    }

    fn projected_table(cage: &Cage, pts: &[Point3<f64>], variant: Variant) -> CoordinateTable {
        let mesh = EmbeddedMesh::new(pts.to_vec(), vec![]).unwrap();
        let params = CoordParams { grid: 4, levels: 2, variant };
        let mut table = cage_coordinates(cage, &mesh, &params).unwrap();
        let nets = cage_control_net_normals(cage.patches());
        let sys = ConstraintSystem::new(cage, &nets, variant).unwrap();
        sys.project_table(pts, &mut table).unwrap();
        table
    }

    #[test]
    fn stretch_ratio_basics() {
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..20 {
            let du = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let dv = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if du.cross(&dv).norm() < 1e-3 {
                continue;
            }
            let s = linear_scale_factor(&du, &dv, &du, &dv).unwrap();
            assert!((s - 1.0).abs() < 1e-14, "identity {s}");
            let rot = random_rotation(7);
            let s = linear_scale_factor(&du, &dv, &(rot * du), &(rot * dv)).unwrap();
            assert!((s - 1.0).abs() < 1e-12, "rotation {s}");
            let c = 2.75;
            let s = linear_scale_factor(&du, &dv, &(c * du), &(c * dv)).unwrap();
            assert!((s - c).abs() < 1e-12 * c, "scaling {s}");
        }
        let z = Vector3::zeros();
        assert!(linear_scale_factor(&z, &z, &z, &z).is_err());
    }

    #[test]
    fn sigma_is_one_for_identity_and_rigid_motions() {
        let cage = presets::bulged_cube(3, 0.25);
        let same = cage_sigma(&cage, &cage, 8).unwrap();
        for k in 0..cage.patches().len() {
            for s in same.patch(k) {
                assert!((s - 1.0).abs() < 1e-12, "identity sigma {s}");
            }
        }
        let rot = random_rotation(11);
        let shift = Vector3::new(0.3, -1.2, 0.8);
        let moved = transform_cage(&cage, |p| rot * p + shift);
        let rigid = cage_sigma(&cage, &moved, 8).unwrap();
        for k in 0..cage.patches().len() {
            for s in rigid.patch(k) {
                assert!((s - 1.0).abs() < 1e-9, "rigid sigma {s}");
            }
        }
    }

    #[test]
    fn sigma_counteracts_uniform_scaling() {
        let cage = presets::unit_cube();
        let doubled = transform_cage(&cage, |p| Point3::from(2.0 * p.coords));
        let sigma = cage_sigma(&cage, &doubled, 16).unwrap();
        for k in 0..cage.patches().len() {
            for s in sigma.patch(k) {
                assert!((s - 0.5).abs() < 1e-6, "scaled sigma {s}");
            }
        }
    }

    #[test]
    fn sigma_covers_triangle_patches() {
        let cage = presets::curved_tetrahedron(0.3);
        let same = cage_sigma(&cage, &cage, 8).unwrap();
        for k in 0..cage.patches().len() {
            for s in same.patch(k) {
                assert!((s - 1.0).abs() < 1e-12, "identity sigma {s}");
            }
        }
    }

    #[test]
    fn identity_deformation_returns_the_mesh() {
        let cage = presets::unit_cube();
        let pts = vec![
            Point3::new(0.5, 0.5, 0.5),
            Point3::new(0.2, 0.7, 0.4),
            Point3::new(0.85, 0.1, 0.65),
        ];
        for variant in [Variant::Normals, Variant::CrossProduct] {
            let table = projected_table(&cage, &pts, variant);
            let sigma = cage_sigma(&cage, &cage, 8).unwrap();
            let arg = match variant {
                Variant::Normals => Some(&sigma),
                Variant::CrossProduct => None,
            };
            let out = apply_deformation(&table, &cage, arg).unwrap();
            for (got, want) in out.iter().zip(&pts) {
                let err = (got - want).norm();
                assert!(err < 1e-9 * cage.diameter(), "{variant:?}: {err}");
            }
        }
    }

    #[test]
    fn translations_move_every_vertex_exactly() {
        let cage = presets::unit_cube();
        let pts = vec![Point3::new(0.4, 0.6, 0.3), Point3::new(0.75, 0.25, 0.5)];
        let table = projected_table(&cage, &pts, Variant::Normals);
        let shift = Vector3::new(1.5, -2.0, 3.0);
        let target = transform_cage(&cage, |p| p + shift);
        let sigma = cage_sigma(&cage, &target, 8).unwrap();
        let out = apply_deformation(&table, &target, Some(&sigma)).unwrap();
        for (got, src) in out.iter().zip(&pts) {
            let err = (got - (src + shift)).norm();
            assert!(err < 1e-9 * cage.diameter(), "{err}");
        }
    }

    #[test]
    fn rotations_carry_the_mesh_along() {
        let cage = presets::unit_cube();
        let pts = vec![Point3::new(0.3, 0.3, 0.7), Point3::new(0.6, 0.5, 0.45)];
        let table = projected_table(&cage, &pts, Variant::Normals);
        let rot = random_rotation(23);
        let target = transform_cage(&cage, |p| rot * p);
        let sigma = cage_sigma(&cage, &target, 8).unwrap();
        let out = apply_deformation(&table, &target, Some(&sigma)).unwrap();
        for (got, src) in out.iter().zip(&pts) {
            let err = (got - rot * src).norm();
            assert!(err < 1e-9 * cage.diameter(), "{err}");
        }
    }

    #[test]
    fn deformation_is_affine_in_the_consumed_data() {
        let cage = presets::unit_cube();
        let pts = vec![Point3::new(0.45, 0.55, 0.6)];
        let table = projected_table(&cage, &pts, Variant::Normals);
        let t1 = transform_cage(&cage, |p| Point3::new(p.x * 1.4, p.y, p.z + 0.2 * p.x));
        let t2 = transform_cage(&cage, |p| Point3::new(p.x, p.y * 0.8 + 0.1, p.z));
        let alpha = 0.35;
        let blend = Cage::new(
            t1.patches()
                .iter()
                .zip(t2.patches())
                .map(|(a, b)| {
                    let pts: Vec<Point3<f64>> = a
                        .control_points()
                        .iter()
                        .zip(b.control_points())
                        .map(|(p, q)| Point3::from(alpha * p.coords + (1.0 - alpha) * q.coords))
                        .collect();
                    match a {
                        Patch::Tensor(t) => {
                            let (m, n) = t.degrees();
                            Patch::Tensor(TensorPatch::new(m, n, pts).unwrap())
                        }
                        Patch::Triangle(t) => {
                            Patch::Triangle(TrianglePatch::new(t.degree(), pts).unwrap())
                        }
                    }
                })
                .collect(),
        );
        // Hold the scale factors fixed so only the target data varies. The
        // map is affine in the data it consumes — control points and normal
        // vectors together — so the blended check evaluates rows against
        // blended normals rather than normals of the blended net (those are
        // quadratic in the control points).
        let sigma = SigmaFactors::identity(&cage);
        let d1 = apply_deformation(&table, &t1, Some(&sigma)).unwrap();
        let d2 = apply_deformation(&table, &t2, Some(&sigma)).unwrap();
        let nets1 = cage_control_net_normals(t1.patches());
        let nets2 = cage_control_net_normals(t2.patches());
        let layout = table.layout();
        for (r, (a, b)) in d1.iter().zip(&d2).enumerate() {
            let row = table.row(r);
            let mut acc = Vector3::zeros();
            for (k, patch) in blend.patches().iter().enumerate() {
                let phi = &row[layout.phi_offset(k)..layout.phi_offset(k) + layout.phi_count(k)];
                for (w, p) in phi.iter().zip(patch.control_points()) {
                    acc += *w * p.coords;
                }
                let psi = &row[layout.psi_offset(k)..layout.psi_offset(k) + layout.psi_count(k)];
                for (c, w) in psi.iter().enumerate() {
                    let n = alpha * nets1[k].normals()[c] + (1.0 - alpha) * nets2[k].normals()[c];
                    acc += *w * n;
                }
            }
            let want = alpha * a.coords + (1.0 - alpha) * b.coords;
            assert!((acc - want).norm() < 1e-12, "affinity broken");
        }
    }

    #[test]
    fn reapplication_is_bit_stable() {
        let cage = presets::unit_cube();
        let pts = vec![Point3::new(0.5, 0.4, 0.6)];
        let table = projected_table(&cage, &pts, Variant::Normals);
        let target = transform_cage(&cage, |p| Point3::new(p.x + 0.1 * p.z, p.y, p.z));
        let sigma = cage_sigma(&cage, &target, 8).unwrap();
        let a = apply_deformation(&table, &target, Some(&sigma)).unwrap();
        let b = apply_deformation(&table, &target, Some(&sigma)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mismatched_targets_are_rejected() {
        let cage = presets::unit_cube();
        let pts = vec![Point3::new(0.5, 0.5, 0.5)];
        let table = projected_table(&cage, &pts, Variant::Normals);
        let err = apply_deformation(&table, &presets::mixed_prism(0.1), None).unwrap_err();
        assert!(matches!(err, Error::StructureMismatch { .. }), "{err}");
        let err = cage_sigma(&cage, &presets::mixed_prism(0.1), 8).unwrap_err();
        assert!(matches!(err, Error::StructureMismatch { .. }), "{err}");
    }

    #[test]
    fn collapsed_targets_are_reported() {
        let cage = presets::unit_cube();
        let flat = transform_cage(&cage, |p| Point3::new(p.x, p.y, 0.0));
        // A flattened cage still has some faces with live normals, but the
        // side faces collapse to segments whose normal field vanishes.
        let err = cage_sigma(&cage, &flat, 8).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)), "{err}");
    }
}
