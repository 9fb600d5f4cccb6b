//! Min-norm correction of raw coordinate rows so that affine cage data is
//! reproduced exactly.
//!
//! The constraints for one vertex are `A * row = q`: three rows asking the
//! reconstruction to return the vertex itself, and one asking the point
//! weights to sum to one. `A` depends only on the cage, so it is assembled and
//! factored once and reused for every vertex; the projected row is the closest
//! feasible row to the raw one in the Euclidean sense.

use nalgebra::{Cholesky, DMatrix, Matrix4, Point3, Vector4, U4};
use rayon::prelude::*;

use crate::cage::Cage;
use crate::coords::{CageLayout, CoordinateTable, Variant};
use crate::error::{Error, Result};
use crate::normals::ControlNetNormals;

/// Largest acceptable spectral condition number of `A * Aᵀ`.
const CONDITION_LIMIT: f64 = 1e14;

/// Per-cage constraint system shared by all vertices.
#[derive(Debug)]
pub struct ConstraintSystem {
    a: DMatrix<f64>,
    chol: Cholesky<f64, U4>,
    condition: f64,
}

impl ConstraintSystem {
    /// Assemble the constraint matrix for `cage`, verify it has full row
    /// rank and acceptable conditioning, and factor it.
    ///
    /// `nets` must hold one control-net normal set per patch for the normals
    /// variant; it is ignored by the cross-product variant.
    pub fn new(cage: &Cage, nets: &[ControlNetNormals], variant: Variant) -> Result<Self> {
        let layout = CageLayout::new(cage, variant);
        let d = layout.row_len();
        let mut a = DMatrix::zeros(4, d);

        for (k, patch) in cage.patches().iter().enumerate() {
            let phi0 = layout.phi_offset(k);
            for (c, p) in patch.control_points().iter().enumerate() {
                a[(0, phi0 + c)] = p.x;
                a[(1, phi0 + c)] = p.y;
                a[(2, phi0 + c)] = p.z;
                a[(3, phi0 + c)] = 1.0;
            }
            let psi0 = layout.psi_offset(k);
            match variant {
                Variant::Normals => {
                    for (c, n) in nets[k].normals().iter().enumerate() {
                        a[(0, psi0 + c)] = n.x;
                        a[(1, psi0 + c)] = n.y;
                        a[(2, psi0 + c)] = n.z;
                    }
                }
                Variant::CrossProduct => {
                    let pts = patch.control_points();
                    let mut idx = 0;
                    for p in 0..pts.len() {
                        for q in p + 1..pts.len() {
                            let x = pts[p].coords.cross(&pts[q].coords);
                            a[(0, psi0 + idx)] = x.x;
                            a[(1, psi0 + idx)] = x.y;
                            a[(2, psi0 + idx)] = x.z;
                            idx += 1;
                        }
                    }
                }
            }
        }

        // Rank straight from A: singular values below the noise floor of a
        // d-column accumulation count as zero.
        let sv = a.clone().svd(false, false).singular_values;
        let sigma_max = sv.iter().cloned().fold(0.0, f64::max);
        let tol = d as f64 * f64::EPSILON * sigma_max;
        let rank = sv.iter().filter(|s| **s > tol).count();
        if rank < 4 {
            return Err(Error::RankDeficient { rank });
        }
        let sigma_min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        // Conditioning of the 4x4 system we actually solve, which squares
        // the spread of A's singular values.
        let condition = (sigma_max / sigma_min).powi(2);
        if condition > CONDITION_LIMIT {
            return Err(Error::IllConditioned { condition, diameter: cage.diameter() });
        }
        let gram: Matrix4<f64> = (&a * a.transpose()).fixed_view::<4, 4>(0, 0).into_owned();
        let chol = Cholesky::new(gram).ok_or(Error::IllConditioned {
            condition,
            diameter: cage.diameter(),
        })?;

        Ok(ConstraintSystem { a, chol, condition })
    }

    pub fn column_count(&self) -> usize {
        self.a.ncols()
    }

    /// Spectral condition number of the 4x4 normal-equations matrix.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    /// `A * row`: the reconstructed position in the first three entries and
    /// the point-weight sum in the fourth.
    pub fn constraint_values(&self, row: &[f64]) -> Vector4<f64> {
        debug_assert_eq!(row.len(), self.a.ncols());
        let mut out = Vector4::zeros();
        for (j, w) in row.iter().enumerate() {
            if *w != 0.0 {
                out += *w * self.a.column(j);
            }
        }
        out
    }

    /// Add `Aᵀ * (AAᵀ)⁻¹ * r` to `row`.
    fn apply_correction(&self, r: &Vector4<f64>, row: &mut [f64]) {
        let y = self.chol.solve(r);
        for (j, w) in row.iter_mut().enumerate() {
            *w += self.a.column(j).dot(&y);
        }
    }

    /// Replace `row` with the nearest row satisfying the constraints for a
    /// vertex at `eta`. One refinement pass cleans up the residual of the
    /// first solve.
    pub fn project_row(&self, eta: &Point3<f64>, row: &mut [f64]) {
        let q = Vector4::new(eta.x, eta.y, eta.z, 1.0);
        let r = q - self.constraint_values(row);
        self.apply_correction(&r, row);
        let r = q - self.constraint_values(row);
        self.apply_correction(&r, row);
    }

    /// Project every row of `table` against its vertex position.
    pub fn project_table(
        &self,
        vertices: &[Point3<f64>],
        table: &mut CoordinateTable,
    ) -> Result<()> {
        if table.layout().row_len() != self.a.ncols() {
            return Err(Error::StructureMismatch {
                index: 0,
                reason: format!(
                    "table rows have {} columns but the constraint system has {}",
                    table.layout().row_len(),
                    self.a.ncols()
                ),
            });
        }
        if vertices.len() != table.vertex_count() {
            return Err(Error::InvalidMesh(format!(
                "{} vertices for a table of {} rows",
                vertices.len(),
                table.vertex_count()
            )));
        }
        let row_len = self.a.ncols();
        let mut data = std::mem::take(table.data_mut());
        data.par_chunks_exact_mut(row_len)
            .zip_eq(vertices.par_iter())
            .for_each(|(row, eta)| self.project_row(eta, row));
        *table.data_mut() = data;
        table.projected = true;
        Ok(())
    }
}
