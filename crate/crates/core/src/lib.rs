//! Cage-based deformation with curved cages.
//!
//! A cage is a closed, outward-oriented shell of Bézier patches — tensor
//! product, triangular, or a mix — surrounding the mesh you want to edit.
//! This crate computes, once per mesh, a table of influence weights tying
//! every mesh vertex to the cage's control points (`coords`), snaps the
//! table onto exact affine reproduction (`projection`), and then replays the
//! table against any structurally identical cage to deform the mesh
//! (`deform`), with optional per-control scale coefficients that keep the
//! result quasi-conformal.
//!
//! The weights are boundary-integral quantities: per cage patch, a seeded,
//! refined triangulation of the parameter domain (`tess`) is mapped through
//! the patch and each little triangle contributes its signed solid angle and
//! its single-layer potential (`kernels`) times the patch's Bernstein basis
//! (`basis`). Control-net normals (`normals`) supply the vector data the
//! normal weights multiply. `cage` holds the data model plus watertightness
//! validation, `coons` fills patch interiors from boundary polylines, and
//! `presets` builds the small cage zoo used in tests and examples.
//!
//! The pipeline in one breath:
//!
//! ```
//! use beziercage::{coords, deform, normals, presets, projection, EmbeddedMesh};
//! use nalgebra::Point3;
//!
//! let cage = presets::unit_cube();
//! let mesh = EmbeddedMesh::new(vec![Point3::new(0.5, 0.5, 0.5)], vec![]).unwrap();
//! let params = coords::CoordParams { grid: 4, levels: 2, ..Default::default() };
//! let mut table = coords::cage_coordinates(&cage, &mesh, &params).unwrap();
//!
//! let nets = normals::cage_control_net_normals(cage.patches());
//! let sys = projection::ConstraintSystem::new(&cage, &nets, params.variant).unwrap();
//! sys.project_table(mesh.vertices(), &mut table).unwrap();
//!
//! // Edit the cage (here: keep it in place), then replay the table.
//! let sigma = deform::cage_sigma(&cage, &cage, 8).unwrap();
//! let moved = deform::apply_deformation(&table, &cage, Some(&sigma)).unwrap();
//! assert!((moved[0] - mesh.vertices()[0]).norm() < 1e-9);
//! ```

pub mod basis;
pub mod cage;
pub mod coons;
pub mod coords;
pub mod deform;
pub mod error;
pub mod kernels;
pub mod normals;
pub mod presets;
pub mod projection;
pub mod tess;

pub use cage::{
    elevate_quad_cage, interior_flags, tessellate_cage, validate_cage, Cage, EmbeddedMesh, Patch,
    PatchKind, TensorPatch, TrianglePatch, ValidationReport,
};
pub use coons::{coons_point, fill_interior, BoundaryLoop};
pub use coords::{cage_coordinates, CageLayout, CoordParams, CoordinateTable, Variant};
pub use deform::{apply_deformation, cage_sigma, SigmaFactors};
pub use error::{Error, Result};
pub use normals::{cage_control_net_normals, ControlNetNormals};
pub use projection::ConstraintSystem;
pub use tess::{build_uv_tessellation, TessellationPattern};
