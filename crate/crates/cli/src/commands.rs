//! The command implementations behind the CLI surface. Each is a thin
//! sequence of parse → compute → write steps over the core library.

use std::path::Path;

use beziercage::coords::{cage_coordinates, CoordParams, Variant};
use beziercage::deform::{apply_deformation, cage_sigma};
use beziercage::normals::cage_control_net_normals;
use beziercage::projection::ConstraintSystem;
use beziercage::{fill_interior, Cage, EmbeddedMesh};

use crate::error::{CliError, Result};
use crate::formats;

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

fn load_cage(path: &Path) -> Result<Cage> {
    formats::parse_cage(&read_text(path)?)
}

fn load_mesh(path: &Path) -> Result<EmbeddedMesh> {
    formats::parse_obj(&read_text(path)?)
}

/// Checked write of a cage file: anything the CLI writes must parse back.
fn store_cage(path: &Path, cage: &Cage) -> Result<()> {
    let report = beziercage::validate_cage(cage);
    if !report.passed() {
        return Err(beziercage::Error::InvalidCage(report.summary()).into());
    }
    write_file(path, formats::write_cage(cage).as_bytes())
}

#[allow(clippy::too_many_arguments)]
pub fn coords(
    cage_path: &Path,
    mesh_path: &Path,
    out_path: &Path,
    grid: usize,
    levels: usize,
    variant: Variant,
    project: bool,
) -> Result<()> {
    let cage = load_cage(cage_path)?;
    let mesh = load_mesh(mesh_path)?;
    let params = CoordParams { grid, levels, variant };
    let mut table = cage_coordinates(&cage, &mesh, &params)?;
    if project {
        let nets = cage_control_net_normals(cage.patches());
        let system = ConstraintSystem::new(&cage, &nets, variant)?;
        system.project_table(mesh.vertices(), &mut table)?;
    }
    let provenance = formats::CoordProvenance {
        cage_hash: formats::cage_hash(&cage),
        mesh_hash: formats::mesh_hash(&mesh),
    };
    write_file(out_path, &formats::write_coords(&table, &provenance))?;
    let note = if table.skipped_elements > 0 {
        format!(" ({} degenerate elements skipped)", table.skipped_elements)
    } else {
        String::new()
    };
    println!(
        "wrote {} rows of {} columns to {}{note}",
        table.vertex_count(),
        table.layout().row_len(),
        out_path.display()
    );
    Ok(())
}

pub fn deform(
    coords_path: &Path,
    cage_path: &Path,
    target_path: &Path,
    mesh_path: &Path,
    out_path: &Path,
    sigma_res: usize,
) -> Result<()> {
    let (mut table, provenance) = formats::read_coords(&read_bytes(coords_path)?)?;
    let source = load_cage(cage_path)?;
    if formats::cage_hash(&source) != provenance.cage_hash {
        return Err(CliError::coords_file(format!(
            "{} was computed for a different cage than {}",
            coords_path.display(),
            cage_path.display()
        )));
    }
    let mesh = load_mesh(mesh_path)?;
    if formats::mesh_hash(&mesh) != provenance.mesh_hash {
        return Err(CliError::coords_file(format!(
            "{} was computed for a different mesh than {}",
            coords_path.display(),
            mesh_path.display()
        )));
    }
    let target = load_cage(target_path)?;
    let variant = table.params().variant;
    if !table.projected {
        let nets = cage_control_net_normals(source.patches());
        let system = ConstraintSystem::new(&source, &nets, variant)?;
        system.project_table(mesh.vertices(), &mut table)?;
    }
    let sigma = match variant {
        Variant::Normals => Some(cage_sigma(&source, &target, sigma_res)?),
        Variant::CrossProduct => None,
    };
    let deformed = apply_deformation(&table, &target, sigma.as_ref())?;
    write_file(out_path, formats::write_obj(&deformed, mesh.faces()).as_bytes())?;
    println!("wrote {} deformed vertices to {}", deformed.len(), out_path.display());
    Ok(())
}

pub fn coons(loops_path: &Path, degree: (usize, usize), out_path: &Path) -> Result<()> {
    let loops = formats::parse_loops(&read_text(loops_path)?)?;
    let patches = loops
        .iter()
        .enumerate()
        .map(|(i, l)| {
            fill_interior(l, degree.0, degree.1)
                .map(beziercage::Patch::Tensor)
                .map_err(|e| CliError::loops_file(format!("loop {i}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let cage = Cage::new(patches);
    store_cage(out_path, &cage)?;
    println!(
        "filled {} patches at degree ({}, {}) into {}",
        cage.patches().len(),
        degree.0,
        degree.1,
        out_path.display()
    );
    Ok(())
}

pub fn elevate(quads_path: &Path, degree: usize, out_path: &Path) -> Result<()> {
    let quads = formats::parse_quads(&read_text(quads_path)?)?;
    let cage = beziercage::elevate_quad_cage(&quads, degree)?;
    store_cage(out_path, &cage)?;
    println!(
        "elevated {} quads to degree ({degree}, {degree}) in {}",
        quads.len(),
        out_path.display()
    );
    Ok(())
}

pub fn tessellate(cage_path: &Path, res: usize, out_path: &Path) -> Result<()> {
    let cage = load_cage(cage_path)?;
    let mesh = beziercage::tessellate_cage(&cage, res);
    write_file(out_path, formats::write_obj(mesh.vertices(), mesh.faces()).as_bytes())?;
    println!(
        "tessellated {} patches into {} triangles in {}",
        cage.patches().len(),
        mesh.faces().len(),
        out_path.display()
    );
    Ok(())
}

pub fn validate(
    cage_path: &Path,
    mesh_path: Option<&Path>,
    coords_path: Option<&Path>,
) -> Result<()> {
    let cage = formats::parse_cage_raw(&read_text(cage_path)?)?;
    println!(
        "cage: {} patches, {} control points, diameter {:.6e}",
        cage.patches().len(),
        cage.total_controls(),
        cage.diameter()
    );
    let report = beziercage::validate_cage(&cage);
    let mut failed = None;
    if report.passed() {
        println!("validation: pass");
    } else {
        println!("validation: FAIL — {}", report.summary());
        failed = Some(CliError::Core(beziercage::Error::InvalidCage(report.summary())));
    }

    let mesh = mesh_path.map(load_mesh).transpose()?;
    let coords = coords_path.map(read_bytes).transpose()?.map(|b| formats::read_coords(&b)).transpose()?;

    let variant = coords
        .as_ref()
        .map(|(t, _)| t.params().variant)
        .unwrap_or(Variant::Normals);
    let nets = cage_control_net_normals(cage.patches());
    match ConstraintSystem::new(&cage, &nets, variant) {
        Ok(system) => println!(
            "constraints: rank 4 of 4, condition {:.3e}, {} columns",
            system.condition(),
            system.column_count()
        ),
        Err(e) => {
            println!("constraints: FAIL — {e}");
            failed.get_or_insert(CliError::Core(e));
        }
    }

    if let Some(mesh) = &mesh {
        let inside =
            beziercage::interior_flags(&cage, mesh.vertices(), beziercage::cage::INTERIOR_TEST_RES);
        let in_count = inside.iter().filter(|b| **b).count();
        println!("vertices inside the cage: {in_count} of {}", mesh.vertices().len());
    }

    if let Some((table, provenance)) = &coords {
        if formats::cage_hash(&cage) != provenance.cage_hash {
            return Err(CliError::coords_file(
                "coordinate file was computed for a different cage",
            ));
        }
        let mesh = mesh.as_ref().ok_or_else(|| {
            CliError::usage("--coords needs --mesh to compare reconstructions against")
        })?;
        if formats::mesh_hash(mesh) != provenance.mesh_hash {
            return Err(CliError::coords_file(
                "coordinate file was computed for a different mesh",
            ));
        }
        let params = table.params();
        println!(
            "coordinates: {} rows, variant {:?}, grid {}, levels {}, projected: {}",
            table.vertex_count(),
            params.variant,
            params.grid,
            params.levels,
            if table.projected { "yes" } else { "no" }
        );
        let phi_total = table.layout().phi_total();
        let (mut max_pu, mut sum_pu) = (0.0f64, 0.0f64);
        for row in table.rows() {
            let r = (row[..phi_total].iter().sum::<f64>() - 1.0).abs();
            max_pu = max_pu.max(r);
            sum_pu += r;
        }
        let n = table.vertex_count() as f64;
        println!(
            "partition of unity |sum(phi) - 1|: max {max_pu:.3e}, mean {:.3e}",
            sum_pu / n
        );
        let reconstructed = apply_deformation(table, &cage, None)?;
        let (mut max_err, mut sum_err) = (0.0f64, 0.0f64);
        for (got, want) in reconstructed.iter().zip(mesh.vertices()) {
            let e = (got - want).norm();
            max_err = max_err.max(e);
            sum_err += e;
        }
        println!(
            "reconstruction error: max {max_err:.3e}, mean {:.3e} ({:.3e} of cage diameter)",
            sum_err / n,
            max_err / cage.diameter()
        );
    }

    match failed {
        Some(e) => Err(e),
        None => Ok(()),
    }
}
