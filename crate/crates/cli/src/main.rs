use std::path::PathBuf;

use beziercage::coords::Variant;
use clap::{Parser, Subcommand, ValueEnum};

use beziercage_cli::commands;
use beziercage_cli::error::CliError;

#[derive(Parser)]
#[command(
    name = "beziercage",
    version,
    about = "Cage-based deformation with Bézier patch cages"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    /// Normal weights pair with control-net normals.
    Normals,
    /// Normal weights pair with control-point cross products.
    Crossprod,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Variant {
        match v {
            VariantArg::Normals => Variant::Normals,
            VariantArg::Crossprod => Variant::CrossProduct,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compute per-vertex coordinate rows against a cage
    Coords {
        /// Cage JSON file
        #[arg(long)]
        cage: PathBuf,
        /// Mesh OBJ file; every vertex must lie inside the cage
        #[arg(long)]
        mesh: PathBuf,
        /// Output coordinate binary
        #[arg(long)]
        out: PathBuf,
        /// Base tessellation grid per patch
        #[arg(long, default_value_t = 8)]
        grid: usize,
        /// Seed-directed refinement rounds
        #[arg(long, default_value_t = 4)]
        levels: usize,
        /// Normal-weight parameterization
        #[arg(long, value_enum, default_value_t = VariantArg::Normals)]
        variant: VariantArg,
        /// Project rows onto exact affine reproduction before saving
        #[arg(long, conflicts_with = "no_project")]
        project: bool,
        /// Keep raw rows (the default)
        #[arg(long)]
        no_project: bool,
    },
    /// Apply a coordinate table to a modified cage and write the deformed mesh
    Deform {
        /// Coordinate binary from `coords`
        #[arg(long)]
        coords: PathBuf,
        /// Source cage the coordinates were computed against
        #[arg(long)]
        cage: PathBuf,
        /// Deformed cage, structurally identical to the source
        #[arg(long)]
        target: PathBuf,
        /// The mesh the coordinates were computed for
        #[arg(long)]
        mesh: PathBuf,
        /// Output OBJ
        #[arg(long)]
        out: PathBuf,
        /// Sample resolution for the quasi-conformal scale factors
        #[arg(long, default_value_t = 32)]
        sigma_res: usize,
    },
    /// Fill boundary loops into tensor patches and write them as a cage
    Coons {
        /// Boundary-loop JSON file
        #[arg(long)]
        loops: PathBuf,
        /// Patch degree as two integers: m n
        #[arg(long, num_args = 2, value_names = ["M", "N"])]
        degree: Vec<usize>,
        /// Output cage JSON
        #[arg(long)]
        out: PathBuf,
    },
    /// Elevate a shell of flat quads to a cage of higher-degree patches
    Elevate {
        /// Quad-shell JSON file
        #[arg(long)]
        quads: PathBuf,
        /// Degree of the elevated patches (same in both directions)
        #[arg(long)]
        degree: usize,
        /// Output cage JSON
        #[arg(long)]
        out: PathBuf,
    },
    /// Inspect a cage and optionally a mesh and coordinate table against it
    Validate {
        /// Cage JSON file
        #[arg(long)]
        cage: PathBuf,
        /// Mesh OBJ to test for containment and reconstruction
        #[arg(long)]
        mesh: Option<PathBuf>,
        /// Coordinate binary to check and summarize
        #[arg(long)]
        coords: Option<PathBuf>,
    },
    /// Sample cage patches into a triangle mesh for inspection
    Tessellate {
        /// Cage JSON file
        #[arg(long)]
        cage: PathBuf,
        /// Subdivisions per parameter direction
        #[arg(long, default_value_t = 8)]
        res: usize,
        /// Output OBJ
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Coords { cage, mesh, out, grid, levels, variant, project, no_project: _ } => {
            commands::coords(&cage, &mesh, &out, grid, levels, variant.into(), project)
        }
        Command::Deform { coords, cage, target, mesh, out, sigma_res } => {
            commands::deform(&coords, &cage, &target, &mesh, &out, sigma_res)
        }
        Command::Coons { loops, degree, out } => {
            commands::coons(&loops, (degree[0], degree[1]), &out)
        }
        Command::Elevate { quads, degree, out } => commands::elevate(&quads, degree, &out),
        Command::Validate { cage, mesh, coords } => {
            commands::validate(&cage, mesh.as_deref(), coords.as_deref())
        }
        Command::Tessellate { cage, res, out } => commands::tessellate(&cage, res, &out),
    }
}

fn main() {
    // Die quietly on a closed pipe (`beziercage validate ... | head`) instead
    // of panicking mid-print; Rust ignores SIGPIPE by default.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: [{}] {e}", e.category());
        std::process::exit(1);
    }
}
