use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use topomode::fem::assemble_core;
use topomode::mesh::{
    generate_graded_square_mesh, load_mesh, reference_quadrature, save_mesh, write_mesh, DofMap,
    GradedSquare, Mesh,
};
use topomode::sensitivity::{compute_spectrum, null_space_report, NormOperator};
use topomode_cli::basin::{sample_basin_mesh, write_sample_data};
use topomode_cli::campaign::{run_file, Job, RunOptions};
use topomode_cli::error::{CliError, Result};
use topomode_cli::matrix_io::load_matrix;
use topomode_cli::setup::QUADRATURE_DEGREE;

#[derive(Parser)]
#[command(name = "topomode", version, about = "Topographic sensitivity of a barotropic ocean model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate or validate triangular meshes.
    #[command(subcommand)]
    Mesh(MeshCommand),
    /// Run the experiment described by a configuration file.
    Run(RunArgs),
    /// Singular values of a sensitivity matrix file.
    Spectrum(SpectrumArgs),
    /// Taylor test of the tangent model for a configuration.
    Fdcheck(RunArgs),
    /// Write the sample basin mesh, bathymetry and wind-stress grids.
    SampleData {
        dir: PathBuf,
    },
}

#[derive(Subcommand)]
enum MeshCommand {
    Gen(GenArgs),
    Check {
        file: PathBuf,
    },
}

#[derive(Args)]
struct GenArgs {
    /// Square side (km).
    #[arg(long, default_value_t = 4000.0)]
    side_km: f64,
    /// Coarse cells per side before grading.
    #[arg(long, default_value_t = 10)]
    n_coarse: usize,
    /// Ratio of the largest to the smallest cell.
    #[arg(long, default_value_t = 8.0)]
    ratio: f64,
    /// The 445-dof graded square used by the default experiments.
    #[arg(long, conflicts_with_all = ["n_coarse", "ratio", "basin"])]
    standard: bool,
    /// The sample North Atlantic basin (coordinates in metres).
    #[arg(long)]
    basin: bool,
    /// Output file; standard output when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    config: PathBuf,
    /// Validate the configuration and write only the manifest.
    #[arg(long)]
    dry_run: bool,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Twenty-year spin-up and 204.8-day trajectory.
    #[arg(long)]
    paper_scale: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum SpectrumNorm {
    /// Mass-matrix inner products on both sides (needs --mesh).
    Mass,
    Euclidean,
}

#[derive(Args)]
struct SpectrumArgs {
    g_file: PathBuf,
    /// Mesh the matrix was computed on; enables mass norms and the null
    /// space report.
    #[arg(long)]
    mesh: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = SpectrumNorm::Mass)]
    norm: SpectrumNorm,
    /// Output file for the CSV; standard output when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Mesh(MeshCommand::Gen(a)) => mesh_gen(a),
        Command::Mesh(MeshCommand::Check { file }) => mesh_check(&file),
        Command::Run(a) => run(a, Job::Experiment),
        Command::Fdcheck(a) => run(a, Job::FdCheck),
        Command::Spectrum(a) => spectrum(a),
        Command::SampleData { dir } => {
            for p in write_sample_data(&dir)? {
                println!("{}", p.display());
            }
            Ok(())
        }
    }
}

fn mesh_gen(a: GenArgs) -> Result<()> {
    let side = a.side_km * 1e3;
    let mesh = if a.basin {
        sample_basin_mesh()?
    } else if a.standard {
        GradedSquare::standard(side).build()?
    } else {
        generate_graded_square_mesh(side, a.n_coarse, a.ratio)?
    };
    match a.output {
        Some(p) => {
            save_mesh(&mesh, &p)?;
            log::info!("wrote {}", p.display());
        }
        None => write_mesh(&mesh, std::io::stdout().lock())?,
    }
    Ok(())
}

fn mesh_check(file: &PathBuf) -> Result<()> {
    let mesh = load_mesh(file)?;
    let dofmap = DofMap::new(&mesh);
    let (lo, hi) = mesh.bounding_box();
    let hmin = (0..mesh.triangle_count())
        .map(|t| mesh.triangle_diameter(t))
        .fold(f64::INFINITY, f64::min);
    let hmax = (0..mesh.triangle_count())
        .map(|t| mesh.triangle_diameter(t))
        .fold(0.0, f64::max);
    let mut out = std::io::stdout().lock();
    writeln!(out, "vertices {}", mesh.vertex_count())?;
    writeln!(out, "triangles {}", mesh.triangle_count())?;
    writeln!(out, "boundary_edges {}", mesh.boundary_edges().len())?;
    writeln!(out, "dofs {} interior {}", dofmap.n(), dofmap.n0())?;
    writeln!(out, "area {:e}", mesh.area())?;
    writeln!(out, "bounding_box {:e} {:e} {:e} {:e}", lo[0], lo[1], hi[0], hi[1])?;
    writeln!(out, "diameter_min {hmin:e} max {hmax:e}")?;
    writeln!(out, "ok")?;
    Ok(())
}

fn run(a: RunArgs, job: Job) -> Result<()> {
    let opts = RunOptions {
        dry_run: a.dry_run,
        paper_scale: a.paper_scale,
        output_dir: a.output_dir,
    };
    let outcome = run_file(&a.config, &opts, job)?;
    println!("{}", outcome.dir.display());
    Ok(())
}

fn spectrum(a: SpectrumArgs) -> Result<()> {
    let g = load_matrix(&a.g_file)?;
    let (rows, cols) = g.shape();
    let mesh: Option<Mesh> = a.mesh.as_ref().map(load_mesh).transpose()?;
    let dofmap = mesh.as_ref().map(DofMap::new);
    if let Some(d) = &dofmap {
        if (d.n0(), d.n()) != (rows, cols) {
            return Err(CliError::Config(format!(
                "matrix is {rows} x {cols} but the mesh has {} interior and {} total dofs",
                d.n0(),
                d.n()
            )));
        }
    }
    let norm = match (a.norm, &dofmap) {
        (SpectrumNorm::Euclidean, _) => NormOperator::from_forms(
            nalgebra::DMatrix::identity(rows, rows),
            nalgebra::DMatrix::identity(cols, cols),
        )?,
        (SpectrumNorm::Mass, Some(d)) => {
            let core = assemble_core(d, &reference_quadrature(QUADRATURE_DEGREE)?)?;
            NormOperator::from_forms(
                core.mass.to_dense_block(rows, rows),
                core.mass.to_dense(),
            )?
        }
        (SpectrumNorm::Mass, None) => {
            return Err(CliError::Config("--norm mass needs --mesh".into()));
        }
    };
    let sp = compute_spectrum(&g, &norm)?;
    match &a.output {
        Some(p) => sp.write_csv(std::io::BufWriter::new(std::fs::File::create(p)?))?,
        None => sp.write_csv(std::io::stdout().lock())?,
    }
    eprintln!("null_dim {} threshold {:e}", sp.null_dim, sp.threshold);
    if let Some(d) = &dofmap {
        null_space_report(&sp, d).write_text(std::io::stderr().lock())?;
    }
    Ok(())
}
