//! `stokes-hdg`: solve, convergence studies, corner exponents and mesh counts.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stokes_hdg::analysis::problems::{example1, example2};
use stokes_hdg::analysis::regularity::{expected_orders, singular_exponent_with, RootSearch};
use stokes_hdg::{build_square_mesh, convergence_study, solve_control_problem, Mesh, Problem};

use config::{ConfigError, ProblemChoice, RunConfig};

/// Environment variable holding the worker thread count.
const THREADS_ENV: &str = "STOKES_HDG_THREADS";

#[derive(Parser)]
#[command(name = "stokes-hdg", version, about = "HDG solver for tangential Dirichlet boundary control of Stokes flow")]
struct Cli {
    /// Flat `key = value` file; flags given on the command line take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem and write field coefficients and the iteration log.
    Solve(RunArgs),
    /// Errors and observed orders over dyadically refined meshes.
    Convergence(RunArgs),
    /// Singular exponent of a corner and whether it is admissible.
    Xi {
        #[arg(long)]
        omega: Option<String>,
    },
    /// Counts of a uniform square mesh.
    MeshInfo {
        #[arg(long)]
        n: Option<String>,
        #[arg(long)]
        side: Option<String>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// `example1`, `example2` or the path of a constant-data problem file.
    #[arg(long)]
    problem: Option<String>,
    /// Mesh size `n` (h/√2 = 1/n), or a comma-separated list for `convergence`.
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    dt: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    max_iter: Option<String>,
    /// `face` (face length) or `mesh` (largest element diameter).
    #[arg(long)]
    stabilization: Option<String>,
    /// Mesh size of the computed reference for `example2`.
    #[arg(long)]
    reference_n: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let mut pairs = Vec::new();
        let mut add = |key, value: &Option<String>| {
            if let Some(v) = value {
                pairs.push((key, v.clone()));
            }
        };
        add("problem", &self.problem);
        add("n", &self.n);
        add("k", &self.k);
        add("gamma", &self.gamma);
        add("dt", &self.dt);
        add("tol", &self.tol);
        add("max_iter", &self.max_iter);
        add("stabilization", &self.stabilization);
        add("reference_n", &self.reference_n);
        if let Some(out) = &self.out {
            pairs.push(("out", out.display().to_string()));
        }
        pairs
    }
}

enum Failure {
    Config(String),
    NotConverged(String),
    Runtime(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<stokes_hdg::Error> for Failure {
    fn from(e: stokes_hdg::Error) -> Self {
        match e {
            stokes_hdg::Error::InvalidConfig(msg) | stokes_hdg::Error::InvalidMesh(msg) => Failure::Config(msg),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn configure(file: Option<&Path>, overrides: &[(&str, String)]) -> Result<RunConfig, Failure> {
    let mut config = RunConfig::default();
    if let Some(path) = file {
        config.apply_file(path)?;
    }
    for (key, value) in overrides {
        config.set(key, value)?;
    }
    Ok(config)
}

fn init_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|t| *t > 0)
        .ok_or_else(|| Failure::Config(format!("{THREADS_ENV} must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().map_err(|e| Failure::Runtime(e.to_string()))
}

fn write_file(dir: &Path, name: &str, contents: impl AsRef<[u8]>) -> Result<(), Failure> {
    fs::write(dir.join(name), contents)?;
    Ok(())
}

fn problem_mesh(config: &RunConfig, n: usize) -> Result<Mesh, Failure> {
    Ok(match &config.problem {
        ProblemChoice::Example1 => Problem::Example1.mesh(n)?,
        ProblemChoice::Example2 => Problem::Example2 { reference_n: config.reference_n }.mesh(n)?,
        ProblemChoice::Custom(custom) => {
            let cells = custom.side * n as f64;
            if cells < 1.0 || (cells - cells.round()).abs() > 1e-9 {
                return Err(Failure::Config(format!("h/√2 = 1/{n} does not tile a square of side {}", custom.side)));
            }
            build_square_mesh(cells.round() as usize, custom.side, [0.0, 0.0])?
        }
    })
}

fn run_solve(config: &RunConfig) -> Result<(), Failure> {
    let n = config.sizes[0];
    let mesh = problem_mesh(config, n)?;
    let (solution, report) = match &config.problem {
        ProblemChoice::Example1 => {
            let solver = config.solver_config(example1::GAMMA)?;
            solve_control_problem(&mesh, solver, &example1::force, &example1::target)?
        }
        ProblemChoice::Example2 => {
            let solver = config.solver_config(example2::GAMMA)?;
            solve_control_problem(&mesh, solver, &example2::force, &example2::target)?
        }
        ProblemChoice::Custom(custom) => {
            let solver = config.solver_config(1.0)?;
            let (force, target) = (custom.force, custom.target);
            solve_control_problem(&mesh, solver, &move |_| force, &move |_| target)?
        }
    };
    fs::create_dir_all(&config.out)?;
    for (stem, bytes) in solution.csv_dumps()? {
        write_file(&config.out, &format!("{stem}.csv"), bytes)?;
    }
    write_file(&config.out, "iterations.csv", report.log_csv())?;
    println!(
        "n={n} elements={} iterations={} converged={} kkt={:.3e} data_scale={:.6e}",
        mesh.num_elements(),
        report.iterations,
        report.converged,
        report.kkt.max(),
        report.data_scale
    );
    if !report.converged {
        return Err(Failure::NotConverged(format!("no convergence within {} iterations", report.iterations)));
    }
    Ok(())
}

fn run_convergence(config: &RunConfig) -> Result<(), Failure> {
    let (problem, gamma) = match &config.problem {
        ProblemChoice::Example1 => (Problem::Example1, example1::GAMMA),
        ProblemChoice::Example2 => (Problem::Example2 { reference_n: config.reference_n }, example2::GAMMA),
        ProblemChoice::Custom(_) => {
            return Err(Failure::Config("convergence studies need `example1` or `example2`".into()));
        }
    };
    let solver = config.solver_config(gamma)?;
    let table = convergence_study(&solver, &config.sizes, problem)?;
    fs::create_dir_all(&config.out)?;
    let csv = table.to_csv();
    write_file(&config.out, "convergence.csv", &csv)?;
    if let Some(projected) = table.projected_csv() {
        write_file(&config.out, "convergence_projected.csv", projected)?;
    }
    print!("{csv}");
    let stalled: Vec<usize> = table.rows.iter().filter(|r| !r.converged).map(|r| r.n).collect();
    if !stalled.is_empty() {
        return Err(Failure::NotConverged(format!("no convergence for n = {stalled:?}")));
    }
    Ok(())
}

fn run_xi(config: &RunConfig) -> Result<(), Failure> {
    let exponent = singular_exponent_with(config.omega, RootSearch::default())?;
    let profile = expected_orders(1, config.omega, f64::INFINITY)?;
    let root = exponent.root.map_or_else(|| "none".to_string(), |r| format!("{:.6}{:+.6}i", r.re, r.im));
    println!(
        "omega={:.7} xi={:.6} admissible={} saturated={} root={root} local_control_regularity={:.6}",
        config.omega,
        exponent.value,
        exponent.is_admissible(),
        exponent.saturated,
        profile.local_control_regularity
    );
    Ok(())
}

fn run_mesh_info(config: &RunConfig) -> Result<(), Failure> {
    let n = config.sizes[0];
    let mesh = build_square_mesh(n, config.side, [0.0, 0.0])?;
    println!(
        "vertices={} elements={} faces={} interior_faces={} boundary_faces={} h_max={:.6}",
        mesh.vertices.len(),
        mesh.num_elements(),
        mesh.num_faces(),
        mesh.num_interior_faces(),
        mesh.num_boundary_faces(),
        mesh.h_max
    );
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    init_threads()?;
    let file = cli.config.as_deref();
    match &cli.command {
        Command::Solve(args) => run_solve(&configure(file, &args.overrides())?),
        Command::Convergence(args) => run_convergence(&configure(file, &args.overrides())?),
        Command::Xi { omega } => {
            let overrides: Vec<_> = omega.iter().map(|v| ("omega", v.clone())).collect();
            run_xi(&configure(file, &overrides)?)
        }
        Command::MeshInfo { n, side } => {
            let mut overrides: Vec<_> = n.iter().map(|v| ("n", v.clone())).collect();
            overrides.extend(side.iter().map(|v| ("side", v.clone())));
            run_mesh_info(&configure(file, &overrides)?)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::NotConverged(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
