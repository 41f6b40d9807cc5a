//! The `lshape-ocp` command line: `mesh-info`, `solve`, `study` and
//! `gradcheck`.
//!
//! Settings come from defaults, then an optional `--config` file, then
//! flags. Exit codes: 0 on success, 1 on invalid input, 2 on numerical
//! failure.

mod config;
mod plot;

use std::ffi::OsString;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

pub use config::{parse_config, parse_levels, RunConfig, DEFAULT_LEVELS};
pub use plot::loglog_svg;

use crate::control::projected_gradient_solve;
use crate::dynamics::StepSolver;
use crate::error::{Error, Result};
use crate::measure::TimeGrid;
use crate::mesh::build_lshape_mesh;
use crate::verify::{
    gradient_fd_check, l2l2_error, run_convergence_study, steps_for, Discrete, GradCheckConfig,
    ManufacturedProblem, StudyConfig,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

const DEFAULT_MESH_INFO_N: usize = 4;
const DEFAULT_SOLVE_N: usize = 8;
const DEFAULT_GRADCHECK_N: usize = 4;
const DEFAULT_GRADCHECK_STEPS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
struct Levels(Vec<usize>);

fn levels_arg(s: &str) -> std::result::Result<Levels, String> {
    parse_levels(s).map(Levels)
}

#[derive(Debug, Parser)]
#[command(
    name = "lshape-ocp",
    version,
    about = "Parabolic optimal control with measure data on the L-shape"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print vertex, triangle and interior DOF counts of the L-shape mesh.
    MeshInfo(Flags),
    /// Run the projected gradient method and write state, co-state and control CSVs.
    Solve(Flags),
    /// Run a convergence study and write the report CSV and a log-log SVG.
    Study(Flags),
    /// Compare the adjoint gradient with central finite differences.
    Gradcheck(Flags),
}

#[derive(Debug, Clone, Args)]
struct Flags {
    /// Problem id: lshape-measure or smooth.
    #[arg(long)]
    problem: Option<String>,
    /// Mesh parameter: squares of side 1/n.
    #[arg(long)]
    n: Option<usize>,
    /// Number of time steps.
    #[arg(long)]
    steps: Option<usize>,
    /// Comma-separated mesh levels for `study`.
    #[arg(long, value_parser = levels_arg)]
    levels: Option<Levels>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Lower control bound.
    #[arg(long, allow_hyphen_values = true)]
    ua: Option<f64>,
    /// Upper control bound.
    #[arg(long, allow_hyphen_values = true)]
    ub: Option<f64>,
    /// Gradient step (default 1/alpha).
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// key=value settings file.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Flags {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => parse_config(&std::fs::read_to_string(path)?)?,
            None => RunConfig::default(),
        };
        if let Some(p) = &self.problem {
            cfg.problem = p.parse()?;
        }
        if self.n.is_some() {
            cfg.n = self.n;
        }
        if self.steps.is_some() {
            cfg.steps = self.steps;
        }
        if let Some(Levels(l)) = &self.levels {
            cfg.levels = l.clone();
        }
        if let Some(v) = self.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = self.ua {
            cfg.u_a = v;
        }
        if let Some(v) = self.ub {
            cfg.u_b = v;
        }
        if self.step.is_some() {
            cfg.step = self.step;
        }
        if let Some(v) = self.tol {
            cfg.tol = v;
        }
        if let Some(v) = self.max_iter {
            cfg.max_iter = v;
        }
        if self.out.is_some() {
            cfg.out = self.out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Runs the CLI with process stdout and stderr.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    dispatch_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// Runs the CLI with the given output streams and returns the exit code.
pub fn dispatch_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_INVALID
                }
            };
        }
    };
    let result = match &cli.command {
        Command::MeshInfo(f) => f.resolve().and_then(|c| mesh_info(&c, out)),
        Command::Solve(f) => f.resolve().and_then(|c| solve(&c, out)),
        Command::Study(f) => f.resolve().and_then(|c| study(&c, out)),
        Command::Gradcheck(f) => f.resolve().and_then(|c| gradcheck(&c, out)),
    };
    let _ = out.flush();
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_INVALID
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut file = File::create(path)?;
    file.write_all(contents.as_bytes())?;
    file.flush()?;
    file.sync_all()?;
    Ok(())
}

/// `dir/name.ext` -> `dir/name{suffix}`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn mesh_info(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let n = cfg.n.unwrap_or(DEFAULT_MESH_INFO_N);
    let mesh = build_lshape_mesh(n)?;
    writeln!(out, "n: {n}")?;
    writeln!(out, "vertices: {}", mesh.num_vertices())?;
    writeln!(out, "triangles: {}", mesh.num_triangles())?;
    writeln!(out, "interior dof: {}", mesh.free_vertices().len())?;
    writeln!(out, "h: {:.6e}", mesh.h())?;
    if let Some(path) = &cfg.out {
        write_file(path, &mesh.to_text())?;
        writeln!(out, "mesh written to {}", path.display())?;
    }
    Ok(EXIT_OK)
}

fn solve(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let problem = ManufacturedProblem::by_id(cfg.problem);
    let n = cfg.n.unwrap_or(DEFAULT_SOLVE_N);
    let mesh = build_lshape_mesh(n)?;
    let steps = cfg
        .steps
        .unwrap_or_else(|| steps_for(mesh.h(), problem.t_final));
    let grid = TimeGrid::new(problem.t_final, steps)?;
    let discrete = problem.discretize(mesh, grid, StepSolver::Cholesky)?;
    let outcome = projected_gradient_solve(&discrete, &cfg.optimizer())?;
    let mesh = discrete.system.mesh();
    let grid = discrete.system.grid();
    let report = &outcome.report;

    writeln!(out, "problem: {}", problem.id)?;
    writeln!(
        out,
        "n: {n}, steps: {steps}, interior dof: {}",
        discrete.system.free_vertices().len()
    )?;
    writeln!(out, "iterations: {}", report.iterations)?;
    writeln!(out, "converged: {}", report.converged)?;
    if let Some(cost) = report.cost_history.last() {
        writeln!(out, "cost: {cost:.10e}")?;
    }
    writeln!(out, "kkt residual: {:.3e}", report.kkt_residual)?;
    if let Some(exact) = &problem.exact {
        let ey = l2l2_error(Discrete::State(&outcome.state), &*exact.y, mesh, grid)?;
        let ez = l2l2_error(Discrete::Costate(&outcome.costate), &*exact.z, mesh, grid)?;
        let eu = l2l2_error(Discrete::Control(&outcome.control), &*exact.u, mesh, grid)?;
        writeln!(out, "err_y: {ey:.5e}, err_z: {ez:.5e}, err_u: {eu:.5e}")?;
    }

    let base = cfg
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("solve.csv"));
    let files = [
        (sibling(&base, "_state.csv"), outcome.state.to_csv(mesh)),
        (sibling(&base, "_costate.csv"), outcome.costate.to_csv(mesh)),
        (sibling(&base, "_control.csv"), outcome.control.to_csv(mesh)),
    ];
    for (path, contents) in &files {
        write_file(path, contents)?;
        writeln!(out, "wrote {}", path.display())?;
    }
    Ok(EXIT_OK)
}

fn study(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let study_cfg = StudyConfig {
        problem: cfg.problem,
        optimizer: cfg.optimizer(),
        solver: StepSolver::Cholesky,
    };
    let report = run_convergence_study(&cfg.levels, &study_cfg)?;
    let path = cfg
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("report.csv"));
    let csv = report.to_csv();
    write_file(&path, &csv)?;
    let final_path = sibling(&path, "_final.csv");
    write_file(&final_path, &report.final_time_csv())?;
    let svg_path = path.with_extension("svg");
    write_file(&svg_path, &loglog_svg(&report))?;

    write!(out, "{csv}")?;
    writeln!(
        out,
        "wrote {}, {}, {}",
        path.display(),
        final_path.display(),
        svg_path.display()
    )?;
    match &report.failure {
        None => Ok(EXIT_OK),
        Some(f) => {
            writeln!(out, "study stopped at level {}: {}", f.level, f.message)?;
            Ok(if f.numerical {
                EXIT_NUMERICAL
            } else {
                EXIT_INVALID
            })
        }
    }
}

fn gradcheck(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let mut problem = ManufacturedProblem::by_id(cfg.problem);
    problem.alpha = cfg.alpha;
    problem.bounds = cfg.optimizer().bounds;
    let check = GradCheckConfig {
        n: cfg.n.unwrap_or(DEFAULT_GRADCHECK_N),
        steps: cfg.steps.unwrap_or(DEFAULT_GRADCHECK_STEPS),
        ..GradCheckConfig::default()
    };
    let report = gradient_fd_check(&problem, &check)?;
    writeln!(out, "components: {}", report.components.len())?;
    writeln!(out, "max relative error: {:.3e}", report.max_relative_error)?;
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("lshape-ocp").chain(args.iter().copied());
        let code = dispatch_with(argv, &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn mesh_info_counts() {
        let (code, out, _) = run(&["mesh-info", "--n", "4"]);
        assert_eq!(code, 0);
        assert!(out.contains("vertices: 21"));
        assert!(out.contains("triangles: 24"));
        assert!(out.contains("interior dof: 5"));
    }

    #[test]
    fn unknown_flag_is_usage_error() {
        let (code, _, err) = run(&["mesh-info", "--bogus"]);
        assert_eq!(code, 1);
        assert!(err.contains("Usage"));
    }

    #[test]
    fn crossed_bounds_exit_one() {
        let (code, _, err) = run(&["gradcheck", "--ua", "0.2"]);
        assert_eq!(code, 1);
        assert!(err.contains("u_a"));
    }

    #[test]
    fn odd_mesh_parameter_exit_one() {
        assert_eq!(run(&["mesh-info", "--n", "3"]).0, 1);
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = run(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("study"));
    }

    #[test]
    fn sibling_paths() {
        assert_eq!(
            sibling(Path::new("a/b.csv"), "_final.csv"),
            PathBuf::from("a/b_final.csv")
        );
        assert_eq!(sibling(Path::new("r"), "_x.csv"), PathBuf::from("r_x.csv"));
    }

    #[test]
    fn numerical_errors_map_to_two() {
        assert_eq!(exit_code(&Error::Factorization("x".into())), 2);
        assert_eq!(exit_code(&Error::Validation("x".into())), 1);
    }
}
