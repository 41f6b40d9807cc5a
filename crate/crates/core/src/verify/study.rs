use std::fmt::Write as _;

use rayon::prelude::*;

use crate::control::{projected_gradient_solve, OptimizerConfig};
use crate::dynamics::StepSolver;
use crate::error::{Error, Result};
use crate::measure::TimeGrid;
use crate::mesh::build_lshape_mesh;
use crate::verify::norms::{eoc, final_time_error, l2l2_error, Discrete};
use crate::verify::problem::{ManufacturedProblem, ProblemId};

pub const REPORT_HEADER: &str = "level,h,dof,N,err_y,err_z,err_u,rate_y,rate_z,rate_u";
pub const FINAL_REPORT_HEADER: &str = "level,h,dof,N,err_y_final,rate_y_final";

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StudyConfig {
    pub problem: ProblemId,
    pub optimizer: OptimizerConfig,
    pub solver: StepSolver,
}

/// Number of backward-Euler steps for `k ~ h^2`: `ceil(T / h^2)`, rounded up
/// to an even count.
pub fn steps_for(h: f64, t_final: f64) -> usize {
    let n = (t_final / (h * h) - 1e-9).ceil().max(1.0) as usize;
    n + n % 2
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    /// Mesh parameter `n` (squares of side `1/n`).
    pub level: usize,
    pub h: f64,
    pub dof: usize,
    pub steps: usize,
    pub err_y: f64,
    pub err_z: f64,
    pub err_u: f64,
    pub err_y_final: f64,
    /// Rates against the previous row; `None` on the first row.
    pub rate_y: Option<f64>,
    pub rate_z: Option<f64>,
    pub rate_u: Option<f64>,
    pub rate_y_final: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub kkt_residual: f64,
}

/// The level at which a study stopped.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyFailure {
    pub level: usize,
    pub message: String,
    /// The failure came from the numerics rather than from the input.
    pub numerical: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvergenceReport {
    pub rows: Vec<StudyRow>,
    pub failure: Option<StudyFailure>,
}

fn fmt_num(v: f64) -> String {
    format!("{v:.5e}")
}

fn fmt_rate(r: Option<f64>) -> String {
    r.map(fmt_num).unwrap_or_default()
}

impl ConvergenceReport {
    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }

    /// Report CSV. A failed level is appended as a row holding only the
    /// level and the error text.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(REPORT_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                r.level,
                fmt_num(r.h),
                r.dof,
                r.steps,
                fmt_num(r.err_y),
                fmt_num(r.err_z),
                fmt_num(r.err_u),
                fmt_rate(r.rate_y),
                fmt_rate(r.rate_z),
                fmt_rate(r.rate_u)
            );
        }
        self.push_failure(&mut out);
        out
    }

    /// Final-time `L2` errors of the state.
    pub fn final_time_csv(&self) -> String {
        let mut out = String::from(FINAL_REPORT_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.level,
                fmt_num(r.h),
                r.dof,
                r.steps,
                fmt_num(r.err_y_final),
                fmt_rate(r.rate_y_final)
            );
        }
        self.push_failure(&mut out);
        out
    }

    fn push_failure(&self, out: &mut String) {
        if let Some(f) = &self.failure {
            let msg = f.message.replace(['\n', ','], " ");
            let _ = writeln!(out, "{},error: {msg}", f.level);
        }
    }
}

fn validate_levels(levels: &[usize]) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::Validation("no levels requested".into()));
    }
    for &n in levels {
        if n == 0 || n % 2 != 0 {
            return Err(Error::Validation(format!(
                "level {n} is not a positive even number"
            )));
        }
    }
    for w in levels.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::Validation(format!(
                "levels must be strictly increasing, got {} then {}",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

fn run_level(problem: &ManufacturedProblem, n: usize, cfg: &StudyConfig) -> Result<StudyRow> {
    let exact = problem.exact.as_ref().ok_or_else(|| {
        Error::InvalidParameter(format!("problem `{}` has no exact solution", problem.id))
    })?;
    let mesh = build_lshape_mesh(n)?;
    let h = mesh.h();
    let steps = steps_for(h, problem.t_final);
    let grid = TimeGrid::new(problem.t_final, steps)?;
    let discrete = problem.discretize(mesh, grid, cfg.solver)?;
    let outcome = projected_gradient_solve(&discrete, &cfg.optimizer)?;
    let mesh = discrete.system.mesh();
    let grid = discrete.system.grid();
    let err_y = l2l2_error(Discrete::State(&outcome.state), &*exact.y, mesh, grid)?;
    let err_z = l2l2_error(Discrete::Costate(&outcome.costate), &*exact.z, mesh, grid)?;
    let err_u = l2l2_error(Discrete::Control(&outcome.control), &*exact.u, mesh, grid)?;
    let err_y_final = final_time_error(&outcome.state, &*exact.y, mesh, problem.t_final)?;
    Ok(StudyRow {
        level: n,
        h,
        dof: discrete.system.free_vertices().len(),
        steps,
        err_y,
        err_z,
        err_u,
        err_y_final,
        rate_y: None,
        rate_z: None,
        rate_u: None,
        rate_y_final: None,
        iterations: outcome.report.iterations,
        converged: outcome.report.converged,
        kkt_residual: outcome.report.kkt_residual,
    })
}

/// Solves the configured problem on each level `n` with `N = steps_for(h, T)`
/// and tabulates `L2(L2)` errors and convergence orders. Levels run in
/// parallel; rows come back in level order. The first failing level ends the
/// table and is recorded in [`ConvergenceReport::failure`].
pub fn run_convergence_study(levels: &[usize], cfg: &StudyConfig) -> Result<ConvergenceReport> {
    validate_levels(levels)?;
    cfg.optimizer.validate()?;
    let problem = ManufacturedProblem::by_id(cfg.problem);
    if problem.exact.is_none() {
        return Err(Error::InvalidParameter(format!(
            "problem `{}` has no exact solution to measure errors against",
            problem.id
        )));
    }
    let results: Vec<Result<StudyRow>> = levels
        .par_iter()
        .map(|&n| run_level(&problem, n, cfg))
        .collect();

    let mut report = ConvergenceReport::default();
    for (&n, result) in levels.iter().zip(results) {
        match result {
            Ok(mut row) => {
                if let Some(prev) = report.rows.last() {
                    row.rate_y = eoc(prev.err_y, row.err_y, prev.h, row.h).ok();
                    row.rate_z = eoc(prev.err_z, row.err_z, prev.h, row.h).ok();
                    row.rate_u = eoc(prev.err_u, row.err_u, prev.h, row.h).ok();
                    row.rate_y_final = eoc(prev.err_y_final, row.err_y_final, prev.h, row.h).ok();
                }
                report.rows.push(row);
            }
            Err(e) => {
                report.failure = Some(StudyFailure {
                    level: n,
                    message: e.to_string(),
                    numerical: e.is_numerical(),
                });
                break;
            }
        }
    }
    Ok(report)
}
