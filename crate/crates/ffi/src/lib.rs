//! C ABI over `lshape-ocp`.
//!
//! Objects cross the boundary as opaque handles that the caller releases with
//! the matching `*_free` function. Every fallible call returns an
//! [`LocpStatus`]; on failure the message is available from
//! [`locp_last_error_message`] on the same thread. Panics are caught and
//! reported as [`LocpStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lshape_ocp::control::{projected_gradient_solve, Bounds, OptimizerConfig, OptimizerOutcome};
use lshape_ocp::dynamics::StepSolver;
use lshape_ocp::measure::TimeGrid;
use lshape_ocp::mesh::{build_lshape_mesh, Mesh};
use lshape_ocp::verify::{
    gradient_fd_check, l2l2_error, run_convergence_study, steps_for, ConvergenceReport, Discrete,
    GradCheckConfig, ManufacturedProblem, ProblemId, StudyConfig,
};
use lshape_ocp::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocpStatus {
    Ok = 0,
    InvalidArgument = 1,
    Parse = 2,
    Validation = 3,
    Numerical = 4,
    NullPointer = 5,
    Io = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocpProblem {
    LshapeMeasure = 0,
    Smooth = 1,
}

/// Solver settings. Zero `n` or `steps` picks the defaults (8 and
/// `ceil(T / h^2)` rounded up to even); a non-positive `step` means
/// `1 / alpha`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocpOptions {
    pub problem: LocpProblem,
    pub n: usize,
    pub steps: usize,
    pub alpha: f64,
    pub u_a: f64,
    pub u_b: f64,
    pub step: f64,
    pub tol: f64,
    pub max_iter: usize,
}

pub struct LocpMesh {
    mesh: Mesh,
}

pub struct LocpSolution {
    outcome: OptimizerOutcome,
    mesh: Mesh,
    errors: [f64; 3],
}

pub struct LocpStudy {
    report: ConvergenceReport,
}

const DEFAULT_N: usize = 8;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> LocpStatus {
    match err {
        Error::Parse { .. } => LocpStatus::Parse,
        Error::Validation(_) => LocpStatus::Validation,
        Error::Io(_) => LocpStatus::Io,
        e if e.is_numerical() => LocpStatus::Numerical,
        _ => LocpStatus::InvalidArgument,
    }
}

fn fail(status: LocpStatus, msg: impl Into<String>) -> LocpStatus {
    set_last_error(msg.into());
    status
}

/// Runs `f`, mapping errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), LocpStatus>) -> LocpStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LocpStatus::Ok,
        Ok(Err(status)) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(LocpStatus::Panic, format!("panic: {msg}"))
        }
    }
}

fn check<T>(r: lshape_ocp::Result<T>) -> Result<T, LocpStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), LocpStatus> {
    if p.is_null() {
        Err(fail(LocpStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(())
    }
}

impl LocpOptions {
    fn problem(&self) -> ManufacturedProblem {
        ManufacturedProblem::by_id(match self.problem {
            LocpProblem::LshapeMeasure => ProblemId::LshapeMeasure,
            LocpProblem::Smooth => ProblemId::Smooth,
        })
    }

    fn optimizer(&self) -> Result<OptimizerConfig, LocpStatus> {
        let bounds = Bounds::new(self.u_a, self.u_b)
            .map_err(|e| fail(LocpStatus::Validation, e.to_string()))?;
        let cfg = OptimizerConfig {
            alpha: self.alpha,
            bounds,
            step: (self.step > 0.0).then_some(self.step),
            tol: self.tol,
            max_iter: self.max_iter,
        };
        cfg.validate()
            .map_err(|e| fail(LocpStatus::Validation, e.to_string()))?;
        Ok(cfg)
    }
}

impl Default for LocpOptions {
    fn default() -> Self {
        let opt = OptimizerConfig::default();
        Self {
            problem: LocpProblem::LshapeMeasure,
            n: 0,
            steps: 0,
            alpha: opt.alpha,
            u_a: opt.bounds.lower(),
            u_b: opt.bounds.upper(),
            step: 0.0,
            tol: opt.tol,
            max_iter: opt.max_iter,
        }
    }
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn locp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn locp_options_default() -> LocpOptions {
    LocpOptions::default()
}

/// Structured L-shape mesh with squares of side `1/n`; `n` must be even.
///
/// # Safety
/// `out` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn locp_mesh_new(n: usize, out: *mut *mut LocpMesh) -> LocpStatus {
    guard(|| {
        non_null(out, "out")?;
        let mesh = check(build_lshape_mesh(n))?;
        *out = Box::into_raw(Box::new(LocpMesh { mesh }));
        Ok(())
    })
}

/// # Safety
/// `mesh` must be null or come from [`locp_mesh_new`] and not be freed yet.
#[no_mangle]
pub unsafe extern "C" fn locp_mesh_free(mesh: *mut LocpMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// # Safety
/// `mesh` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn locp_mesh_num_vertices(mesh: *const LocpMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.mesh.num_vertices())
}

/// # Safety
/// `mesh` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn locp_mesh_num_triangles(mesh: *const LocpMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.mesh.num_triangles())
}

/// Number of interior vertices.
///
/// # Safety
/// `mesh` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn locp_mesh_num_dofs(mesh: *const LocpMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.mesh.num_dofs())
}

/// Longest edge, or NaN for a null handle.
///
/// # Safety
/// `mesh` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn locp_mesh_h(mesh: *const LocpMesh) -> f64 {
    mesh.as_ref().map_or(f64::NAN, |m| m.mesh.h())
}

/// Copies interleaved `x, y` vertex coordinates into `xy`, which must hold
/// `2 * num_vertices` values.
///
/// # Safety
/// `mesh` must be a live handle and `xy` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn locp_mesh_vertices(
    mesh: *const LocpMesh,
    xy: *mut f64,
    len: usize,
) -> LocpStatus {
    guard(|| {
        non_null(mesh, "mesh")?;
        non_null(xy, "xy")?;
        let m = &(*mesh).mesh;
        let need = 2 * m.num_vertices();
        if len < need {
            return Err(fail(
                LocpStatus::InvalidArgument,
                format!("buffer holds {len} values, need {need}"),
            ));
        }
        let buf = std::slice::from_raw_parts_mut(xy, need);
        for (chunk, p) in buf.chunks_exact_mut(2).zip(m.vertices()) {
            chunk[0] = p.x;
            chunk[1] = p.y;
        }
        Ok(())
    })
}

/// Solves the discrete control problem by projected gradients.
///
/// # Safety
/// `opts` must be null (defaults) or valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn locp_solve(
    opts: *const LocpOptions,
    out: *mut *mut LocpSolution,
) -> LocpStatus {
    guard(|| {
        non_null(out, "out")?;
        let opts = opts.as_ref().copied().unwrap_or_default();
        let cfg = opts.optimizer()?;
        let problem = opts.problem();
        let mesh = check(build_lshape_mesh(if opts.n == 0 {
            DEFAULT_N
        } else {
            opts.n
        }))?;
        let steps = if opts.steps == 0 {
            steps_for(mesh.h(), problem.t_final)
        } else {
            opts.steps
        };
        let grid = check(TimeGrid::new(problem.t_final, steps))?;
        let discrete = check(problem.discretize(mesh, grid, StepSolver::Cholesky))?;
        let outcome = check(projected_gradient_solve(&discrete, &cfg))?;
        let (mesh, grid) = (discrete.system.mesh(), discrete.system.grid());
        let errors = match &problem.exact {
            Some(exact) => [
                check(l2l2_error(
                    Discrete::State(&outcome.state),
                    &*exact.y,
                    mesh,
                    grid,
                ))?,
                check(l2l2_error(
                    Discrete::Costate(&outcome.costate),
                    &*exact.z,
                    mesh,
                    grid,
                ))?,
                check(l2l2_error(
                    Discrete::Control(&outcome.control),
                    &*exact.u,
                    mesh,
                    grid,
                ))?,
            ],
            None => [f64::NAN; 3],
        };
        *out = Box::into_raw(Box::new(LocpSolution {
            outcome,
            mesh: mesh.clone(),
            errors,
        }));
        Ok(())
    })
}

/// # Safety
/// `sol` must be null or come from [`locp_solve`] and not be freed yet.
#[no_mangle]
pub unsafe extern "C" fn locp_solution_free(sol: *mut LocpSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// # Safety
/// `sol` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn locp_solution_iterations(sol: *const LocpSolution) -> usize {
    sol.as_ref().map_or(0, |s| s.outcome.report.iterations)
}

/// # Safety
/// `sol` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn locp_solution_converged(sol: *const LocpSolution) -> bool {
    sol.as_ref().is_some_and(|s| s.outcome.report.converged)
}

/// # Safety
/// `sol` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn locp_solution_kkt_residual(sol: *const LocpSolution) -> f64 {
    sol.as_ref()
        .map_or(f64::NAN, |s| s.outcome.report.kkt_residual)
}

/// Reduced cost of the returned control.
///
/// # Safety
/// `sol` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn locp_solution_cost(sol: *const LocpSolution) -> f64 {
    sol.as_ref()
        .and_then(|s| s.outcome.report.cost_history.last().copied())
        .unwrap_or(f64::NAN)
}

/// Writes the `L2(L2)` errors of state, co-state and control into
/// `errors[0..3]`; all NaN when the problem has no exact solution.
///
/// # Safety
/// `sol` must be a live handle and `errors` must hold 3 doubles.
#[no_mangle]
pub unsafe extern "C" fn locp_solution_errors(
    sol: *const LocpSolution,
    errors: *mut f64,
) -> LocpStatus {
    guard(|| {
        non_null(sol, "solution")?;
        non_null(errors, "errors")?;
        std::slice::from_raw_parts_mut(errors, 3).copy_from_slice(&(*sol).errors);
        Ok(())
    })
}

/// Number of control values, `steps * num_triangles`.
///
/// # Safety
/// `sol` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn locp_solution_control_len(sol: *const LocpSolution) -> usize {
    sol.as_ref().map_or(0, |s| s.outcome.control.values().len())
}

/// Copies the control, interval-major, into `values`.
///
/// # Safety
/// `sol` must be a live handle and `values` must point to `len` writable
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn locp_solution_control(
    sol: *const LocpSolution,
    values: *mut f64,
    len: usize,
) -> LocpStatus {
    guard(|| {
        non_null(sol, "solution")?;
        non_null(values, "values")?;
        let src = (*sol).outcome.control.values();
        if len < src.len() {
            return Err(fail(
                LocpStatus::InvalidArgument,
                format!("buffer holds {len} values, need {}", src.len()),
            ));
        }
        std::slice::from_raw_parts_mut(values, src.len()).copy_from_slice(src);
        Ok(())
    })
}

/// Copies the state at the final time (one value per vertex) into `values`.
///
/// # Safety
/// `sol` must be a live handle and `values` must point to `len` writable
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn locp_solution_final_state(
    sol: *const LocpSolution,
    values: *mut f64,
    len: usize,
) -> LocpStatus {
    guard(|| {
        non_null(sol, "solution")?;
        non_null(values, "values")?;
        let s = &*sol;
        let last = s
            .outcome
            .state
            .levels()
            .last()
            .map(|l| l.values())
            .unwrap_or(&[]);
        let need = s.mesh.num_vertices();
        if len < need {
            return Err(fail(
                LocpStatus::InvalidArgument,
                format!("buffer holds {len} values, need {need}"),
            ));
        }
        std::slice::from_raw_parts_mut(values, last.len()).copy_from_slice(last);
        Ok(())
    })
}

/// Convergence study over the mesh parameters `levels[0..len]`. `opts.n`
/// and `opts.steps` are ignored.
///
/// # Safety
/// `levels` must point to `len` values, `opts` must be null or valid and
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn locp_study_run(
    levels: *const usize,
    len: usize,
    opts: *const LocpOptions,
    out: *mut *mut LocpStudy,
) -> LocpStatus {
    guard(|| {
        non_null(levels, "levels")?;
        non_null(out, "out")?;
        let opts = opts.as_ref().copied().unwrap_or_default();
        let cfg = StudyConfig {
            problem: opts.problem().id,
            optimizer: opts.optimizer()?,
            solver: StepSolver::Cholesky,
        };
        let levels = std::slice::from_raw_parts(levels, len);
        let report = check(run_convergence_study(levels, &cfg))?;
        *out = Box::into_raw(Box::new(LocpStudy { report }));
        Ok(())
    })
}

/// # Safety
/// `study` must be null or come from [`locp_study_run`] and not be freed
/// yet.
#[no_mangle]
pub unsafe extern "C" fn locp_study_free(study: *mut LocpStudy) {
    if !study.is_null() {
        drop(Box::from_raw(study));
    }
}

/// False when a level failed; the report then ends in an error row.
///
/// # Safety
/// `study` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn locp_study_is_complete(study: *const LocpStudy) -> bool {
    study.as_ref().is_some_and(|s| s.report.is_complete())
}

/// # Safety
/// `study` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn locp_study_num_rows(study: *const LocpStudy) -> usize {
    study.as_ref().map_or(0, |s| s.report.rows.len())
}

/// Report as CSV. Release with [`locp_string_free`]. Null on a null handle.
///
/// # Safety
/// `study` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn locp_study_csv(study: *const LocpStudy) -> *mut c_char {
    study.as_ref().map_or(ptr::null_mut(), |s| {
        CString::new(s.report.to_csv()).map_or(ptr::null_mut(), CString::into_raw)
    })
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn locp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Compares the adjoint gradient with central differences on a coarse
/// instance and writes the worst relative error.
///
/// # Safety
/// `opts` must be null or valid; `max_relative_error` must be writable.
#[no_mangle]
pub unsafe extern "C" fn locp_gradcheck(
    opts: *const LocpOptions,
    max_relative_error: *mut f64,
) -> LocpStatus {
    guard(|| {
        non_null(max_relative_error, "max_relative_error")?;
        let opts = opts.as_ref().copied().unwrap_or_default();
        let defaults = GradCheckConfig::default();
        let mut problem = opts.problem();
        let opt = opts.optimizer()?;
        problem.alpha = opt.alpha;
        problem.bounds = opt.bounds;
        let cfg = GradCheckConfig {
            n: if opts.n == 0 { defaults.n } else { opts.n },
            steps: if opts.steps == 0 {
                defaults.steps
            } else {
                opts.steps
            },
            ..defaults
        };
        let report = check(gradient_fd_check(&problem, &cfg))?;
        *max_relative_error = report.max_relative_error;
        Ok(())
    })
}
