//! Manufactured problems, error norms, convergence studies and the adjoint
//! gradient check.

mod gradcheck;
mod norms;
mod problem;
mod study;

pub use gradcheck::{
    gradient_fd_check, ComponentCheck, GradCheckConfig, GradCheckReport, ProbePoint,
};
pub use norms::{eoc, final_time_error, l2_error, l2l2_error, Discrete};
pub use problem::{ExactSolution, ManufacturedProblem, ProblemId};
pub use study::{
    run_convergence_study, steps_for, ConvergenceReport, StudyConfig, StudyFailure, StudyRow,
    FINAL_REPORT_HEADER, REPORT_HEADER,
};
