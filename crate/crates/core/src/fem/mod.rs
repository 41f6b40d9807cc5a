//! Continuous piecewise-linear finite elements on triangles.

mod assembly;
mod projection;
mod quadrature;
mod solver;
mod sparse;

pub use assembly::{
    apply_dirichlet, assemble_load, assemble_load_by_element, assemble_mass, assemble_mass_with,
    assemble_stiffness, assemble_stiffness_with, local_mass, local_stiffness, map_point,
    shape_gradients, Assembly, NodalField, ReducedSystem,
};
pub use projection::{
    energy_load, l2_project, l2_project_with, ritz_project, ritz_project_with, RitzSource,
    PROJECTION_CG_TOL,
};
pub use quadrature::QuadratureRule;
pub use solver::{cg_solve, CgSolution, ConjugateGradient, SkylineCholesky, DEFAULT_CG_TOL};
pub use sparse::SparseMatrix;

pub(crate) use sparse::dot;
