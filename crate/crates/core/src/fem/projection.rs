use crate::error::{Error, Result};
use crate::fem::assembly::{
    apply_dirichlet, assemble_load, assemble_mass, assemble_stiffness, map_point, shape_gradients,
    NodalField,
};
use crate::fem::quadrature::QuadratureRule;
use crate::fem::solver::ConjugateGradient;
use crate::mesh::{Mesh, Point2};

/// Relative residual target of the projection solves.
pub const PROJECTION_CG_TOL: f64 = 1e-13;

fn projection_cg() -> ConjugateGradient {
    ConjugateGradient {
        rel_tol: PROJECTION_CG_TOL,
        jacobi: true,
    }
}

/// L2 projection onto the full P1 space: solves `M p = (f, phi_j)`.
pub fn l2_project(mesh: &Mesh, f: impl Fn(Point2) -> f64) -> Result<NodalField> {
    l2_project_with(mesh, f, &QuadratureRule::default(), &projection_cg())
}

pub fn l2_project_with(
    mesh: &Mesh,
    f: impl Fn(Point2) -> f64,
    rule: &QuadratureRule,
    cg: &ConjugateGradient,
) -> Result<NodalField> {
    let mass = assemble_mass(mesh)?;
    let load = assemble_load(mesh, f, rule);
    Ok(cg.solve(&mass, &load, None)?.x.into())
}

/// Data describing the function to project in energy: its gradient, or its
/// Laplacian. The gradient is preferred when both are given.
#[derive(Clone, Copy, Default)]
pub struct RitzSource<'a> {
    pub gradient: Option<&'a dyn Fn(Point2) -> [f64; 2]>,
    pub laplacian: Option<&'a dyn Fn(Point2) -> f64>,
}

impl<'a> RitzSource<'a> {
    pub fn from_gradient(gradient: &'a dyn Fn(Point2) -> [f64; 2]) -> Self {
        Self {
            gradient: Some(gradient),
            laplacian: None,
        }
    }

    pub fn from_laplacian(laplacian: &'a dyn Fn(Point2) -> f64) -> Self {
        Self {
            gradient: None,
            laplacian: Some(laplacian),
        }
    }
}

/// Right-hand side `A(f, phi_j) = int grad f . grad phi_j` for every vertex.
pub fn energy_load(mesh: &Mesh, source: RitzSource<'_>, rule: &QuadratureRule) -> Result<Vec<f64>> {
    if let Some(grad) = source.gradient {
        let mut load = vec![0.0; mesh.num_vertices()];
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let (dphi, area) = shape_gradients(mesh, t)?;
            let mut mean_grad = [0.0; 2];
            for (bary, w) in rule.iter() {
                let g = grad(map_point(mesh, t, bary));
                mean_grad[0] += w * g[0];
                mean_grad[1] += w * g[1];
            }
            for (a, &v) in tri.vertices().iter().enumerate() {
                load[v] += area * (mean_grad[0] * dphi[a][0] + mean_grad[1] * dphi[a][1]);
            }
        }
        Ok(load)
    } else if let Some(lap) = source.laplacian {
        Ok(assemble_load(mesh, |p| -lap(p), rule))
    } else {
        Err(Error::InvalidParameter(
            "Ritz projection needs the gradient or the Laplacian of the function".into(),
        ))
    }
}

/// Energy projection onto `W_h^0`: `A(p - f, w_h) = 0` for all interior hats.
pub fn ritz_project(mesh: &Mesh, source: RitzSource<'_>) -> Result<NodalField> {
    ritz_project_with(mesh, source, &QuadratureRule::degree5(), &projection_cg())
}

pub fn ritz_project_with(
    mesh: &Mesh,
    source: RitzSource<'_>,
    rule: &QuadratureRule,
    cg: &ConjugateGradient,
) -> Result<NodalField> {
    let load = energy_load(mesh, source, rule)?;
    let stiffness = assemble_stiffness(mesh)?;
    let reduced = apply_dirichlet(&stiffness, &load, mesh)?;
    let x = cg.solve(&reduced.matrix, &reduced.rhs, None)?.x;
    Ok(reduced.expand(&x))
}
