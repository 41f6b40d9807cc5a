use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::control::{reduced_gradient, ControlField};
use crate::dynamics::StepSolver;
use crate::error::{Error, Result};
use crate::measure::TimeGrid;
use crate::mesh::build_lshape_mesh;
use crate::verify::problem::ManufacturedProblem;

/// Where the derivative is probed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbePoint {
    Zero,
    /// Uniformly random admissible control from a seeded generator.
    Random {
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckConfig {
    pub n: usize,
    pub steps: usize,
    pub components: usize,
    pub eps: f64,
    pub seed: u64,
    pub at: ProbePoint,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            n: 4,
            steps: 4,
            components: 20,
            eps: 1e-5,
            seed: 0x5eed,
            at: ProbePoint::Random { seed: 7 },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentCheck {
    /// Interval index, 1-based.
    pub interval: usize,
    pub triangle: usize,
    pub adjoint: f64,
    pub finite_difference: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    /// Worst `|adjoint - fd| / max(|adjoint|, |fd|)` over the components.
    pub max_relative_error: f64,
    /// Worst `|adjoint - fd|`.
    pub max_absolute_error: f64,
    /// Largest `|adjoint|` among the checked components.
    pub gradient_scale: f64,
    pub components: Vec<ComponentCheck>,
}

/// Compares `k |K| g_{i,K}` with central differences of the discrete cost at
/// randomly chosen components `(i, K)`.
pub fn gradient_fd_check(
    problem: &ManufacturedProblem,
    cfg: &GradCheckConfig,
) -> Result<GradCheckReport> {
    if cfg.components == 0 {
        return Err(Error::InvalidParameter(
            "need at least one component".into(),
        ));
    }
    if !(cfg.eps > 0.0 && cfg.eps.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "eps must be positive, got {}",
            cfg.eps
        )));
    }
    let mesh = build_lshape_mesh(cfg.n)?;
    let grid = TimeGrid::new(problem.t_final, cfg.steps)?;
    let discrete = problem.discretize(mesh, grid, StepSolver::Cholesky)?;
    let mesh = discrete.system.mesh();
    let k = discrete.system.grid().k();
    let areas = discrete.system.triangle_areas();
    let (steps, tris) = (cfg.steps, mesh.num_triangles());

    let u = match cfg.at {
        ProbePoint::Zero => ControlField::zeros(steps, tris),
        ProbePoint::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (a, b) = (problem.bounds.lower(), problem.bounds.upper());
            ControlField::from_fn(steps, tris, |_, _| rng.random_range(a..=b))
        }
    };
    let y = discrete.state(&u)?;
    let z = discrete.costate(&y)?;
    let g = reduced_gradient(&u, &z, mesh, problem.alpha)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut checks = Vec::with_capacity(cfg.components);
    for _ in 0..cfg.components {
        let i = rng.random_range(1..=steps);
        let t = rng.random_range(0..tris);
        let mut up = u.clone();
        up.set(i, t, u.get(i, t) + cfg.eps);
        let mut down = u.clone();
        down.set(i, t, u.get(i, t) - cfg.eps);
        let fd = (discrete.reduced_cost(&up, problem.alpha)?
            - discrete.reduced_cost(&down, problem.alpha)?)
            / (2.0 * cfg.eps);
        let adjoint = k * areas[t] * g.get(i, t);
        let scale = adjoint.abs().max(fd.abs()).max(f64::MIN_POSITIVE);
        checks.push(ComponentCheck {
            interval: i,
            triangle: t,
            adjoint,
            finite_difference: fd,
            relative_error: (adjoint - fd).abs() / scale,
        });
    }
    Ok(GradCheckReport {
        max_relative_error: checks.iter().map(|c| c.relative_error).fold(0.0, f64::max),
        max_absolute_error: checks
            .iter()
            .map(|c| (c.adjoint - c.finite_difference).abs())
            .fold(0.0, f64::max),
        gradient_scale: checks.iter().map(|c| c.adjoint.abs()).fold(0.0, f64::max),
        components: checks,
    })
}
