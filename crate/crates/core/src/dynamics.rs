//! Backward-Euler sweeps: the state forward in time, the co-state backward.
//!
//! Both recurrences share the matrix `M/k + K` restricted to interior
//! vertices. It is factored once per [`ParabolicSystem`] and reused at every
//! step.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::control::ControlField;
use crate::error::{Error, Result};
use crate::fem::{
    assemble_mass, assemble_stiffness, map_point, ConjugateGradient, NodalField, QuadratureRule,
    SkylineCholesky, SparseMatrix,
};
use crate::measure::{MeasureData, TimeGrid, GAUSS4};
use crate::mesh::{Mesh, Point2};

/// Interval mean `(1/k) int_{I_i} f(t) dt` by 4-point Gauss.
pub fn pk_average(f: impl Fn(f64) -> f64, grid: &TimeGrid, i: usize) -> f64 {
    let sum: f64 = grid
        .gauss_points(i, &GAUSS4)
        .into_iter()
        .map(|(t, w)| w * f(t))
        .sum();
    sum / grid.k()
}

/// Nodal fields at time levels `0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    levels: Vec<NodalField>,
}

impl Trajectory {
    pub fn new(levels: Vec<NodalField>) -> Self {
        Self { levels }
    }

    pub fn zeros(mesh: &Mesh, grid: &TimeGrid) -> Self {
        Self {
            levels: vec![NodalField::zeros(mesh); grid.steps() + 1],
        }
    }

    pub fn level(&self, i: usize) -> &NodalField {
        &self.levels[i]
    }

    pub fn levels(&self) -> &[NodalField] {
        &self.levels
    }

    /// Number of stored levels (`N + 1`).
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// CSV with columns `level,vertex_index,x,y,value`.
    pub fn to_csv(&self, mesh: &Mesh) -> String {
        let mut out = String::from("level,vertex_index,x,y,value\n");
        for (level, field) in self.levels.iter().enumerate() {
            for (v, (p, value)) in mesh.vertices().iter().zip(field.iter()).enumerate() {
                let _ = writeln!(out, "{level},{v},{:.6e},{:.6e},{:.6e}", p.x, p.y, value);
            }
        }
        out
    }
}

/// How the per-step linear systems are solved.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum StepSolver {
    /// Profile Cholesky factorization, computed once.
    #[default]
    Cholesky,
    /// Conjugate gradients with the given settings, warm-started from the
    /// previous level.
    Cg(ConjugateGradient),
}

#[derive(Debug, Clone)]
enum Backend {
    Cholesky(SkylineCholesky),
    Cg(ConjugateGradient),
}

/// Mesh, time grid and the discrete operators of the heat equation with
/// homogeneous Dirichlet data.
#[derive(Debug, Clone)]
pub struct ParabolicSystem {
    mesh: Mesh,
    grid: TimeGrid,
    mass: SparseMatrix,
    stiffness: SparseMatrix,
    free: Vec<usize>,
    step_matrix: SparseMatrix,
    backend: Backend,
    areas: Vec<f64>,
}

impl ParabolicSystem {
    pub fn new(mesh: Mesh, grid: TimeGrid, solver: StepSolver) -> Result<Self> {
        let mass = assemble_mass(&mesh)?;
        let stiffness = assemble_stiffness(&mesh)?;
        let full = mass.linear_combination(1.0 / grid.k(), &stiffness, 1.0)?;
        let free = mesh.free_vertices();
        let step_matrix = full.principal_submatrix(&free);
        let backend = match solver {
            StepSolver::Cholesky => Backend::Cholesky(SkylineCholesky::factor(&step_matrix)?),
            StepSolver::Cg(cg) => Backend::Cg(cg),
        };
        let areas = mesh.triangle_areas();
        Ok(Self {
            mesh,
            grid,
            mass,
            stiffness,
            free,
            step_matrix,
            backend,
            areas,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn mass(&self) -> &SparseMatrix {
        &self.mass
    }

    pub fn stiffness(&self) -> &SparseMatrix {
        &self.stiffness
    }

    /// `M/k + K` on the interior vertices.
    pub fn step_matrix(&self) -> &SparseMatrix {
        &self.step_matrix
    }

    pub fn free_vertices(&self) -> &[usize] {
        &self.free
    }

    pub fn triangle_areas(&self) -> &[f64] {
        &self.areas
    }

    /// One implicit step: solves `(M/k + K) x = M/k prev + source` on the
    /// interior vertices; boundary values of the result are zero.
    pub fn advance(&self, prev: &[f64], source: &[f64]) -> Result<NodalField> {
        let n = self.mesh.num_vertices();
        if prev.len() != n || source.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "step inputs of length {} and {} for {n} vertices",
                prev.len(),
                source.len()
            )));
        }
        let m_prev = self.mass.mul_vec(prev);
        let inv_k = 1.0 / self.grid.k();
        let rhs: Vec<f64> = self
            .free
            .iter()
            .map(|&v| inv_k * m_prev[v] + source[v])
            .collect();
        let x = match &self.backend {
            Backend::Cholesky(chol) => chol.solve(&rhs),
            Backend::Cg(cg) => {
                let guess: Vec<f64> = self.free.iter().map(|&v| prev[v]).collect();
                cg.solve(&self.step_matrix, &rhs, Some(&guess))?.x
            }
        };
        let mut full = vec![0.0; n];
        for (&v, x) in self.free.iter().zip(x) {
            full[v] = x;
        }
        Ok(full.into())
    }

    /// `(u^i, phi_j)` for a control constant on each triangle: `u_K |K| / 3`
    /// per vertex of `K`.
    pub fn control_load(&self, u: &ControlField, i: usize) -> Vec<f64> {
        let mut load = vec![0.0; self.mesh.num_vertices()];
        for ((tri, &area), &value) in self
            .mesh
            .triangles()
            .iter()
            .zip(&self.areas)
            .zip(u.interval(i))
        {
            let share = value * area / 3.0;
            for v in tri.vertices() {
                load[v] += share;
            }
        }
        load
    }

    fn check_control(&self, u: &ControlField) -> Result<()> {
        if u.steps() != self.grid.steps() || u.triangles() != self.mesh.num_triangles() {
            return Err(Error::ShapeMismatch(format!(
                "control is {}x{}, system needs {}x{}",
                u.steps(),
                u.triangles(),
                self.grid.steps(),
                self.mesh.num_triangles()
            )));
        }
        Ok(())
    }
}

/// Forward sweep `(M/k + K) y^i = M/k y^{i-1} + <mu, .>_{I_i} + (u^i, .)`.
///
/// `measure_loads[i - 1]` is the measure pairing on interval `i`; `y0` is
/// normally the L2 projection of the initial datum.
pub fn solve_state(
    system: &ParabolicSystem,
    measure_loads: &[Vec<f64>],
    u: &ControlField,
    y0: &NodalField,
) -> Result<Trajectory> {
    let n_steps = system.grid.steps();
    if measure_loads.len() != n_steps {
        return Err(Error::ShapeMismatch(format!(
            "{} measure loads for {n_steps} intervals",
            measure_loads.len()
        )));
    }
    system.check_control(u)?;
    let mut levels = Vec::with_capacity(n_steps + 1);
    levels.push(y0.clone());
    for i in 1..=n_steps {
        let mut source = system.control_load(u, i);
        source
            .iter_mut()
            .zip(&measure_loads[i - 1])
            .for_each(|(s, m)| *s += m);
        let next = system.advance(&levels[i - 1], &source)?;
        levels.push(next);
    }
    Ok(Trajectory::new(levels))
}

/// Computes the measure loads and runs [`solve_state`].
pub fn solve_state_with_measure(
    system: &ParabolicSystem,
    mu: &MeasureData,
    rule: &QuadratureRule,
    u: &ControlField,
    y0: &NodalField,
) -> Result<Trajectory> {
    let loads = mu.interval_loads(&system.mesh, &system.grid, rule)?;
    solve_state(system, &loads, u, y0)
}

/// The desired state averaged over each interval, as the data the co-state
/// and the cost functional need: the loads `(P_k^i y_d, phi_j)` and the
/// squared norms `||P_k^i y_d||^2`, both with the same spatial rule.
#[derive(Debug, Clone)]
pub struct TrackingTarget {
    loads: Vec<Vec<f64>>,
    norms_sq: Vec<f64>,
}

impl TrackingTarget {
    pub fn new(
        mesh: &Mesh,
        grid: &TimeGrid,
        yd: &(dyn Fn(Point2, f64) -> f64 + Sync),
        rule: &QuadratureRule,
    ) -> Self {
        let per_interval: Vec<(Vec<f64>, f64)> = (1..=grid.steps())
            .into_par_iter()
            .map(|i| {
                let mut load = vec![0.0; mesh.num_vertices()];
                let mut norm_sq = 0.0;
                for (t, tri) in mesh.triangles().iter().enumerate() {
                    let area = mesh.triangle_area(t);
                    let v = tri.vertices();
                    for (bary, w) in rule.iter() {
                        let p = map_point(mesh, t, bary);
                        let avg = pk_average(|s| yd(p, s), grid, i);
                        let aw = area * w;
                        norm_sq += aw * avg * avg;
                        for a in 0..3 {
                            load[v[a]] += aw * avg * bary[a];
                        }
                    }
                }
                (load, norm_sq)
            })
            .collect();
        let (loads, norms_sq) = per_interval.into_iter().unzip();
        Self { loads, norms_sq }
    }

    /// All-zero target for `y_d = 0`.
    pub fn zero(mesh: &Mesh, grid: &TimeGrid) -> Self {
        Self {
            loads: vec![vec![0.0; mesh.num_vertices()]; grid.steps()],
            norms_sq: vec![0.0; grid.steps()],
        }
    }

    /// `(P_k^i y_d, phi_j)` for interval `i` (1-based).
    pub fn load(&self, i: usize) -> &[f64] {
        &self.loads[i - 1]
    }

    pub fn norm_sq(&self, i: usize) -> f64 {
        self.norms_sq[i - 1]
    }

    pub fn steps(&self) -> usize {
        self.loads.len()
    }
}

/// Backward sweep `(M/k + K) z^{i-1} = M/k z^i + M y^i - (P_k^i y_d, .)`
/// from `z^N = 0`.
pub fn solve_costate(
    system: &ParabolicSystem,
    y: &Trajectory,
    target: &TrackingTarget,
) -> Result<Trajectory> {
    let n_steps = system.grid.steps();
    if y.len() != n_steps + 1 || target.steps() != n_steps {
        return Err(Error::ShapeMismatch(format!(
            "state has {} levels and target {} intervals for {n_steps} steps",
            y.len(),
            target.steps()
        )));
    }
    let n = system.mesh.num_vertices();
    let mut levels = vec![NodalField::zeros(&system.mesh); n_steps + 1];
    for i in (1..=n_steps).rev() {
        let mut source = system.mass.mul_vec(y.level(i));
        source
            .iter_mut()
            .zip(target.load(i))
            .for_each(|(s, l)| *s -= l);
        debug_assert_eq!(source.len(), n);
        levels[i - 1] = system.advance(&levels[i], &source)?;
    }
    Ok(Trajectory::new(levels))
}
