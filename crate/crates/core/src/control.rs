//! Piecewise-constant controls with box constraints and the projected
//! gradient method for the reduced problem.

use std::fmt::Write as _;

use crate::dynamics::{solve_costate, solve_state, ParabolicSystem, TrackingTarget, Trajectory};
use crate::error::{Error, Result};
use crate::fem::{dot, NodalField};
use crate::mesh::Mesh;

/// Pointwise bounds `u_a <= u <= u_b` with `u_a < u_b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    lower: f64,
    upper: f64,
}

impl Bounds {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if lower.is_nan() || upper.is_nan() || lower >= upper {
            return Err(Error::InvalidParameter(format!(
                "control bounds need u_a < u_b, got u_a = {lower}, u_b = {upper}"
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }
}

impl Default for Bounds {
    fn default() -> Self {
        Self {
            lower: -0.5,
            upper: 0.1,
        }
    }
}

/// `min(u_b, max(u_a, v))`.
pub fn box_project(v: f64, bounds: Bounds) -> f64 {
    bounds.upper.min(bounds.lower.max(v))
}

/// One value per (time interval, triangle). Intervals are 1-based in the
/// accessors, matching `I_i = (t_{i-1}, t_i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlField {
    steps: usize,
    triangles: usize,
    values: Vec<f64>,
}

impl ControlField {
    pub fn zeros(steps: usize, triangles: usize) -> Self {
        Self {
            steps,
            triangles,
            values: vec![0.0; steps * triangles],
        }
    }

    /// `f(i, t)` with `i` in `1..=steps` and `t` a triangle index.
    pub fn from_fn(steps: usize, triangles: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let values = (1..=steps)
            .flat_map(|i| (0..triangles).map(move |t| (i, t)))
            .map(|(i, t)| f(i, t))
            .collect();
        Self {
            steps,
            triangles,
            values,
        }
    }

    pub fn from_values(steps: usize, triangles: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != steps * triangles {
            return Err(Error::ShapeMismatch(format!(
                "{} control values for {steps} intervals x {triangles} triangles",
                values.len()
            )));
        }
        Ok(Self {
            steps,
            triangles,
            values,
        })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn triangles(&self) -> usize {
        self.triangles
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn get(&self, i: usize, t: usize) -> f64 {
        self.values[(i - 1) * self.triangles + t]
    }

    pub fn set(&mut self, i: usize, t: usize, v: f64) {
        self.values[(i - 1) * self.triangles + t] = v;
    }

    pub fn interval(&self, i: usize) -> &[f64] {
        &self.values[(i - 1) * self.triangles..i * self.triangles]
    }

    fn same_shape(&self, other: &ControlField) -> Result<()> {
        if self.steps != other.steps || self.triangles != other.triangles {
            return Err(Error::ShapeMismatch(format!(
                "control fields {}x{} and {}x{}",
                self.steps, self.triangles, other.steps, other.triangles
            )));
        }
        Ok(())
    }

    /// `sum_i k sum_K |K| u_{i,K}^2`.
    pub fn l2l2_norm_sq(&self, k: f64, areas: &[f64]) -> f64 {
        self.values
            .chunks(self.triangles.max(1))
            .map(|row| k * row.iter().zip(areas).map(|(u, a)| a * u * u).sum::<f64>())
            .sum()
    }

    /// CSV with columns `interval,triangle,centroid_x,centroid_y,value`.
    pub fn to_csv(&self, mesh: &Mesh) -> String {
        let mut out = String::from("interval,triangle,centroid_x,centroid_y,value\n");
        for i in 1..=self.steps {
            for (t, v) in self.interval(i).iter().enumerate() {
                let c = mesh.centroid(t);
                let _ = writeln!(out, "{i},{t},{:.6e},{:.6e},{:.6e}", c.x, c.y, v);
            }
        }
        out
    }
}

/// Exact mean of a P1 field over each triangle: `(v0 + v1 + v2) / 3`.
pub fn cell_average(field: &[f64], mesh: &Mesh) -> Vec<f64> {
    mesh.triangles()
        .iter()
        .map(|t| {
            let [a, b, c] = t.vertices();
            (field[a] + field[b] + field[c]) / 3.0
        })
        .collect()
}

/// Settings of the projected gradient method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub alpha: f64,
    pub bounds: Bounds,
    /// Gradient step; `None` means `1 / alpha`.
    pub step: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            bounds: Bounds::default(),
            step: None,
            tol: 1e-8,
            max_iter: 500,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if let Some(step) = self.step {
            if !(step > 0.0 && step.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "step must be positive, got {step}"
                )));
            }
        }
        Bounds::new(self.bounds.lower, self.bounds.upper)?;
        Ok(())
    }

    pub fn effective_step(&self) -> f64 {
        self.step.unwrap_or(1.0 / self.alpha)
    }
}

/// Everything the reduced problem needs on one discretization level.
#[derive(Debug, Clone)]
pub struct DiscreteProblem {
    pub system: ParabolicSystem,
    /// `<mu, phi_j>_{I_i}` for `i = 1..=N`, stored from index 0.
    pub measure_loads: Vec<Vec<f64>>,
    pub target: TrackingTarget,
    pub y0: NodalField,
}

impl DiscreteProblem {
    pub fn zero_control(&self) -> ControlField {
        ControlField::zeros(
            self.system.grid().steps(),
            self.system.mesh().num_triangles(),
        )
    }

    pub fn state(&self, u: &ControlField) -> Result<Trajectory> {
        solve_state(&self.system, &self.measure_loads, u, &self.y0)
    }

    pub fn costate(&self, y: &Trajectory) -> Result<Trajectory> {
        solve_costate(&self.system, y, &self.target)
    }

    /// Reduced cost `j(u) = J(u, y(u))`.
    pub fn reduced_cost(&self, u: &ControlField, alpha: f64) -> Result<f64> {
        let y = self.state(u)?;
        cost_functional(self, u, &y, alpha)
    }
}

/// `1/2 sum_i k (||y^i - P_k^i y_d||^2 + alpha ||u^i||^2)`.
///
/// The tracking norm is expanded as `y.My - 2 y.(P_k^i y_d, phi) +
/// ||P_k^i y_d||^2`, with the last two terms from the same quadrature the
/// co-state uses.
pub fn cost_functional(
    problem: &DiscreteProblem,
    u: &ControlField,
    y: &Trajectory,
    alpha: f64,
) -> Result<f64> {
    let system = &problem.system;
    let grid = system.grid();
    if y.len() != grid.steps() + 1 {
        return Err(Error::ShapeMismatch(format!(
            "state has {} levels for {} steps",
            y.len(),
            grid.steps()
        )));
    }
    let k = grid.k();
    let mut tracking = 0.0;
    for i in 1..=grid.steps() {
        let yi = y.level(i);
        let my = system.mass().mul_vec(yi);
        let sq = dot(yi, &my) - 2.0 * dot(yi, problem.target.load(i)) + problem.target.norm_sq(i);
        tracking += k * sq;
    }
    let control = alpha * u.l2l2_norm_sq(k, system.triangle_areas());
    Ok(0.5 * (tracking + control))
}

/// `g_{i,K} = alpha u_{i,K} + mean_K(z^{i-1})`, the Riesz representative of
/// the reduced derivative in the `k |K|`-weighted inner product.
pub fn reduced_gradient(
    u: &ControlField,
    z: &Trajectory,
    mesh: &Mesh,
    alpha: f64,
) -> Result<ControlField> {
    if z.len() != u.steps() + 1 || u.triangles() != mesh.num_triangles() {
        return Err(Error::ShapeMismatch(format!(
            "co-state has {} levels and control is {}x{} on a mesh with {} triangles",
            z.len(),
            u.steps(),
            u.triangles(),
            mesh.num_triangles()
        )));
    }
    let mut g = u.clone();
    for i in 1..=u.steps() {
        let avg = cell_average(z.level(i - 1), mesh);
        let row = &mut g.values[(i - 1) * u.triangles..i * u.triangles];
        for (gv, zv) in row.iter_mut().zip(avg) {
            *gv = alpha * *gv + zv;
        }
    }
    Ok(g)
}

/// `max |u - P(u - g)|`; zero exactly at discrete KKT points.
pub fn kkt_residual(u: &ControlField, gradient: &ControlField, bounds: Bounds) -> Result<f64> {
    u.same_shape(gradient)?;
    Ok(u.values
        .iter()
        .zip(&gradient.values)
        .map(|(&u, &g)| (u - box_project(u - g, bounds)).abs())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerReport {
    pub iterations: usize,
    /// Reduced cost at every iterate, starting with `u^0` and ending with
    /// the returned control.
    pub cost_history: Vec<f64>,
    /// `L2(L2)` norms of the control updates.
    pub step_norms: Vec<f64>,
    pub kkt_residual: f64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct OptimizerOutcome {
    pub control: ControlField,
    pub state: Trajectory,
    pub costate: Trajectory,
    pub report: OptimizerReport,
}

/// Projected gradient iteration `u <- P(u - step g)` from `u = 0`, stopped
/// once the `L2(L2)` update norm drops to `tol`. Hitting `max_iter` is not an
/// error: the report says `converged = false`.
pub fn projected_gradient_solve(
    problem: &DiscreteProblem,
    cfg: &OptimizerConfig,
) -> Result<OptimizerOutcome> {
    cfg.validate()?;
    let mesh = problem.system.mesh();
    let k = problem.system.grid().k();
    let areas = problem.system.triangle_areas();
    let step = cfg.effective_step();

    let mut u = problem.zero_control();
    let mut cost_history = Vec::new();
    let mut step_norms = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iter {
        let y = problem.state(&u)?;
        let z = problem.costate(&y)?;
        cost_history.push(cost_functional(problem, &u, &y, cfg.alpha)?);
        let g = reduced_gradient(&u, &z, mesh, cfg.alpha)?;

        let mut next = u.clone();
        for (n, &gv) in next.values.iter_mut().zip(&g.values) {
            *n = box_project(*n - step * gv, cfg.bounds);
        }
        let mut diff = next.clone();
        for (d, &old) in diff.values.iter_mut().zip(&u.values) {
            *d -= old;
        }
        let norm = diff.l2l2_norm_sq(k, areas).sqrt();
        step_norms.push(norm);
        u = next;
        iterations += 1;
        if norm <= cfg.tol {
            converged = true;
            break;
        }
    }

    let state = problem.state(&u)?;
    let costate = problem.costate(&state)?;
    cost_history.push(cost_functional(problem, &u, &state, cfg.alpha)?);
    let g = reduced_gradient(&u, &costate, mesh, cfg.alpha)?;
    let kkt = kkt_residual(&u, &g, cfg.bounds)?;

    Ok(OptimizerOutcome {
        control: u,
        state,
        costate,
        report: OptimizerReport {
            iterations,
            cost_history,
            step_norms,
            kkt_residual: kkt,
            converged,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_lshape_mesh;
    use proptest::prelude::*;

    fn example_bounds() -> Bounds {
        Bounds::new(-0.5, 0.1).unwrap()
    }

    #[test]
    fn box_projection_examples() {
        let b = example_bounds();
        assert_eq!(box_project(-0.3, b), -0.3);
        assert_eq!(box_project(-0.7, b), -0.5);
        assert_eq!(box_project(0.5, b), 0.1);
    }

    #[test]
    fn bounds_must_be_ordered() {
        assert!(Bounds::new(0.2, 0.1).is_err());
        assert!(Bounds::new(0.1, 0.1).is_err());
        assert!(Bounds::new(f64::NAN, 0.1).is_err());
    }

    proptest! {
        #[test]
        fn box_projection_is_idempotent_and_nonexpansive(a in -10.0..10.0f64, b in -10.0..10.0f64) {
            let bounds = example_bounds();
            let pa = box_project(a, bounds);
            prop_assert_eq!(box_project(pa, bounds), pa);
            prop_assert!((pa - box_project(b, bounds)).abs() <= (a - b).abs());
            prop_assert!((bounds.lower()..=bounds.upper()).contains(&pa));
        }
    }

    #[test]
    fn cell_average_examples() {
        let mesh = build_lshape_mesh(4).unwrap();
        let c = vec![2.5; mesh.num_vertices()];
        assert!(cell_average(&c, &mesh).iter().all(|&v| v == 2.5));

        let f: Vec<f64> = mesh.vertices().iter().map(|p| p.x).collect();
        let g: Vec<f64> = mesh.vertices().iter().map(|p| p.y * p.y).collect();
        let combo: Vec<f64> = f.iter().zip(&g).map(|(a, b)| 2.0 * a - 3.0 * b).collect();
        let (af, ag, ac) = (
            cell_average(&f, &mesh),
            cell_average(&g, &mesh),
            cell_average(&combo, &mesh),
        );
        for t in 0..mesh.num_triangles() {
            assert!((ac[t] - (2.0 * af[t] - 3.0 * ag[t])).abs() < 1e-14);
            assert!((af[t] - mesh.centroid(t).x).abs() < 1e-15);
        }
    }

    #[test]
    fn kkt_residual_examples() {
        let b = example_bounds();
        let u = ControlField::from_values(1, 3, vec![-0.2, 0.1, -0.5]).unwrap();
        // g = u - (-z), so u = P(-z) at alpha = 1 when g matches.
        let g = ControlField::from_values(1, 3, vec![0.0, -0.4, 0.3]).unwrap();
        assert!(kkt_residual(&u, &g, b).unwrap() < 1e-12);
        let mut perturbed = u.clone();
        perturbed.set(1, 0, -0.2 + 0.01);
        let mut g2 = g.clone();
        g2.set(1, 0, 0.01);
        assert!((kkt_residual(&perturbed, &g2, b).unwrap() - 0.01).abs() < 1e-15);
    }

    #[test]
    fn control_norm_and_csv() {
        let mesh = build_lshape_mesh(2).unwrap();
        let u = ControlField::from_fn(2, mesh.num_triangles(), |_, _| 1.0);
        assert!((u.l2l2_norm_sq(0.5, &mesh.triangle_areas()) - 0.75).abs() < 1e-15);
        let csv = u.to_csv(&mesh);
        assert!(csv.starts_with("interval,triangle,centroid_x,centroid_y,value\n1,0,"));
        assert_eq!(csv.lines().count(), 1 + 2 * 6);
    }

    #[test]
    fn config_validation() {
        assert!(OptimizerConfig::default().validate().is_ok());
        let bad = OptimizerConfig {
            alpha: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = OptimizerConfig {
            tol: -1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert_eq!(
            OptimizerConfig {
                alpha: 4.0,
                ..Default::default()
            }
            .effective_step(),
            0.25
        );
    }
}
