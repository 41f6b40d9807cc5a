use rayon::prelude::*;

use crate::control::ControlField;
use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::fem::{map_point, NodalField, QuadratureRule};
use crate::measure::{TimeGrid, GAUSS2};
use crate::mesh::{Mesh, Point2};

/// How a discrete quantity is read as a function on `I_i x Omega`.
#[derive(Debug, Clone, Copy)]
pub enum Discrete<'a> {
    /// P1 state: level `i` on interval `i`.
    State(&'a Trajectory),
    /// P1 co-state: level `i - 1` on interval `i`.
    Costate(&'a Trajectory),
    /// P0 control.
    Control(&'a ControlField),
}

impl Discrete<'_> {
    fn check(&self, mesh: &Mesh, grid: &TimeGrid) -> Result<()> {
        let ok = match self {
            Discrete::State(tr) | Discrete::Costate(tr) => {
                tr.len() == grid.steps() + 1
                    && tr.levels().iter().all(|l| l.len() == mesh.num_vertices())
            }
            Discrete::Control(u) => {
                u.steps() == grid.steps() && u.triangles() == mesh.num_triangles()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(
                "discrete field does not match mesh and grid".into(),
            ))
        }
    }

    fn value(&self, mesh: &Mesh, i: usize, t: usize, bary: &[f64; 3]) -> f64 {
        match self {
            Discrete::State(tr) => tr.level(i).eval_in(mesh, t, bary),
            Discrete::Costate(tr) => tr.level(i - 1).eval_in(mesh, t, bary),
            Discrete::Control(u) => u.get(i, t),
        }
    }
}

/// `||discrete - exact||_{L2(0,T; L2(Omega))}` with 2-point Gauss in time on
/// each interval and the degree-5 rule in space.
pub fn l2l2_error(
    discrete: Discrete<'_>,
    exact: &(dyn Fn(Point2, f64) -> f64 + Sync),
    mesh: &Mesh,
    grid: &TimeGrid,
) -> Result<f64> {
    discrete.check(mesh, grid)?;
    let rule = QuadratureRule::degree5();
    let per_interval: Vec<f64> = (1..=grid.steps())
        .into_par_iter()
        .map(|i| {
            let times = grid.gauss_points(i, &GAUSS2);
            let mut acc = 0.0;
            for t in 0..mesh.num_triangles() {
                let area = mesh.triangle_area(t);
                for (bary, w) in rule.iter() {
                    let p = map_point(mesh, t, bary);
                    let d = discrete.value(mesh, i, t, bary);
                    let s: f64 = times
                        .iter()
                        .map(|&(tau, wt)| wt * (d - exact(p, tau)).powi(2))
                        .sum();
                    acc += area * w * s;
                }
            }
            acc
        })
        .collect();
    Ok(per_interval.iter().sum::<f64>().sqrt())
}

/// `||field - exact||_{L2(Omega)}` by the degree-5 rule.
pub fn l2_error(field: &NodalField, exact: impl Fn(Point2) -> f64, mesh: &Mesh) -> f64 {
    let rule = QuadratureRule::degree5();
    let mut acc = 0.0;
    for t in 0..mesh.num_triangles() {
        let area = mesh.triangle_area(t);
        for (bary, w) in rule.iter() {
            let diff = field.eval_in(mesh, t, bary) - exact(map_point(mesh, t, bary));
            acc += area * w * diff * diff;
        }
    }
    acc.sqrt()
}

/// `||y^N - y(., T)||_{L2(Omega)}`.
pub fn final_time_error(
    y: &Trajectory,
    exact: &(dyn Fn(Point2, f64) -> f64 + Sync),
    mesh: &Mesh,
    t_final: f64,
) -> Result<f64> {
    let last = y
        .levels()
        .last()
        .ok_or_else(|| Error::ShapeMismatch("empty trajectory".into()))?;
    Ok(l2_error(last, |p| exact(p, t_final), mesh))
}

/// Empirical order of convergence `log(E1/E2) / log(h1/h2)`.
pub fn eoc(e1: f64, e2: f64, h1: f64, h2: f64) -> Result<f64> {
    if !(e1 > 0.0 && e2 > 0.0 && h1 > 0.0 && h2 > 0.0) {
        return Err(Error::Domain(format!(
            "convergence order needs positive errors and mesh sizes, got E = ({e1}, {e2}), h = ({h1}, {h2})"
        )));
    }
    if h1 <= h2 {
        return Err(Error::Domain(format!("need h1 > h2, got {h1} and {h2}")));
    }
    Ok((e1 / e2).ln() / (h1 / h2).ln())
}
