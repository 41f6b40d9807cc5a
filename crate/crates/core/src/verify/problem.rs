use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::control::{box_project, Bounds, DiscreteProblem};
use crate::dynamics::{ParabolicSystem, StepSolver, TrackingTarget};
use crate::error::{Error, Result};
use crate::fem::{l2_project_with, ConjugateGradient, QuadratureRule};
use crate::measure::{MeasureData, SpaceTimeFn, TimeGrid, TimeMeasure};
use crate::mesh::{Mesh, Point2};

/// Built-in problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProblemId {
    /// Dirac-in-time data on the L-shape with a known solution.
    #[default]
    LshapeMeasure,
    /// Smooth data and no atoms; no closed-form solution.
    Smooth,
}

impl ProblemId {
    pub fn name(self) -> &'static str {
        match self {
            Self::LshapeMeasure => "lshape-measure",
            Self::Smooth => "smooth",
        }
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lshape-measure" => Ok(Self::LshapeMeasure),
            "smooth" => Ok(Self::Smooth),
            other => Err(Error::InvalidParameter(format!(
                "unknown problem `{other}` (expected lshape-measure or smooth)"
            ))),
        }
    }
}

/// Closed-form optimal triplet.
#[derive(Clone)]
pub struct ExactSolution {
    pub y: SpaceTimeFn,
    pub z: SpaceTimeFn,
    pub u: SpaceTimeFn,
}

/// Problem data plus, when known, the exact solution.
#[derive(Clone)]
pub struct ManufacturedProblem {
    pub id: ProblemId,
    pub t_final: f64,
    pub alpha: f64,
    pub bounds: Bounds,
    pub measure: MeasureData,
    pub yd: SpaceTimeFn,
    pub y0: Arc<dyn Fn(Point2) -> f64 + Send + Sync>,
    pub exact: Option<ExactSolution>,
}

impl fmt::Debug for ManufacturedProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ManufacturedProblem")
            .field("id", &self.id)
            .field("t_final", &self.t_final)
            .field("alpha", &self.alpha)
            .field("bounds", &self.bounds)
            .field("measure", &self.measure)
            .field("exact", &self.exact.is_some())
            .finish_non_exhaustive()
    }
}

/// `sin(pi |x|^2)`.
fn bump(p: Point2) -> f64 {
    (PI * p.norm_sq()).sin()
}

/// `Laplacian of sin(pi |x|^2) = 4 pi cos(pi r^2) - 4 pi^2 r^2 sin(pi r^2)`.
fn bump_laplacian(p: Point2) -> f64 {
    let r2 = p.norm_sq();
    4.0 * PI * (PI * r2).cos() - 4.0 * PI * PI * r2 * (PI * r2).sin()
}

/// Time profile of the state: `t^2` before 0.5, `t^2 + 2t` from 0.5 on.
fn state_profile(t: f64) -> f64 {
    if t < 0.5 {
        t * t
    } else {
        t * t + 2.0 * t
    }
}

/// Classical derivative of [`state_profile`] away from the jump.
fn state_profile_rate(t: f64) -> f64 {
    if t < 0.5 {
        2.0 * t
    } else {
        2.0 * t + 2.0
    }
}

impl ManufacturedProblem {
    pub fn by_id(id: ProblemId) -> Self {
        match id {
            ProblemId::LshapeMeasure => Self::lshape_measure(),
            ProblemId::Smooth => Self::smooth(),
        }
    }

    /// The L-shape example: `y = sin(pi|x|^2) g(t)` with a unit jump of `g` at
    /// `t = 0.5` driven by a Dirac atom, `z = sin(pi|x|^2) t`,
    /// `u = P_[u_a,u_b](-z)`, `alpha = 1`, `T = 1`.
    pub fn lshape_measure() -> Self {
        let bounds = Bounds::default();
        let u_exact = move |p: Point2, t: f64| box_project(-bump(p) * t, bounds);
        let atom = TimeMeasure::new(|p, _| bump(p)).with_atom(0.5, 1.0);
        let smooth = TimeMeasure::new(move |p, t| {
            -u_exact(p, t) + bump(p) * state_profile_rate(t) - bump_laplacian(p) * state_profile(t)
        })
        .with_density(|_| 1.0);
        Self {
            id: ProblemId::LshapeMeasure,
            t_final: 1.0,
            alpha: 1.0,
            bounds,
            measure: MeasureData::new(vec![atom, smooth]),
            yd: Arc::new(|p, t| bump(p) + bump_laplacian(p) * t + bump(p) * state_profile(t)),
            y0: Arc::new(|_| 0.0),
            exact: Some(ExactSolution {
                y: Arc::new(|p, t| bump(p) * state_profile(t)),
                z: Arc::new(|p, t| bump(p) * t),
                u: Arc::new(u_exact),
            }),
        }
    }

    /// Smooth source, smooth target, zero initial state.
    pub fn smooth() -> Self {
        let source = TimeMeasure::new(|p, t| (PI * p.x).sin() * (PI * p.y).sin() * (1.0 + t))
            .with_density(|t| 1.0 + 0.5 * t);
        Self {
            id: ProblemId::Smooth,
            t_final: 1.0,
            alpha: 1.0,
            bounds: Bounds::default(),
            measure: source.into(),
            yd: Arc::new(|p, t| 0.5 * p.x * p.y * (1.0 - t) + 0.1 * t),
            y0: Arc::new(|p| 0.2 * (PI * p.x).sin() * (PI * p.y).sin()),
            exact: None,
        }
    }

    /// Operators, loads and initial state on one (mesh, grid) level. Data
    /// loads use the degree-5 rule; `y0` is the L2 projection of the initial
    /// datum.
    pub fn discretize(
        &self,
        mesh: Mesh,
        grid: TimeGrid,
        solver: StepSolver,
    ) -> Result<DiscreteProblem> {
        if (grid.t_final() - self.t_final).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "time grid ends at {}, problem at {}",
                grid.t_final(),
                self.t_final
            )));
        }
        let rule = QuadratureRule::degree5();
        let measure_loads = self.measure.interval_loads(&mesh, &grid, &rule)?;
        let yd = self.yd.clone();
        let target = TrackingTarget::new(&mesh, &grid, &move |p, t| yd(p, t), &rule);
        let y0 = l2_project_with(
            &mesh,
            |p| (self.y0)(p),
            &rule,
            &ConjugateGradient::default(),
        )?;
        let system = ParabolicSystem::new(mesh, grid, solver)?;
        Ok(DiscreteProblem {
            system,
            measure_loads,
            target,
            y0,
        })
    }
}
