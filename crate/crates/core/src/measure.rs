//! Time grids and measure-valued data `mu = sigma * tau`, where `tau` is a
//! Borel measure on `[0, T]` made of Dirac atoms and a density.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::{assemble_load, QuadratureRule};
use crate::mesh::{Mesh, Point2};

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub(crate) const GAUSS2: [(f64, f64); 2] = [
    (-0.577_350_269_189_625_8, 1.0),
    (0.577_350_269_189_625_8, 1.0),
];

pub(crate) const GAUSS4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
    (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
];

/// Uniform partition of `[0, T]` into `N` intervals `I_i = (t_{i-1}, t_i]`,
/// `i = 1..=N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_final: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(t_final: f64, steps: usize) -> Result<Self> {
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "final time must be positive, got {t_final}"
            )));
        }
        if steps == 0 {
            return Err(Error::InvalidParameter(
                "need at least one time step".into(),
            ));
        }
        Ok(Self { t_final, steps })
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn k(&self) -> f64 {
        self.t_final / self.steps as f64
    }

    /// `t_i`; exact at both ends.
    pub fn node(&self, i: usize) -> f64 {
        if i == self.steps {
            self.t_final
        } else {
            self.t_final * i as f64 / self.steps as f64
        }
    }

    /// Endpoints `(t_{i-1}, t_i)` of interval `i` (1-based).
    pub fn interval(&self, i: usize) -> (f64, f64) {
        assert!(
            (1..=self.steps).contains(&i),
            "interval {i} out of 1..={}",
            self.steps
        );
        (self.node(i - 1), self.node(i))
    }

    /// The interval containing `t` under the right-closed convention; `t = 0`
    /// belongs to the first interval. `None` outside `[0, T]`.
    pub fn interval_containing(&self, t: f64) -> Option<usize> {
        if !(0.0..=self.t_final).contains(&t) {
            return None;
        }
        if t == 0.0 {
            return Some(1);
        }
        let guess = ((t / self.t_final) * self.steps as f64).ceil() as usize;
        let mut i = guess.clamp(1, self.steps);
        while i > 1 && t <= self.node(i - 1) {
            i -= 1;
        }
        while i < self.steps && t > self.node(i) {
            i += 1;
        }
        Some(i)
    }

    /// Gauss points `(t, weight)` on interval `i`; weights sum to `k`.
    pub fn gauss_points(&self, i: usize, rule: &[(f64, f64)]) -> Vec<(f64, f64)> {
        let (a, b) = self.interval(i);
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        rule.iter()
            .map(|&(x, w)| (mid + half * x, half * w))
            .collect()
    }
}

/// Closed-form spatial-temporal profile `sigma(x, t)`.
pub type SpaceTimeFn = Arc<dyn Fn(Point2, f64) -> f64 + Send + Sync>;
/// Closed-form function of time.
pub type TimeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub time: f64,
    pub weight: f64,
}

/// `mu = sigma(x, t) * tau`, with `tau = sum_j w_j delta(t - t_j) + d(t) dt`.
#[derive(Clone)]
pub struct TimeMeasure {
    atoms: Vec<Atom>,
    density: Option<TimeFn>,
    sigma: SpaceTimeFn,
}

impl fmt::Debug for TimeMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TimeMeasure")
            .field("atoms", &self.atoms)
            .field("density", &self.density.is_some())
            .finish_non_exhaustive()
    }
}

impl TimeMeasure {
    /// A measure with profile `sigma` and, so far, no mass.
    pub fn new(sigma: impl Fn(Point2, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            atoms: Vec::new(),
            density: None,
            sigma: Arc::new(sigma),
        }
    }

    pub fn zero() -> Self {
        Self::new(|_, _| 0.0)
    }

    pub fn with_atom(mut self, time: f64, weight: f64) -> Self {
        self.atoms.push(Atom { time, weight });
        self
    }

    pub fn with_density(mut self, density: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.density = Some(Arc::new(density));
        self
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn sigma(&self, p: Point2, t: f64) -> f64 {
        (self.sigma)(p, t)
    }

    pub fn validate(&self, t_final: f64) -> Result<()> {
        for a in &self.atoms {
            if !(0.0..=t_final).contains(&a.time) {
                return Err(Error::InvalidMeasure(format!(
                    "atom at t = {} lies outside [0, {t_final}]",
                    a.time
                )));
            }
            if !a.weight.is_finite() {
                return Err(Error::InvalidMeasure("atom weight must be finite".into()));
            }
        }
        Ok(())
    }

    /// Total variation of `tau` on `[0, t_final]`. The density part uses
    /// 4-point Gauss on 1024 equal cells.
    pub fn total_variation(&self, t_final: f64) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|a| a.weight.abs()).sum();
        let density = self.density.as_ref().map_or(0.0, |d| {
            let cells = 1024;
            let h = t_final / cells as f64;
            (0..cells)
                .map(|c| {
                    let mid = (c as f64 + 0.5) * h;
                    GAUSS4
                        .iter()
                        .map(|&(x, w)| 0.5 * h * w * d(mid + 0.5 * h * x).abs())
                        .sum::<f64>()
                })
                .sum()
        });
        atoms + density
    }

    /// `<mu, phi_j>_{I_i} = (1/k) int_{Omega x I_i} phi_j dmu` for every vertex.
    pub fn load(
        &self,
        mesh: &Mesh,
        grid: &TimeGrid,
        i: usize,
        rule: &QuadratureRule,
    ) -> Result<Vec<f64>> {
        self.validate(grid.t_final())?;
        if !(1..=grid.steps()).contains(&i) {
            return Err(Error::InvalidParameter(format!(
                "interval {i} out of 1..={}",
                grid.steps()
            )));
        }
        let mut out = vec![0.0; mesh.num_vertices()];
        let mut add = |scale: f64, t: f64| {
            if scale == 0.0 {
                return;
            }
            let part = assemble_load(mesh, |p| (self.sigma)(p, t), rule);
            out.iter_mut().zip(part).for_each(|(o, v)| *o += scale * v);
        };
        for a in &self.atoms {
            if grid.interval_containing(a.time) == Some(i) {
                add(a.weight, a.time);
            }
        }
        if let Some(d) = &self.density {
            for (t, w) in grid.gauss_points(i, &GAUSS4) {
                add(w * d(t), t);
            }
        }
        let inv_k = 1.0 / grid.k();
        out.iter_mut().for_each(|v| *v *= inv_k);
        Ok(out)
    }
}

/// Measure pairing for a single interval with the default load rule.
pub fn measure_load(tm: &TimeMeasure, mesh: &Mesh, grid: &TimeGrid, i: usize) -> Result<Vec<f64>> {
    tm.load(mesh, grid, i, &QuadratureRule::default())
}

/// A finite sum of [`TimeMeasure`]s; the pairing is linear, so loads add.
#[derive(Debug, Clone, Default)]
pub struct MeasureData {
    parts: Vec<TimeMeasure>,
}

impl MeasureData {
    pub fn new(parts: Vec<TimeMeasure>) -> Self {
        Self { parts }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn parts(&self) -> &[TimeMeasure] {
        &self.parts
    }

    pub fn validate(&self, t_final: f64) -> Result<()> {
        self.parts.iter().try_for_each(|p| p.validate(t_final))
    }

    pub fn load(
        &self,
        mesh: &Mesh,
        grid: &TimeGrid,
        i: usize,
        rule: &QuadratureRule,
    ) -> Result<Vec<f64>> {
        let mut out = vec![0.0; mesh.num_vertices()];
        for part in &self.parts {
            let l = part.load(mesh, grid, i, rule)?;
            out.iter_mut().zip(l).for_each(|(o, v)| *o += v);
        }
        Ok(out)
    }

    /// Loads for all intervals `1..=N`, indexed from 0. Intervals are
    /// computed in parallel; each result is independent of scheduling.
    pub fn interval_loads(
        &self,
        mesh: &Mesh,
        grid: &TimeGrid,
        rule: &QuadratureRule,
    ) -> Result<Vec<Vec<f64>>> {
        self.validate(grid.t_final())?;
        (1..=grid.steps())
            .into_par_iter()
            .map(|i| self.load(mesh, grid, i, rule))
            .collect()
    }
}

impl From<TimeMeasure> for MeasureData {
    fn from(m: TimeMeasure) -> Self {
        Self { parts: vec![m] }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_lshape_mesh;

    #[test]
    fn grid_nodes_and_membership() {
        let g = TimeGrid::new(1.0, 4).unwrap();
        assert_eq!(g.k(), 0.25);
        assert_eq!(g.node(4), 1.0);
        assert_eq!(g.interval(2), (0.25, 0.5));
        assert_eq!(g.interval_containing(0.0), Some(1));
        assert_eq!(g.interval_containing(0.25), Some(1));
        assert_eq!(g.interval_containing(0.2500001), Some(2));
        assert_eq!(g.interval_containing(0.5), Some(2));
        assert_eq!(g.interval_containing(1.0), Some(4));
        assert_eq!(g.interval_containing(1.5), None);
        assert_eq!(g.interval_containing(-0.1), None);
        let g = TimeGrid::new(1.0, 10).unwrap();
        for i in 1..=10 {
            assert_eq!(g.interval_containing(g.node(i)), Some(i));
        }
    }

    #[test]
    fn invalid_grids() {
        assert!(TimeGrid::new(0.0, 4).is_err());
        assert!(TimeGrid::new(1.0, 0).is_err());
    }

    #[test]
    fn total_variation_examples() {
        assert_eq!(
            TimeMeasure::new(|_, _| 1.0)
                .with_atom(0.5, 1.0)
                .total_variation(1.0),
            1.0
        );
        let two = TimeMeasure::new(|_, _| 1.0)
            .with_atom(0.5, 1.0)
            .with_atom(0.2, -0.5);
        assert_eq!(two.total_variation(1.0), 1.5);
        let dens = TimeMeasure::new(|_, _| 1.0).with_density(|_| 1.0);
        assert!((dens.total_variation(1.0) - 1.0).abs() < 1e-12);
        let signed = TimeMeasure::new(|_, _| 1.0).with_density(|t| t - 0.5);
        assert!((signed.total_variation(1.0) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn dirac_pairing_against_one() {
        let mesh = build_lshape_mesh(4).unwrap();
        let grid = TimeGrid::new(1.0, 4).unwrap();
        let mu = TimeMeasure::new(|_, _| 1.0).with_atom(0.5, 1.0);
        for i in 1..=4 {
            let s: f64 = measure_load(&mu, &mesh, &grid, i).unwrap().iter().sum();
            let expected = if i == 2 { 3.0 } else { 0.0 };
            assert!((s - expected).abs() < 1e-13, "interval {i}: {s}");
        }
    }

    #[test]
    fn unit_density_pairs_to_area() {
        let mesh = build_lshape_mesh(4).unwrap();
        let grid = TimeGrid::new(1.0, 8).unwrap();
        let mu = TimeMeasure::new(|_, _| 1.0).with_density(|_| 1.0);
        for i in 1..=8 {
            let s: f64 = measure_load(&mu, &mesh, &grid, i).unwrap().iter().sum();
            assert!((s - 0.75).abs() < 1e-13);
        }
    }

    #[test]
    fn atom_at_zero_goes_to_first_interval() {
        let mesh = build_lshape_mesh(4).unwrap();
        let grid = TimeGrid::new(1.0, 4).unwrap();
        let mu = TimeMeasure::new(|_, _| 1.0).with_atom(0.0, 1.0);
        let s: f64 = measure_load(&mu, &mesh, &grid, 1).unwrap().iter().sum();
        assert!((s - 3.0).abs() < 1e-13);
    }

    #[test]
    fn zero_measure_gives_zero_loads() {
        let mesh = build_lshape_mesh(4).unwrap();
        let grid = TimeGrid::new(1.0, 4).unwrap();
        let loads = MeasureData::zero()
            .interval_loads(&mesh, &grid, &QuadratureRule::default())
            .unwrap();
        assert_eq!(loads.len(), 4);
        assert!(loads.iter().flatten().all(|&v| v == 0.0));
        let l = measure_load(&TimeMeasure::zero().with_atom(0.3, 2.0), &mesh, &grid, 2).unwrap();
        assert!(l.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn atom_outside_horizon_is_rejected() {
        let mesh = build_lshape_mesh(4).unwrap();
        let grid = TimeGrid::new(1.0, 4).unwrap();
        let mu = TimeMeasure::new(|_, _| 1.0).with_atom(1.5, 1.0);
        assert!(matches!(
            measure_load(&mu, &mesh, &grid, 1),
            Err(Error::InvalidMeasure(_))
        ));
    }

    #[test]
    fn pairing_is_linear_and_sums_to_total_mass() {
        let mesh = build_lshape_mesh(6).unwrap();
        let grid = TimeGrid::new(1.0, 6).unwrap();
        let rule = QuadratureRule::degree5();
        let sigma = |p: Point2, _t: f64| 1.0 + p.x * p.y;
        let atoms = TimeMeasure::new(sigma)
            .with_atom(0.5, 1.0)
            .with_atom(1.0 / 3.0, -0.25);
        let dens = TimeMeasure::new(sigma).with_density(|t| 2.0 * t);
        let both = MeasureData::new(vec![atoms.clone(), dens.clone()]);
        let ones = vec![1.0; mesh.num_vertices()];
        let sigma_int: f64 = assemble_load(&mesh, |p| sigma(p, 0.0), &rule).iter().sum();
        let mut total = 0.0;
        for i in 1..=6 {
            let a = atoms.load(&mesh, &grid, i, &rule).unwrap();
            let d = dens.load(&mesh, &grid, i, &rule).unwrap();
            let s = both.load(&mesh, &grid, i, &rule).unwrap();
            for j in 0..s.len() {
                assert!((s[j] - a[j] - d[j]).abs() < 1e-14);
            }
            total += grid.k() * s.iter().zip(&ones).map(|(a, b)| a * b).sum::<f64>();
        }
        // Signed mass of tau: 1 - 0.25 + int_0^1 2t dt = 1.75.
        assert!((total - 1.75 * sigma_int).abs() < 1e-10);
    }
}
