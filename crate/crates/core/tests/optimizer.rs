use lshape_ocp::control::{
    box_project, cell_average, cost_functional, kkt_residual, projected_gradient_solve,
    reduced_gradient, Bounds, ControlField, DiscreteProblem, OptimizerConfig,
};
use lshape_ocp::dynamics::{ParabolicSystem, StepSolver, TrackingTarget, Trajectory};
use lshape_ocp::fem::{NodalField, QuadratureRule};
use lshape_ocp::measure::TimeGrid;
use lshape_ocp::mesh::{build_lshape_mesh, Mesh, Point2};
use lshape_ocp::verify::ManufacturedProblem;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn lshape_instance(n: usize, steps: usize) -> DiscreteProblem {
    let problem = ManufacturedProblem::lshape_measure();
    let mesh = build_lshape_mesh(n).unwrap();
    let grid = TimeGrid::new(1.0, steps).unwrap();
    problem
        .discretize(mesh, grid, StepSolver::Cholesky)
        .unwrap()
}

fn plain_problem(mesh: Mesh, grid: TimeGrid, target: TrackingTarget) -> DiscreteProblem {
    let steps = grid.steps();
    let nv = mesh.num_vertices();
    let y0 = NodalField::zeros(&mesh);
    DiscreteProblem {
        system: ParabolicSystem::new(mesh, grid, StepSolver::Cholesky).unwrap(),
        measure_loads: vec![vec![0.0; nv]; steps],
        target,
        y0,
    }
}

#[test]
fn all_zero_problem_stops_after_one_iteration() {
    let mesh = build_lshape_mesh(4).unwrap();
    let grid = TimeGrid::new(1.0, 4).unwrap();
    let target = TrackingTarget::zero(&mesh, &grid);
    let problem = plain_problem(mesh, grid, target);
    let out = projected_gradient_solve(&problem, &OptimizerConfig::default()).unwrap();
    assert_eq!(out.report.iterations, 1);
    assert!(out.report.converged);
    assert!(out.control.values().iter().all(|&v| v == 0.0));
    assert_eq!(out.report.kkt_residual, 0.0);
}

#[test]
fn converged_control_is_projected_costate_average() {
    let problem = lshape_instance(4, 4);
    let cfg = OptimizerConfig::default();
    let out = projected_gradient_solve(&problem, &cfg).unwrap();
    assert!(out.report.converged);
    let mesh = problem.system.mesh();
    for i in 1..=4 {
        let avg = cell_average(out.costate.level(i - 1), mesh);
        for (t, a) in avg.iter().enumerate() {
            let expected = box_project(-a / cfg.alpha, cfg.bounds);
            assert!(
                (out.control.get(i, t) - expected).abs() <= cfg.tol,
                "cell ({i}, {t})"
            );
        }
    }
}

#[test]
fn cost_history_is_non_increasing() {
    let problem = lshape_instance(8, 32);
    let out = projected_gradient_solve(&problem, &OptimizerConfig::default()).unwrap();
    let h = &out.report.cost_history;
    assert!(h.len() >= 2);
    assert!(h.windows(2).all(|w| w[1] <= w[0]), "{h:?}");
    assert_eq!(out.report.step_norms.len(), out.report.iterations);
}

#[test]
fn kkt_residual_within_ten_tol_at_tight_tolerance() {
    let problem = lshape_instance(4, 8);
    let cfg = OptimizerConfig {
        tol: 1e-10,
        ..OptimizerConfig::default()
    };
    let out = projected_gradient_solve(&problem, &cfg).unwrap();
    assert!(out.report.kkt_residual <= 10.0 * cfg.tol);
}

#[test]
fn wide_bounds_first_iterate_is_the_unconstrained_formula() {
    let problem = lshape_instance(4, 4);
    let cfg = OptimizerConfig {
        bounds: Bounds::new(-1e6, 1e6).unwrap(),
        max_iter: 1,
        alpha: 2.0,
        ..OptimizerConfig::default()
    };
    let zero = problem.zero_control();
    let y = problem.state(&zero).unwrap();
    let z = problem.costate(&y).unwrap();
    let out = projected_gradient_solve(&problem, &cfg).unwrap();
    let mesh = problem.system.mesh();
    for i in 1..=4 {
        let avg = cell_average(z.level(i - 1), mesh);
        for (t, a) in avg.iter().enumerate() {
            assert_eq!(out.control.get(i, t), -a / cfg.alpha);
        }
    }
    assert!(!out.report.converged);
}

#[test]
fn max_iter_reports_non_convergence() {
    let problem = lshape_instance(4, 4);
    let cfg = OptimizerConfig {
        max_iter: 1,
        tol: 1e-14,
        ..OptimizerConfig::default()
    };
    let out = projected_gradient_solve(&problem, &cfg).unwrap();
    assert!(!out.report.converged);
    assert_eq!(out.report.iterations, 1);
}

#[test]
fn cost_of_unit_mismatch_and_unit_control() {
    let mesh = build_lshape_mesh(8).unwrap();
    let grid = TimeGrid::new(1.0, 4).unwrap();
    let target = TrackingTarget::zero(&mesh, &grid);
    let problem = plain_problem(mesh.clone(), grid, target);
    let ones = NodalField::from(vec![1.0; mesh.num_vertices()]);
    let y = Trajectory::new(vec![ones; 5]);
    let u = ControlField::from_fn(4, mesh.num_triangles(), |_, _| 1.0);
    let j = cost_functional(&problem, &u, &y, 1.0).unwrap();
    assert!((j - 0.75).abs() < 1e-12, "{j}");
    let half = ControlField::from_fn(4, mesh.num_triangles(), |_, _| 0.5);
    assert!(cost_functional(&problem, &half, &y, 1.0).unwrap() < j);
}

#[test]
fn cost_vanishes_when_state_matches_target() {
    let mesh = build_lshape_mesh(4).unwrap();
    let grid = TimeGrid::new(1.0, 4).unwrap();
    let yd = |p: Point2, _t: f64| 1.0 + p.x - 2.0 * p.y;
    let target = TrackingTarget::new(&mesh, &grid, &yd, &QuadratureRule::degree5());
    let problem = plain_problem(mesh.clone(), grid, target);
    let field = NodalField::interpolate(&mesh, |p| yd(p, 0.0));
    let y = Trajectory::new(vec![field; 5]);
    let j = cost_functional(&problem, &problem.zero_control(), &y, 1.0).unwrap();
    assert!(j.abs() < 1e-14, "{j}");
}

#[test]
fn zero_costate_gives_alpha_u() {
    let mesh = build_lshape_mesh(4).unwrap();
    let grid = TimeGrid::new(1.0, 3).unwrap();
    let z = Trajectory::zeros(&mesh, &grid);
    let u = ControlField::from_fn(3, mesh.num_triangles(), |i, t| 0.01 * (i + t) as f64);
    let g = reduced_gradient(&u, &z, &mesh, 3.0).unwrap();
    for (gv, uv) in g.values().iter().zip(u.values()) {
        assert_eq!(*gv, 3.0 * uv);
    }
}

/// Per cell, the KKT residual is the distance from `u` to the minimiser of
/// `w -> g (w - u) + (w - u)^2 / 2` over `[u_a, u_b]`, found here by
/// enumeration.
#[test]
fn kkt_residual_matches_brute_force_search() {
    let bounds = Bounds::default();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let cells = 10;
    let u = ControlField::from_fn(1, cells, |_, _| rng.random_range(-0.5..=0.1));
    let g = ControlField::from_fn(1, cells, |_, _| rng.random_range(-1.0..1.0));
    let samples = 600_001;
    let spacing = (bounds.upper() - bounds.lower()) / (samples - 1) as f64;
    let mut brute = 0.0f64;
    for t in 0..cells {
        let (uv, gv) = (u.get(1, t), g.get(1, t));
        let best = (0..samples)
            .map(|s| bounds.lower() + s as f64 * spacing)
            .map(|w| (w, gv * (w - uv) + 0.5 * (w - uv) * (w - uv)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap()
            .0;
        brute = brute.max((uv - best).abs());
    }
    let r = kkt_residual(&u, &g, bounds).unwrap();
    assert!((r - brute).abs() <= spacing, "{r} vs {brute}");
}
