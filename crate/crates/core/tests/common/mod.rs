//! Dense reference implementations shared by the integration tests.
#![allow(dead_code)]

use lshape_ocp::mesh::{Mesh, Point2};
use nalgebra::{DMatrix, DVector};

/// Dense stiffness and mass matrices from the vertex coordinates, written out
/// independently of the library's element routines.
pub fn dense_operators(mesh: &Mesh) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = mesh.num_vertices();
    let mut k = DMatrix::zeros(n, n);
    let mut m = DMatrix::zeros(n, n);
    for tri in mesh.triangles() {
        let v = tri.0;
        let p: Vec<Point2> = v.iter().map(|&i| mesh.vertices()[i]).collect();
        let det = (p[1].x - p[0].x) * (p[2].y - p[0].y) - (p[2].x - p[0].x) * (p[1].y - p[0].y);
        let area = det.abs() / 2.0;
        // grad lambda_a = (y_b - y_c, x_c - x_b) / det for (a, b, c) cyclic.
        let grads: Vec<[f64; 2]> = (0..3)
            .map(|a| {
                let (b, c) = ((a + 1) % 3, (a + 2) % 3);
                [(p[b].y - p[c].y) / det, (p[c].x - p[b].x) / det]
            })
            .collect();
        for a in 0..3 {
            for b in 0..3 {
                k[(v[a], v[b])] += area * (grads[a][0] * grads[b][0] + grads[a][1] * grads[b][1]);
                m[(v[a], v[b])] += area / 12.0 * if a == b { 2.0 } else { 1.0 };
            }
        }
    }
    (k, m)
}

fn restrict(a: &DMatrix<f64>, free: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(free.len(), free.len(), |i, j| a[(free[i], free[j])])
}

/// Solves `(M/k + K) x = M/k prev + source` on the interior vertices by LU.
fn dense_step(
    step: &DMatrix<f64>,
    mass: &DMatrix<f64>,
    free: &[usize],
    k: f64,
    prev: &[f64],
    source: &[f64],
) -> Vec<f64> {
    let n = prev.len();
    if free.is_empty() {
        return vec![0.0; n];
    }
    let m_prev = mass * DVector::from_column_slice(prev);
    let rhs = DVector::from_iterator(free.len(), free.iter().map(|&v| m_prev[v] / k + source[v]));
    let x = step
        .clone()
        .lu()
        .solve(&rhs)
        .expect("dense step matrix is regular");
    let mut full = vec![0.0; n];
    for (&v, xv) in free.iter().zip(x.iter()) {
        full[v] = *xv;
    }
    full
}

/// `(u_K, phi_j)` for a piecewise-constant `u`: `u_K |K| / 3` per vertex.
pub fn dense_control_load(mesh: &Mesh, u_interval: &[f64]) -> Vec<f64> {
    let mut load = vec![0.0; mesh.num_vertices()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let [a, b, c] = mesh.triangle_points(t);
        let area = ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y)).abs() / 2.0;
        for &v in &tri.0 {
            load[v] += u_interval[t] * area / 3.0;
        }
    }
    load
}

/// Forward backward-Euler sweep with dense LU solves.
pub fn dense_state(
    mesh: &Mesh,
    k: f64,
    measure_loads: &[Vec<f64>],
    u: &[Vec<f64>],
    y0: &[f64],
) -> Vec<Vec<f64>> {
    let (stiff, mass) = dense_operators(mesh);
    let free = mesh.free_vertices();
    let step = restrict(&(&mass / k + &stiff), &free);
    let mut levels = vec![y0.to_vec()];
    for i in 0..measure_loads.len() {
        let cl = dense_control_load(mesh, &u[i]);
        let source: Vec<f64> = cl
            .iter()
            .zip(&measure_loads[i])
            .map(|(a, b)| a + b)
            .collect();
        let next = dense_step(&step, &mass, &free, k, &levels[i], &source);
        levels.push(next);
    }
    levels
}

/// Backward sweep `(M/k + K) z^{i-1} = M/k z^i + M y^i - target_i` from zero.
pub fn dense_costate(mesh: &Mesh, k: f64, y: &[Vec<f64>], target: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (stiff, mass) = dense_operators(mesh);
    let free = mesh.free_vertices();
    let step = restrict(&(&mass / k + &stiff), &free);
    let steps = target.len();
    let mut levels = vec![vec![0.0; mesh.num_vertices()]; steps + 1];
    for i in (1..=steps).rev() {
        let my = &mass * DVector::from_column_slice(&y[i]);
        let source: Vec<f64> = my.iter().zip(&target[i - 1]).map(|(a, b)| a - b).collect();
        levels[i - 1] = dense_step(&step, &mass, &free, k, &levels[i], &source);
    }
    levels
}

/// Largest `|a - b| / |b|` over all entries; entries where `b == 0` must
/// match exactly.
pub fn max_relative_deviation(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut worst = 0.0f64;
    for (la, lb) in a.iter().zip(b) {
        assert_eq!(la.len(), lb.len());
        for (&x, &y) in la.iter().zip(lb) {
            let d = (x - y).abs();
            let rel = if y == 0.0 {
                if d == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                d / y.abs()
            };
            worst = worst.max(rel);
        }
    }
    worst
}

/// Triangle containing `p` and its barycentric coordinates, by brute force.
pub fn locate(mesh: &Mesh, p: Point2) -> Option<(usize, [f64; 3])> {
    let mut best: Option<(usize, [f64; 3], f64)> = None;
    for t in 0..mesh.num_triangles() {
        let [a, b, c] = mesh.triangle_points(t);
        let det = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
        let l1 = ((p.x - a.x) * (c.y - a.y) - (c.x - a.x) * (p.y - a.y)) / det;
        let l2 = ((b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y)) / det;
        let bary = [1.0 - l1 - l2, l1, l2];
        let min = bary.iter().copied().fold(f64::INFINITY, f64::min);
        if best.as_ref().is_none_or(|(_, _, m)| min > *m) {
            best = Some((t, bary, min));
        }
    }
    best.filter(|(_, _, m)| *m > -1e-10).map(|(t, b, _)| (t, b))
}

/// Value of a P1 field at an arbitrary point of the domain.
pub fn eval_p1(mesh: &Mesh, values: &[f64], p: Point2) -> f64 {
    let (t, bary) = locate(mesh, p).expect("point inside the mesh");
    let v = mesh.triangles()[t].0;
    (0..3).map(|a| bary[a] * values[v[a]]).sum()
}

/// Piecewise-constant gradient of a P1 field at an interior point of a
/// triangle.
pub fn grad_p1(mesh: &Mesh, values: &[f64], p: Point2) -> [f64; 2] {
    let (t, _) = locate(mesh, p).expect("point inside the mesh");
    let v = mesh.triangles()[t].0;
    let [a, b, c] = mesh.triangle_points(t);
    let det = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
    let pts = [a, b, c];
    let mut g = [0.0; 2];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        g[0] += values[v[i]] * (pts[j].y - pts[k].y) / det;
        g[1] += values[v[i]] * (pts[k].x - pts[j].x) / det;
    }
    g
}
