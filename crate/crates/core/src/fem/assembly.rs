use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::quadrature::QuadratureRule;
use crate::fem::sparse::SparseMatrix;
use crate::mesh::{Mesh, Point2, DEGENERATE_AREA};

/// Nodal coefficients of a P1 function, one per mesh vertex.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NodalField(Vec<f64>);

impl NodalField {
    pub fn zeros(mesh: &Mesh) -> Self {
        Self(vec![0.0; mesh.num_vertices()])
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(mesh: &Mesh, f: impl Fn(Point2) -> f64) -> Self {
        Self(mesh.vertices().iter().map(|&p| f(p)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Value of the P1 function at barycentric coordinates `bary` of triangle `t`.
    pub fn eval_in(&self, mesh: &Mesh, t: usize, bary: &[f64; 3]) -> f64 {
        let [a, b, c] = mesh.triangles()[t].vertices();
        bary[0] * self.0[a] + bary[1] * self.0[b] + bary[2] * self.0[c]
    }
}

impl From<Vec<f64>> for NodalField {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl std::ops::Deref for NodalField {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Gradients of the three barycentric coordinates and the area of triangle `t`.
pub fn shape_gradients(mesh: &Mesh, t: usize) -> Result<([[f64; 2]; 3], f64)> {
    let [p0, p1, p2] = mesh.triangle_points(t);
    let area = mesh.triangle_area(t);
    if area <= DEGENERATE_AREA {
        return Err(Error::Assembly(format!(
            "triangle {t} is degenerate (area {area:.3e})"
        )));
    }
    let inv = 1.0 / (2.0 * area);
    Ok((
        [
            [(p1.y - p2.y) * inv, (p2.x - p1.x) * inv],
            [(p2.y - p0.y) * inv, (p0.x - p2.x) * inv],
            [(p0.y - p1.y) * inv, (p1.x - p0.x) * inv],
        ],
        area,
    ))
}

/// Element stiffness matrix `int grad(phi_a) . grad(phi_b)`.
pub fn local_stiffness(mesh: &Mesh, t: usize) -> Result<[[f64; 3]; 3]> {
    let ([p0, p1, p2], area) = (mesh.triangle_points(t), mesh.triangle_area(t));
    if area <= DEGENERATE_AREA {
        return Err(Error::Assembly(format!(
            "triangle {t} is degenerate (area {area:.3e})"
        )));
    }
    let b = [p1.y - p2.y, p2.y - p0.y, p0.y - p1.y];
    let c = [p2.x - p1.x, p0.x - p2.x, p1.x - p0.x];
    let scale = 1.0 / (4.0 * area);
    let mut k = [[0.0; 3]; 3];
    for a in 0..3 {
        for bb in 0..3 {
            k[a][bb] = (b[a] * b[bb] + c[a] * c[bb]) * scale;
        }
    }
    Ok(k)
}

/// Element mass matrix `int phi_a phi_b = |K|/12 (1 + delta_ab)`.
pub fn local_mass(mesh: &Mesh, t: usize) -> Result<[[f64; 3]; 3]> {
    let area = mesh.triangle_area(t);
    if area <= DEGENERATE_AREA {
        return Err(Error::Assembly(format!(
            "triangle {t} is degenerate (area {area:.3e})"
        )));
    }
    let off = area / 12.0;
    let diag = area / 6.0;
    Ok([[diag, off, off], [off, diag, off], [off, off, diag]])
}

/// Whether element loops run on the rayon pool.
///
/// Local matrices are computed in parallel but merged in element order, so
/// both modes produce bitwise identical matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Assembly {
    #[default]
    Sequential,
    Parallel,
}

fn vertex_pattern(mesh: &Mesh) -> SparseMatrix {
    let mut rows = vec![Vec::new(); mesh.num_vertices()];
    for t in mesh.triangles() {
        let v = t.vertices();
        for &a in &v {
            rows[a].extend_from_slice(&v);
        }
    }
    SparseMatrix::from_pattern(mesh.num_vertices(), rows)
}

fn assemble_with(
    mesh: &Mesh,
    mode: Assembly,
    local: impl Fn(&Mesh, usize) -> Result<[[f64; 3]; 3]> + Sync,
) -> Result<SparseMatrix> {
    let locals: Vec<[[f64; 3]; 3]> = match mode {
        Assembly::Sequential => (0..mesh.num_triangles())
            .map(|t| local(mesh, t))
            .collect::<Result<_>>()?,
        Assembly::Parallel => (0..mesh.num_triangles())
            .into_par_iter()
            .map(|t| local(mesh, t))
            .collect::<Result<_>>()?,
    };
    let mut m = vertex_pattern(mesh);
    for (t, k) in mesh.triangles().iter().zip(&locals) {
        let v = t.vertices();
        for a in 0..3 {
            for b in 0..3 {
                m.add_to(v[a], v[b], k[a][b]);
            }
        }
    }
    Ok(m)
}

pub fn assemble_stiffness(mesh: &Mesh) -> Result<SparseMatrix> {
    assemble_stiffness_with(mesh, Assembly::Sequential)
}

pub fn assemble_stiffness_with(mesh: &Mesh, mode: Assembly) -> Result<SparseMatrix> {
    assemble_with(mesh, mode, local_stiffness)
}

pub fn assemble_mass(mesh: &Mesh) -> Result<SparseMatrix> {
    assemble_mass_with(mesh, Assembly::Sequential)
}

pub fn assemble_mass_with(mesh: &Mesh, mode: Assembly) -> Result<SparseMatrix> {
    assemble_with(mesh, mode, local_mass)
}

/// Physical point of barycentric coordinates `bary` in triangle `t`.
pub fn map_point(mesh: &Mesh, t: usize, bary: &[f64; 3]) -> Point2 {
    let [a, b, c] = mesh.triangle_points(t);
    Point2::new(
        bary[0] * a.x + bary[1] * b.x + bary[2] * c.x,
        bary[0] * a.y + bary[1] * b.y + bary[2] * c.y,
    )
}

/// Load vector `b_j = int f phi_j` with `rule` on every element.
pub fn assemble_load(mesh: &Mesh, f: impl Fn(Point2) -> f64, rule: &QuadratureRule) -> Vec<f64> {
    assemble_load_by_element(mesh, |_, p| f(p), rule)
}

/// Like [`assemble_load`] but the integrand also sees the element index.
pub fn assemble_load_by_element(
    mesh: &Mesh,
    f: impl Fn(usize, Point2) -> f64,
    rule: &QuadratureRule,
) -> Vec<f64> {
    let mut load = vec![0.0; mesh.num_vertices()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let area = mesh.triangle_area(t);
        let v = tri.vertices();
        for (bary, w) in rule.iter() {
            let fw = f(t, map_point(mesh, t, bary)) * w * area;
            for a in 0..3 {
                load[v[a]] += fw * bary[a];
            }
        }
    }
    load
}

/// System restricted to the interior vertices of a mesh.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    /// `free[k]` is the mesh vertex of reduced unknown `k`.
    pub free: Vec<usize>,
    n_full: usize,
}

impl ReducedSystem {
    pub fn dim(&self) -> usize {
        self.free.len()
    }

    /// Scatters a reduced solution into a full nodal field, zero on the boundary.
    pub fn expand(&self, reduced: &[f64]) -> NodalField {
        let mut full = vec![0.0; self.n_full];
        for (&v, &x) in self.free.iter().zip(reduced) {
            full[v] = x;
        }
        NodalField(full)
    }
}

/// Removes the rows and columns of boundary vertices (homogeneous Dirichlet
/// data). A mesh without interior vertices gives an empty system.
pub fn apply_dirichlet(a: &SparseMatrix, b: &[f64], mesh: &Mesh) -> Result<ReducedSystem> {
    let n = mesh.num_vertices();
    if a.n_rows() != n || a.n_cols() != n || b.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "system of size {}x{} (rhs {}) does not match {} mesh vertices",
            a.n_rows(),
            a.n_cols(),
            b.len(),
            n
        )));
    }
    let free = mesh.free_vertices();
    Ok(ReducedSystem {
        matrix: a.principal_submatrix(&free),
        rhs: free.iter().map(|&v| b[v]).collect(),
        free,
        n_full: n,
    })
}
