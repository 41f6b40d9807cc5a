//! Conforming triangulations of simple polygons, with a structured builder for
//! the L-shaped domain `(0,1)^2 \ [0.5,1]^2`.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Distance below which a vertex counts as lying on the domain boundary.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// Triangles with area at or below this are rejected as degenerate.
pub const DEGENERATE_AREA: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn dist(self, other: Point2) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }

    fn midpoint(self, other: Point2) -> Point2 {
        Point2::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }
}

/// Vertex indices of a triangle, counter-clockwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Triangle(pub [usize; 3]);

impl Triangle {
    pub fn vertices(&self) -> [usize; 3] {
        self.0
    }

    fn edges(&self) -> [(usize, usize); 3] {
        let [a, b, c] = self.0;
        [(a, b), (b, c), (c, a)]
    }
}

fn signed_area(a: Point2, b: Point2, c: Point2) -> f64 {
    0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y))
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// A simple polygon given by its corners in order.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    corners: Vec<Point2>,
}

impl Polygon {
    pub fn new(corners: Vec<Point2>) -> Result<Self> {
        if corners.len() < 3 {
            return Err(Error::InvalidParameter(
                "polygon needs at least three corners".into(),
            ));
        }
        Ok(Self { corners })
    }

    /// The L-shaped domain `(0,1)^2 \ [0.5,1]^2`.
    pub fn lshape() -> Self {
        Self {
            corners: vec![
                Point2::new(0.0, 0.0),
                Point2::new(1.0, 0.0),
                Point2::new(1.0, 0.5),
                Point2::new(0.5, 0.5),
                Point2::new(0.5, 1.0),
                Point2::new(0.0, 1.0),
            ],
        }
    }

    pub fn unit_square() -> Self {
        Self {
            corners: vec![
                Point2::new(0.0, 0.0),
                Point2::new(1.0, 0.0),
                Point2::new(1.0, 1.0),
                Point2::new(0.0, 1.0),
            ],
        }
    }

    pub fn corners(&self) -> &[Point2] {
        &self.corners
    }

    /// Absolute enclosed area (shoelace).
    pub fn area(&self) -> f64 {
        let n = self.corners.len();
        let twice: f64 = (0..n)
            .map(|i| {
                let p = self.corners[i];
                let q = self.corners[(i + 1) % n];
                p.x * q.y - q.x * p.y
            })
            .sum();
        0.5 * twice.abs()
    }

    /// Euclidean distance from `p` to the polygon boundary.
    pub fn boundary_distance(&self, p: Point2) -> f64 {
        let n = self.corners.len();
        (0..n)
            .map(|i| segment_distance(p, self.corners[i], self.corners[(i + 1) % n]))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn on_boundary(&self, p: Point2) -> bool {
        self.boundary_distance(p) <= BOUNDARY_TOL
    }
}

fn segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len_sq = dx * dx + dy * dy;
    let s = if len_sq == 0.0 {
        0.0
    } else {
        (((p.x - a.x) * dx + (p.y - a.y) * dy) / len_sq).clamp(0.0, 1.0)
    };
    p.dist(Point2::new(a.x + s * dx, a.y + s * dy))
}

/// A conforming P1 triangulation.
///
/// Immutable once built. `boundary[v]` is true iff vertex `v` lies on the
/// domain boundary; the free (interior) vertices carry the degrees of freedom
/// of `W_h^0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Point2>,
    triangles: Vec<Triangle>,
    boundary: Vec<bool>,
    h: f64,
    domain: Option<Polygon>,
}

impl Mesh {
    /// Builds a mesh on `domain`, reorienting clockwise triangles and flagging
    /// boundary vertices geometrically.
    pub fn new(vertices: Vec<Point2>, triangles: Vec<Triangle>, domain: Polygon) -> Result<Self> {
        let (triangles, _) = orient(&vertices, triangles)?;
        let boundary = vertices.iter().map(|&p| domain.on_boundary(p)).collect();
        let mesh = Self::assemble(vertices, triangles, boundary, Some(domain));
        mesh.check_conforming()?;
        Ok(mesh)
    }

    fn assemble(
        vertices: Vec<Point2>,
        triangles: Vec<Triangle>,
        boundary: Vec<bool>,
        domain: Option<Polygon>,
    ) -> Self {
        let h = triangles
            .iter()
            .flat_map(|t| t.edges())
            .map(|(a, b)| vertices[a].dist(vertices[b]))
            .fold(0.0, f64::max);
        Self {
            vertices,
            triangles,
            boundary,
            h,
            domain,
        }
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    pub fn domain(&self) -> Option<&Polygon> {
        self.domain.as_ref()
    }

    /// Largest edge length over all triangles.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Number of interior (non-boundary) vertices.
    pub fn num_dofs(&self) -> usize {
        self.boundary.iter().filter(|&&b| !b).count()
    }

    /// Indices of the interior vertices in increasing order.
    pub fn free_vertices(&self) -> Vec<usize> {
        (0..self.vertices.len())
            .filter(|&v| !self.boundary[v])
            .collect()
    }

    pub fn triangle_points(&self, t: usize) -> [Point2; 3] {
        let [a, b, c] = self.triangles[t].0;
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        signed_area(a, b, c)
    }

    pub fn triangle_areas(&self) -> Vec<f64> {
        (0..self.triangles.len())
            .map(|t| self.triangle_area(t))
            .collect()
    }

    pub fn centroid(&self, t: usize) -> Point2 {
        let [a, b, c] = self.triangle_points(t);
        Point2::new((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| self.triangle_area(t))
            .sum()
    }

    /// Number of triangles sharing each edge.
    pub fn edge_counts(&self) -> HashMap<(usize, usize), usize> {
        let mut counts = HashMap::new();
        for t in &self.triangles {
            for (a, b) in t.edges() {
                *counts.entry(edge_key(a, b)).or_insert(0) += 1;
            }
        }
        counts
    }

    fn check_conforming(&self) -> Result<()> {
        for (&(a, b), &count) in &self.edge_counts() {
            if count > 2 {
                return Err(Error::Validation(format!(
                    "edge ({a}, {b}) is shared by {count} triangles"
                )));
            }
            if count == 1 && !(self.boundary[a] && self.boundary[b]) {
                return Err(Error::Validation(format!(
                    "edge ({a}, {b}) has one neighbouring triangle but is not on the boundary"
                )));
            }
        }
        Ok(())
    }

    /// Red refinement: every triangle is split into four through its edge
    /// midpoints. Boundary flags of new vertices are recomputed from the
    /// domain polygon, or from the boundary edges when the mesh has none.
    pub fn refine_uniform(&self) -> Mesh {
        let mut vertices = self.vertices.clone();
        let mut boundary = self.boundary.clone();
        let edge_counts = self.edge_counts();
        let mut midpoint_of: HashMap<(usize, usize), usize> = HashMap::new();
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());

        for t in &self.triangles {
            let [v0, v1, v2] = t.0;
            let mut mid = |a: usize, b: usize| -> usize {
                let key = edge_key(a, b);
                *midpoint_of.entry(key).or_insert_with(|| {
                    let p = vertices[a].midpoint(vertices[b]);
                    let on_boundary = match &self.domain {
                        Some(domain) => domain.on_boundary(p),
                        None => edge_counts.get(&key) == Some(&1),
                    };
                    vertices.push(p);
                    boundary.push(on_boundary);
                    vertices.len() - 1
                })
            };
            let m01 = mid(v0, v1);
            let m12 = mid(v1, v2);
            let m20 = mid(v2, v0);
            triangles.push(Triangle([v0, m01, m20]));
            triangles.push(Triangle([m01, v1, m12]));
            triangles.push(Triangle([m20, m12, v2]));
            triangles.push(Triangle([m01, m12, m20]));
        }
        if let Some(domain) = &self.domain {
            for (flag, &p) in boundary.iter_mut().zip(&vertices) {
                *flag = domain.on_boundary(p);
            }
        }
        Mesh::assemble(vertices, triangles, boundary, self.domain.clone())
    }

    /// Serializes in the `mesh-v1` text format.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(64 * (self.vertices.len() + self.triangles.len()));
        out.push_str("mesh-v1\n");
        let _ = writeln!(out, "{} {}", self.vertices.len(), self.triangles.len());
        for (p, &b) in self.vertices.iter().zip(&self.boundary) {
            let _ = writeln!(out, "{:.16e} {:.16e} {}", p.x, p.y, u8::from(b));
        }
        for t in &self.triangles {
            let [a, b, c] = t.0;
            let _ = writeln!(out, "{a} {b} {c}");
        }
        out
    }

    /// Parses the `mesh-v1` text format. Clockwise triangles are reoriented
    /// and reported in [`ParsedMesh::warnings`].
    pub fn parse(text: &str) -> Result<ParsedMesh> {
        parse_mesh(text)
    }
}

/// Result of [`Mesh::parse`]: the mesh plus any non-fatal repairs made.
#[derive(Debug, Clone)]
pub struct ParsedMesh {
    pub mesh: Mesh,
    pub warnings: Vec<String>,
}

fn orient(
    vertices: &[Point2],
    mut triangles: Vec<Triangle>,
) -> Result<(Vec<Triangle>, Vec<usize>)> {
    let mut flipped = Vec::new();
    for (i, t) in triangles.iter_mut().enumerate() {
        let [a, b, c] = t.0;
        for v in [a, b, c] {
            if v >= vertices.len() {
                return Err(Error::Validation(format!(
                    "triangle {i} references vertex {v}, but there are only {} vertices",
                    vertices.len()
                )));
            }
        }
        if a == b || b == c || a == c {
            return Err(Error::Validation(format!("triangle {i} repeats a vertex")));
        }
        let area = signed_area(vertices[a], vertices[b], vertices[c]);
        if area.abs() <= DEGENERATE_AREA {
            return Err(Error::Validation(format!(
                "triangle {i} is degenerate (area {area:.3e})"
            )));
        }
        if area < 0.0 {
            t.0 = [a, c, b];
            flipped.push(i);
        }
    }
    Ok((triangles, flipped))
}

fn parse_mesh(text: &str) -> Result<ParsedMesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let parse_err = |line: usize, message: String| Error::Parse { line, message };

    let (line, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty input".into()))?;
    if header != "mesh-v1" {
        return Err(parse_err(
            line,
            format!("expected `mesh-v1`, found `{header}`"),
        ));
    }

    let (line, counts) = lines
        .next()
        .ok_or_else(|| parse_err(line + 1, "missing vertex/triangle counts".into()))?;
    let counts: Vec<&str> = counts.split_whitespace().collect();
    let [nv, nt] = counts[..] else {
        return Err(parse_err(line, "expected `<nv> <nt>`".into()));
    };
    let nv: usize = nv
        .parse()
        .map_err(|_| parse_err(line, format!("bad vertex count `{nv}`")))?;
    let nt: usize = nt
        .parse()
        .map_err(|_| parse_err(line, format!("bad triangle count `{nt}`")))?;

    let mut vertices = Vec::with_capacity(nv);
    let mut boundary = Vec::with_capacity(nv);
    let mut last_line = line;
    for _ in 0..nv {
        let (line, l) = lines.next().ok_or_else(|| {
            parse_err(
                last_line + 1,
                "unexpected end of input in vertex block".into(),
            )
        })?;
        last_line = line;
        let fields: Vec<&str> = l.split_whitespace().collect();
        let [x, y, b] = fields[..] else {
            return Err(parse_err(line, "expected `x y boundary_flag`".into()));
        };
        let x: f64 = x
            .parse()
            .map_err(|_| parse_err(line, format!("bad coordinate `{x}`")))?;
        let y: f64 = y
            .parse()
            .map_err(|_| parse_err(line, format!("bad coordinate `{y}`")))?;
        if !x.is_finite() || !y.is_finite() {
            return Err(parse_err(line, "coordinates must be finite".into()));
        }
        let b = match b {
            "0" => false,
            "1" => true,
            other => {
                return Err(parse_err(
                    line,
                    format!("boundary flag must be 0 or 1, found `{other}`"),
                ))
            }
        };
        vertices.push(Point2::new(x, y));
        boundary.push(b);
    }

    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (line, l) = lines.next().ok_or_else(|| {
            parse_err(
                last_line + 1,
                "unexpected end of input in triangle block".into(),
            )
        })?;
        last_line = line;
        let fields: Vec<&str> = l.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(parse_err(line, "expected `v0 v1 v2`".into()));
        }
        let mut idx = [0usize; 3];
        for (slot, f) in idx.iter_mut().zip(&fields) {
            *slot = f
                .parse()
                .map_err(|_| parse_err(line, format!("bad vertex index `{f}`")))?;
        }
        triangles.push(Triangle(idx));
    }
    if let Some((line, _)) = lines.next() {
        return Err(parse_err(
            line,
            "trailing content after triangle block".into(),
        ));
    }

    let (triangles, flipped) = orient(&vertices, triangles)?;
    let warnings = flipped
        .iter()
        .map(|i| format!("triangle {i} was clockwise and has been reoriented"))
        .collect();
    let mesh = Mesh::assemble(vertices, triangles, boundary, None);
    mesh.check_conforming()?;

    // Flags must coincide with the vertices touched by boundary edges.
    let mut on_edge = vec![false; mesh.num_vertices()];
    for (&(a, b), &count) in &mesh.edge_counts() {
        if count == 1 {
            on_edge[a] = true;
            on_edge[b] = true;
        }
    }
    if let Some(v) = (0..on_edge.len()).find(|&v| on_edge[v] != mesh.boundary[v]) {
        return Err(Error::Validation(format!(
            "vertex {v} boundary flag {} disagrees with the mesh boundary",
            u8::from(mesh.boundary[v])
        )));
    }
    Ok(ParsedMesh { mesh, warnings })
}

fn structured_mesh(n: usize, keep_square: impl Fn(usize, usize) -> bool, domain: Polygon) -> Mesh {
    let h = 1.0 / n as f64;
    let mut id = vec![usize::MAX; (n + 1) * (n + 1)];
    let mut used = vec![false; (n + 1) * (n + 1)];
    for j in 0..n {
        for i in 0..n {
            if keep_square(i, j) {
                for (di, dj) in [(0, 0), (1, 0), (1, 1), (0, 1)] {
                    used[(j + dj) * (n + 1) + i + di] = true;
                }
            }
        }
    }
    let mut vertices = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            if used[j * (n + 1) + i] {
                id[j * (n + 1) + i] = vertices.len();
                vertices.push(Point2::new(i as f64 * h, j as f64 * h));
            }
        }
    }
    let mut triangles = Vec::new();
    for j in 0..n {
        for i in 0..n {
            if !keep_square(i, j) {
                continue;
            }
            let ll = id[j * (n + 1) + i];
            let lr = id[j * (n + 1) + i + 1];
            let ur = id[(j + 1) * (n + 1) + i + 1];
            let ul = id[(j + 1) * (n + 1) + i];
            triangles.push(Triangle([ll, lr, ur]));
            triangles.push(Triangle([ll, ur, ul]));
        }
    }
    let boundary = vertices.iter().map(|&p| domain.on_boundary(p)).collect();
    Mesh::assemble(vertices, triangles, boundary, Some(domain))
}

/// Structured mesh of the L-shape: squares of side `1/n`, each cut by the
/// lower-left to upper-right diagonal. `n` must be even and positive so that
/// the re-entrant corner `(0.5, 0.5)` is a vertex.
pub fn build_lshape_mesh(n: usize) -> Result<Mesh> {
    if n == 0 || !n.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "L-shape subdivisions must be even and positive, got {n}"
        )));
    }
    let half = n / 2;
    Ok(structured_mesh(
        n,
        |i, j| !(i >= half && j >= half),
        Polygon::lshape(),
    ))
}

/// Structured mesh of the unit square with the same diagonal pattern.
pub fn build_unit_square_mesh(n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "subdivisions must be positive".into(),
        ));
    }
    Ok(structured_mesh(n, |_, _| true, Polygon::unit_square()))
}
