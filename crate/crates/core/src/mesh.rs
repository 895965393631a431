//! Polygonal meshes of the unit square with skeleton topology.
//!
//! Edges are oriented counterclockwise with respect to their `left`
//! element, so `normal` points out of `left` and into `right`.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{ConvexPolygon, Point2};

/// Tolerance used to identify coincident vertices.
pub const VERTEX_TOLERANCE: f64 = 1e-12;

/// Seed used for the polygonal mesh when none is given.
pub const DEFAULT_SEED: u64 = 20180615;

/// Lloyd iterations applied to the Voronoi seeds.
pub const LLOYD_ITERATIONS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeshKind {
    Quad,
    Tri,
    Poly,
}

impl MeshKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MeshKind::Quad => "quad",
            MeshKind::Tri => "tri",
            MeshKind::Poly => "poly",
        }
    }
}

impl fmt::Display for MeshKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MeshKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quad" => Ok(MeshKind::Quad),
            "tri" => Ok(MeshKind::Tri),
            "poly" => Ok(MeshKind::Poly),
            other => Err(Error::Config(format!("unknown mesh kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: Point2,
    pub b: Point2,
    /// Global vertex indices of `a` and `b`.
    pub vertex_ids: (usize, usize),
    pub left: usize,
    /// `None` on the domain boundary.
    pub right: Option<usize>,
    /// Unit normal pointing out of `left`.
    pub normal: Point2,
}

impl Edge {
    #[inline]
    pub fn is_boundary(&self) -> bool {
        self.right.is_none()
    }

    #[inline]
    pub fn length(&self) -> f64 {
        self.a.distance(self.b)
    }

    pub fn midpoint(&self) -> Point2 {
        self.a.lerp(self.b, 0.5)
    }

    /// Normal pointing out of `element`, which must be adjacent to the edge.
    pub fn normal_from(&self, element: usize) -> Point2 {
        if element == self.left {
            self.normal
        } else {
            debug_assert_eq!(Some(element), self.right);
            -self.normal
        }
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    kind: MeshKind,
    vertices: Vec<Point2>,
    cells: Vec<Vec<usize>>,
    elements: Vec<ConvexPolygon>,
    edges: Vec<Edge>,
    element_edges: Vec<Vec<usize>>,
}

impl Mesh {
    /// Builds the mesh and its skeleton from a vertex list and
    /// counterclockwise vertex-index cycles.
    pub fn from_cells(kind: MeshKind, vertices: Vec<Point2>, cells: Vec<Vec<usize>>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::Geometry("mesh has no elements".into()));
        }
        let mut elements = Vec::with_capacity(cells.len());
        for (id, cell) in cells.iter().enumerate() {
            let pts = cell
                .iter()
                .map(|&v| {
                    vertices
                        .get(v)
                        .copied()
                        .ok_or_else(|| Error::Geometry(format!("element {id} references missing vertex {v}")))
                })
                .collect::<Result<Vec<_>>>()?;
            elements.push(ConvexPolygon::new(id, pts)?);
        }

        let mut edges: Vec<Edge> = Vec::new();
        let mut element_edges = vec![Vec::new(); cells.len()];
        let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
        for (id, cell) in cells.iter().enumerate() {
            let n = cell.len();
            for i in 0..n {
                let (va, vb) = (cell[i], cell[(i + 1) % n]);
                let key = (va.min(vb), va.max(vb));
                match lookup.get(&key) {
                    None => {
                        let a = vertices[va];
                        let b = vertices[vb];
                        let t = b - a;
                        lookup.insert(key, edges.len());
                        element_edges[id].push(edges.len());
                        edges.push(Edge {
                            a,
                            b,
                            vertex_ids: (va, vb),
                            left: id,
                            right: None,
                            normal: t.perp_cw() * (1.0 / t.norm()),
                        });
                    }
                    Some(&e) => {
                        let edge = &mut edges[e];
                        if edge.right.is_some() {
                            return Err(Error::Geometry(format!("edge {va}-{vb} shared by more than two elements")));
                        }
                        if edge.vertex_ids != (vb, va) {
                            return Err(Error::Geometry(format!(
                                "edge {va}-{vb} has the same orientation in elements {} and {id}",
                                edge.left
                            )));
                        }
                        if edge.left == id {
                            return Err(Error::Geometry(format!("element {id} uses edge {va}-{vb} twice")));
                        }
                        edge.right = Some(id);
                        element_edges[id].push(e);
                    }
                }
            }
        }

        Ok(Self {
            kind,
            vertices,
            cells,
            elements,
            edges,
            element_edges,
        })
    }

    /// Like [`Mesh::from_cells`] but first merges vertices closer than
    /// [`VERTEX_TOLERANCE`] and drops repeated consecutive cell vertices.
    pub fn from_polygons(kind: MeshKind, polygons: &[Vec<Point2>]) -> Result<Self> {
        let mut pool = VertexPool::new(VERTEX_TOLERANCE);
        let mut cells = Vec::with_capacity(polygons.len());
        for poly in polygons {
            let mut cell: Vec<usize> = Vec::with_capacity(poly.len());
            for &p in poly {
                let id = pool.insert(p);
                if cell.last() != Some(&id) {
                    cell.push(id);
                }
            }
            while cell.len() > 1 && cell.first() == cell.last() {
                cell.pop();
            }
            cells.push(cell);
        }
        Self::from_cells(kind, pool.points, cells)
    }

    #[inline]
    pub fn kind(&self) -> MeshKind {
        self.kind
    }

    #[inline]
    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    #[inline]
    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    #[inline]
    pub fn elements(&self) -> &[ConvexPolygon] {
        &self.elements
    }

    #[inline]
    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    #[inline]
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Indices into [`Mesh::edges`] bounding element `k`, counterclockwise.
    pub fn element_edges(&self, k: usize) -> &[usize] {
        &self.element_edges[k]
    }

    pub fn interior_edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(|e| !e.is_boundary())
    }

    pub fn boundary_edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(|e| e.is_boundary())
    }

    pub fn total_area(&self) -> f64 {
        self.elements.iter().map(|e| e.area()).sum()
    }

    /// Largest element diameter.
    pub fn h_max(&self) -> f64 {
        self.elements.iter().map(|e| e.diameter()).fold(0.0, f64::max)
    }

    /// Elements sharing an edge with `k`.
    pub fn neighbors(&self, k: usize) -> Vec<usize> {
        self.element_edges[k]
            .iter()
            .filter_map(|&e| {
                let edge = &self.edges[e];
                match edge.right {
                    Some(r) if edge.left == k => Some(r),
                    Some(_) => Some(edge.left),
                    None => None,
                }
            })
            .collect()
    }

    /// Copy of the mesh in which every interior edge is seen from its other
    /// side (`left` and `right` swapped, endpoints and normal reversed).
    pub fn with_flipped_interior_edges(&self) -> Mesh {
        let mut out = self.clone();
        for e in out.edges.iter_mut() {
            if let Some(r) = e.right {
                *e = Edge {
                    a: e.b,
                    b: e.a,
                    vertex_ids: (e.vertex_ids.1, e.vertex_ids.0),
                    left: r,
                    right: Some(e.left),
                    normal: -e.normal,
                };
            }
        }
        out
    }

    /// Writes the plain-text exchange format:
    /// `NV NE NEDGE`, then `x y` per vertex, `nverts v1 .. vk` per element and
    /// `a b left right` per edge, with `right = -1` on the boundary.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{} {} {}", self.vertices.len(), self.cells.len(), self.edges.len())?;
        for v in &self.vertices {
            writeln!(out, "{} {}", v.x, v.y)?;
        }
        for cell in &self.cells {
            write!(out, "{}", cell.len())?;
            for v in cell {
                write!(out, " {v}")?;
            }
            writeln!(out)?;
        }
        for e in &self.edges {
            let right = e.right.map_or(-1, |r| r as i64);
            writeln!(out, "{} {} {} {}", e.vertex_ids.0, e.vertex_ids.1, e.left, right)?;
        }
        Ok(())
    }

    /// Reads the format written by [`Mesh::write_text`]. The skeleton is
    /// rebuilt from the elements and checked against the listed edges.
    pub fn read_text<R: BufRead>(input: R) -> Result<Mesh> {
        let mut lines = input
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l))
            .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
        let mut next = |what: &str| -> Result<(usize, Vec<String>)> {
            match lines.next() {
                Some((n, Ok(l))) => Ok((n, l.split_whitespace().map(str::to_owned).collect())),
                Some((_, Err(e))) => Err(e.into()),
                None => Err(Error::Parse {
                    line: 0,
                    msg: format!("unexpected end of file, expected {what}"),
                }),
            }
        };
        fn num<T: FromStr>(line: usize, tok: &str) -> Result<T> {
            tok.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("bad number `{tok}`"),
            })
        }

        let (line, header) = next("header")?;
        if header.len() != 3 {
            return Err(Error::Parse {
                line,
                msg: "header must be `NV NE NEDGE`".into(),
            });
        }
        let nv: usize = num(line, &header[0])?;
        let ne: usize = num(line, &header[1])?;
        let nedge: usize = num(line, &header[2])?;

        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (line, t) = next("vertex")?;
            if t.len() != 2 {
                return Err(Error::Parse { line, msg: "vertex line must be `x y`".into() });
            }
            vertices.push(Point2::new(num(line, &t[0])?, num(line, &t[1])?));
        }
        let mut cells = Vec::with_capacity(ne);
        for _ in 0..ne {
            let (line, t) = next("element")?;
            let k: usize = num(line, t.first().map_or("", String::as_str))?;
            if t.len() != k + 1 {
                return Err(Error::Parse { line, msg: format!("element line lists {} of {k} vertices", t.len() - 1) });
            }
            cells.push(t[1..].iter().map(|s| num(line, s)).collect::<Result<Vec<usize>>>()?);
        }
        let mut listed = Vec::with_capacity(nedge);
        for _ in 0..nedge {
            let (line, t) = next("edge")?;
            if t.len() != 4 {
                return Err(Error::Parse { line, msg: "edge line must be `a b left right`".into() });
            }
            let a: usize = num(line, &t[0])?;
            let b: usize = num(line, &t[1])?;
            let left: usize = num(line, &t[2])?;
            let right: i64 = num(line, &t[3])?;
            listed.push((line, a, b, left, right));
        }

        let kind = if cells.iter().all(|c| c.len() == 3) {
            MeshKind::Tri
        } else if cells.iter().all(|c| c.len() == 4) {
            MeshKind::Quad
        } else {
            MeshKind::Poly
        };
        let mesh = Mesh::from_cells(kind, vertices, cells)?;
        if mesh.edges.len() != nedge {
            return Err(Error::Parse {
                line: 1,
                msg: format!("header lists {nedge} edges, elements define {}", mesh.edges.len()),
            });
        }
        let by_key: HashMap<(usize, usize), &Edge> = mesh
            .edges
            .iter()
            .map(|e| ((e.vertex_ids.0.min(e.vertex_ids.1), e.vertex_ids.0.max(e.vertex_ids.1)), e))
            .collect();
        for (line, a, b, left, right) in listed {
            let edge = by_key.get(&(a.min(b), a.max(b))).ok_or_else(|| Error::Parse {
                line,
                msg: format!("edge {a}-{b} is not a side of any element"),
            })?;
            let mut adjacent = vec![Some(edge.left), edge.right];
            adjacent.sort();
            let mut given = vec![Some(left), if right < 0 { None } else { Some(right as usize) }];
            given.sort();
            if adjacent != given {
                return Err(Error::Parse {
                    line,
                    msg: format!("edge {a}-{b} adjacency disagrees with the elements"),
                });
            }
        }
        Ok(mesh)
    }
}

/// Deduplicates points up to a tolerance with a uniform hash grid.
struct VertexPool {
    tol: f64,
    points: Vec<Point2>,
    grid: HashMap<(i64, i64), Vec<usize>>,
}

impl VertexPool {
    fn new(tol: f64) -> Self {
        Self {
            tol,
            points: Vec::new(),
            grid: HashMap::new(),
        }
    }

    fn cell(&self, p: Point2) -> (i64, i64) {
        ((p.x / self.tol).floor() as i64, (p.y / self.tol).floor() as i64)
    }

    fn insert(&mut self, p: Point2) -> usize {
        let (cx, cy) = self.cell(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(ids) = self.grid.get(&(cx + dx, cy + dy)) {
                    if let Some(&id) = ids.iter().find(|&&id| self.points[id].distance(p) <= self.tol) {
                        return id;
                    }
                }
            }
        }
        let id = self.points.len();
        self.points.push(p);
        self.grid.entry((cx, cy)).or_default().push(id);
        id
    }
}

/// Conforming mesh of `(0,1)^2` with resolution `m`:
/// `m x m` squares, the same squares cut along one diagonal, or a
/// Lloyd-relaxed Voronoi partition with `m^2` cells.
pub fn unit_square_mesh(kind: MeshKind, m: usize) -> Result<Mesh> {
    unit_square_mesh_seeded(kind, m, DEFAULT_SEED)
}

pub fn unit_square_mesh_seeded(kind: MeshKind, m: usize, seed: u64) -> Result<Mesh> {
    if m == 0 {
        return Err(Error::InvalidArgument("mesh resolution must be at least 1".into()));
    }
    match kind {
        MeshKind::Quad | MeshKind::Tri => {
            let h = 1.0 / m as f64;
            let vertices: Vec<Point2> = (0..=m)
                .flat_map(|j| (0..=m).map(move |i| Point2::new(i as f64 * h, j as f64 * h)))
                .collect();
            let id = |i: usize, j: usize| j * (m + 1) + i;
            let mut cells = Vec::new();
            for j in 0..m {
                for i in 0..m {
                    let (v00, v10, v11, v01) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                    if kind == MeshKind::Quad {
                        cells.push(vec![v00, v10, v11, v01]);
                    } else {
                        cells.push(vec![v00, v10, v11]);
                        cells.push(vec![v00, v11, v01]);
                    }
                }
            }
            Mesh::from_cells(kind, vertices, cells)
        }
        MeshKind::Poly => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut seeds: Vec<Point2> = (0..m * m)
                .map(|_| Point2::new(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)))
                .collect();
            for _ in 0..LLOYD_ITERATIONS {
                let cells = voronoi_cells(&seeds);
                seeds = cells.iter().map(|c| polygon_centroid(c)).collect();
            }
            Mesh::from_polygons(MeshKind::Poly, &voronoi_cells(&seeds))
        }
    }
}

fn unit_square() -> Vec<Point2> {
    vec![
        Point2::new(0.0, 0.0),
        Point2::new(1.0, 0.0),
        Point2::new(1.0, 1.0),
        Point2::new(0.0, 1.0),
    ]
}

/// Voronoi cells of `seeds` clipped to the unit square (counterclockwise).
pub fn voronoi_cells(seeds: &[Point2]) -> Vec<Vec<Point2>> {
    seeds
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let mut cell = unit_square();
            for (j, &t) in seeds.iter().enumerate() {
                if i == j || cell.is_empty() {
                    continue;
                }
                // keep points closer to s than to t
                let dir = t - s;
                let offset = dir.dot(s.lerp(t, 0.5));
                cell = clip_half_plane(&cell, dir, offset);
            }
            cell
        })
        .collect()
}

/// Sutherland-Hodgman clip of a convex polygon to `{x : dir . x <= offset}`.
fn clip_half_plane(poly: &[Point2], dir: Point2, offset: f64) -> Vec<Point2> {
    let scale = dir.norm();
    let dist = |p: Point2| (dir.dot(p) - offset) / scale;
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        let (dp, dq) = (dist(p), dist(q));
        if dp <= 0.0 {
            out.push(p);
        }
        if (dp < 0.0 && dq > 0.0) || (dp > 0.0 && dq < 0.0) {
            out.push(p.lerp(q, dp / (dp - dq)));
        }
    }
    out
}

fn polygon_centroid(v: &[Point2]) -> Point2 {
    let origin = v[0];
    let (mut a2, mut cx, mut cy) = (0.0, 0.0, 0.0);
    for i in 1..v.len() - 1 {
        let a = v[i] - origin;
        let b = v[i + 1] - origin;
        let cr = a.cross(b);
        a2 += cr;
        cx += (a.x + b.x) * cr;
        cy += (a.y + b.y) * cr;
    }
    origin + Point2::new(cx, cy) * (1.0 / (3.0 * a2))
}
