//! Conforming triangulations of the unit square.
//!
//! A [`Mesh`] is immutable once built: construction validates orientation and
//! conformity and precomputes the edge list, triangle-to-edge incidence and the
//! vertex-to-triangle adjacency. Everything that changes a triangulation
//! (structured generation, remeshing) produces a fresh mesh.

mod geometry;
pub mod io;
mod locate;
mod metric;
pub mod remesh;
mod structured;

pub use geometry::{element_geometry, ElementGeometry};
pub use locate::{interpolate_vertex_field, Locator};
pub use metric::MetricField;
pub use remesh::{adapt_to_metric, RemeshParams, RemeshStats};
pub use structured::{build_perturbed_mesh, build_structured_mesh, DiagonalPattern};

use crate::error::{Error, Result};
use crate::linalg::Vec2;
use crate::scalar::Real;

/// Largest mesh accepted anywhere in the crate.
pub const MAX_TRIANGLES: usize = 2_000_000;

/// Tolerance on `|b·n|` below which a boundary edge is Dirichlet.
pub const BOUNDARY_TOLERANCE: f64 = 1e-10;

pub(crate) const NONE: usize = usize::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundaryKind {
    /// Not yet classified against an anisotropy direction.
    Unclassified,
    /// `b·n = 0`.
    Dirichlet,
    /// `b·n < 0`.
    Inflow,
    /// `b·n > 0`.
    Outflow,
}

impl BoundaryKind {
    pub fn tag(self) -> &'static str {
        match self {
            BoundaryKind::Unclassified => "U",
            BoundaryKind::Dirichlet => "D",
            BoundaryKind::Inflow => "IN",
            BoundaryKind::Outflow => "OUT",
        }
    }

    pub fn from_tag(s: &str) -> Option<Self> {
        match s {
            "D" => Some(BoundaryKind::Dirichlet),
            "IN" => Some(BoundaryKind::Inflow),
            "OUT" => Some(BoundaryKind::Outflow),
            "U" => Some(BoundaryKind::Unclassified),
            _ => None,
        }
    }

    /// Sign rule for `b·n` with tolerance `tol`.
    pub fn from_flux<T: Real>(bn: T, tol: T) -> Self {
        if bn.abs() <= tol {
            BoundaryKind::Dirichlet
        } else if bn < T::zero() {
            BoundaryKind::Inflow
        } else {
            BoundaryKind::Outflow
        }
    }

    pub fn is_neumann(self) -> bool {
        matches!(self, BoundaryKind::Inflow | BoundaryKind::Outflow)
    }
}

/// Boundary edge, oriented counterclockwise with respect to its triangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub v: [usize; 2],
    pub kind: BoundaryKind,
}

/// Mesh edge with its one or two incident triangles (`tris[1] == usize::MAX`
/// on the boundary).
#[derive(Clone, Copy, Debug)]
pub struct Edge {
    /// Endpoints, smaller index first.
    pub v: [usize; 2],
    pub tris: [usize; 2],
    /// Index into [`Mesh::boundary_edges`] for boundary edges.
    pub boundary: Option<usize>,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.tris[1] == NONE
    }
}

#[derive(Clone, Debug)]
pub struct Mesh<T> {
    vertices: Vec<Vec2<T>>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<BoundaryEdge>,
    edges: Vec<Edge>,
    /// Edge opposite local vertex `i` of each triangle.
    tri_edges: Vec<[usize; 3]>,
    v2t_offsets: Vec<usize>,
    v2t: Vec<usize>,
}

impl<T: Real> Mesh<T> {
    /// Builds a mesh and validates it.
    ///
    /// `boundary` must list exactly the edges that belong to a single triangle;
    /// orientation of the given pairs is irrelevant.
    pub fn new(
        vertices: Vec<Vec2<T>>,
        triangles: Vec<[usize; 3]>,
        boundary: Vec<([usize; 2], BoundaryKind)>,
    ) -> Result<Self> {
        let (edges, tri_edges) = build_edges(vertices.len(), &triangles)?;
        let mut mesh = Self::assemble(vertices, triangles, edges, tri_edges)?;

        let mut tagged = vec![None; mesh.edges.len()];
        for (pair, kind) in boundary {
            let e = mesh.find_edge(pair[0], pair[1]).ok_or_else(|| {
                Error::InvalidMesh(format!("boundary pair {pair:?} is not a mesh edge"))
            })?;
            if !mesh.edges[e].is_boundary() {
                return Err(Error::InvalidMesh(format!(
                    "boundary pair {pair:?} is an interior edge"
                )));
            }
            if tagged[e].replace(kind).is_some() {
                return Err(Error::InvalidMesh(format!(
                    "boundary pair {pair:?} listed twice"
                )));
            }
        }
        mesh.boundary.clear();
        for e in 0..mesh.edges.len() {
            if !mesh.edges[e].is_boundary() {
                continue;
            }
            let kind = tagged[e].ok_or_else(|| {
                Error::InvalidMesh(format!(
                    "topological boundary edge {:?} has no boundary tag",
                    mesh.edges[e].v
                ))
            })?;
            mesh.push_boundary(e, kind);
        }
        Ok(mesh)
    }

    /// Builds a mesh from triangles alone; every topological boundary edge is
    /// tagged [`BoundaryKind::Unclassified`].
    pub fn from_triangles(vertices: Vec<Vec2<T>>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let (edges, tri_edges) = build_edges(vertices.len(), &triangles)?;
        let mut mesh = Self::assemble(vertices, triangles, edges, tri_edges)?;
        for e in 0..mesh.edges.len() {
            if mesh.edges[e].is_boundary() {
                mesh.push_boundary(e, BoundaryKind::Unclassified);
            }
        }
        Ok(mesh)
    }

    fn assemble(
        vertices: Vec<Vec2<T>>,
        triangles: Vec<[usize; 3]>,
        edges: Vec<Edge>,
        tri_edges: Vec<[usize; 3]>,
    ) -> Result<Self> {
        if triangles.len() > MAX_TRIANGLES {
            return Err(Error::MeshTooLarge {
                requested: triangles.len(),
                cap: MAX_TRIANGLES,
            });
        }
        for (k, t) in triangles.iter().enumerate() {
            let [a, b, c] = t.map(|i| vertices[i]);
            let area2 = (b - a).cross(c - a);
            if !(area2 > T::zero()) {
                return Err(Error::InvalidMesh(format!(
                    "triangle {k} {t:?} has non-positive signed area {:e}",
                    (area2 * T::lit(0.5)).as_f64()
                )));
            }
        }
        let nv = vertices.len();
        let mut counts = vec![0usize; nv + 1];
        for t in &triangles {
            for &v in t {
                counts[v + 1] += 1;
            }
        }
        for i in 0..nv {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut v2t = vec![0usize; counts[nv]];
        for (k, t) in triangles.iter().enumerate() {
            for &v in t {
                v2t[fill[v]] = k;
                fill[v] += 1;
            }
        }
        if let Some(v) = (0..nv).find(|&v| counts[v] == counts[v + 1]) {
            return Err(Error::InvalidMesh(format!("vertex {v} belongs to no triangle")));
        }
        Ok(Self {
            vertices,
            triangles,
            boundary: Vec::new(),
            edges,
            tri_edges,
            v2t_offsets: counts,
            v2t,
        })
    }

    fn push_boundary(&mut self, e: usize, kind: BoundaryKind) {
        let t = self.edges[e].tris[0];
        let tri = self.triangles[t];
        let local = self.tri_edges[t].iter().position(|&x| x == e).unwrap();
        let v = [tri[(local + 1) % 3], tri[(local + 2) % 3]];
        self.edges[e].boundary = Some(self.boundary.len());
        self.boundary.push(BoundaryEdge { v, kind });
    }

    #[inline]
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    #[inline]
    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    #[inline]
    pub fn vertices(&self) -> &[Vec2<T>] {
        &self.vertices
    }

    #[inline]
    pub fn vertex(&self, i: usize) -> Vec2<T> {
        self.vertices[i]
    }

    #[inline]
    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    #[inline]
    pub fn triangle(&self, k: usize) -> [usize; 3] {
        self.triangles[k]
    }

    #[inline]
    pub fn triangle_points(&self, k: usize) -> [Vec2<T>; 3] {
        self.triangles[k].map(|i| self.vertices[i])
    }

    pub fn area(&self, k: usize) -> T {
        let [a, b, c] = self.triangle_points(k);
        (b - a).cross(c - a) * T::lit(0.5)
    }

    pub fn total_area(&self) -> T {
        (0..self.num_triangles()).map(|k| self.area(k)).sum()
    }

    #[inline]
    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary
    }

    #[inline]
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Edge indices of triangle `k`, `[i]` opposite local vertex `i`.
    #[inline]
    pub fn triangle_edges(&self, k: usize) -> [usize; 3] {
        self.tri_edges[k]
    }

    #[inline]
    pub fn vertex_triangles(&self, v: usize) -> &[usize] {
        &self.v2t[self.v2t_offsets[v]..self.v2t_offsets[v + 1]]
    }

    pub fn find_edge(&self, a: usize, b: usize) -> Option<usize> {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        if lo >= self.num_vertices() || hi >= self.num_vertices() {
            return None;
        }
        self.vertex_triangles(lo)
            .iter()
            .flat_map(|&t| self.tri_edges[t])
            .find(|&e| self.edges[e].v == [lo, hi])
    }

    /// Longest edge of triangle `k`.
    pub fn diameter(&self, k: usize) -> T {
        let [a, b, c] = self.triangle_points(k);
        (b - a).norm().max((c - b).norm()).max((a - c).norm())
    }

    /// Outward unit normal of a boundary edge.
    pub fn boundary_normal(&self, be: &BoundaryEdge) -> Vec2<T> {
        let d = self.vertices[be.v[1]] - self.vertices[be.v[0]];
        Vec2::new(d.y, -d.x).scale(T::one() / d.norm())
    }

    /// Vertices touched by a Dirichlet boundary edge.
    pub fn dirichlet_vertices(&self) -> Vec<bool> {
        let mut mask = vec![false; self.num_vertices()];
        for be in &self.boundary {
            if be.kind == BoundaryKind::Dirichlet {
                mask[be.v[0]] = true;
                mask[be.v[1]] = true;
            }
        }
        mask
    }

    /// Vertices on the boundary.
    pub fn boundary_vertices(&self) -> Vec<bool> {
        let mut mask = vec![false; self.num_vertices()];
        for be in &self.boundary {
            mask[be.v[0]] = true;
            mask[be.v[1]] = true;
        }
        mask
    }

    /// Sorted neighbor lists (including the vertex itself), as CSR offsets
    /// and column indices.
    pub fn vertex_graph(&self) -> (Vec<usize>, Vec<usize>) {
        let nv = self.num_vertices();
        let mut deg = vec![1usize; nv];
        for e in &self.edges {
            deg[e.v[0]] += 1;
            deg[e.v[1]] += 1;
        }
        let mut offsets = vec![0usize; nv + 1];
        for i in 0..nv {
            offsets[i + 1] = offsets[i] + deg[i];
        }
        let mut cols = vec![0usize; offsets[nv]];
        let mut fill = offsets.clone();
        for i in 0..nv {
            cols[fill[i]] = i;
            fill[i] += 1;
        }
        for e in &self.edges {
            let [a, b] = e.v;
            cols[fill[a]] = b;
            fill[a] += 1;
            cols[fill[b]] = a;
            fill[b] += 1;
        }
        for i in 0..nv {
            cols[offsets[i]..offsets[i + 1]].sort_unstable();
        }
        (offsets, cols)
    }

    /// Tags every boundary edge by the sign of `b(midpoint)·n`, using
    /// [`BOUNDARY_TOLERANCE`].
    pub fn classify_boundary<F>(&self, b: F) -> Result<Self>
    where
        F: Fn(Vec2<T>) -> Result<Vec2<T>>,
    {
        let tol = T::lit(BOUNDARY_TOLERANCE);
        let mut out = self.clone();
        for be in out.boundary.iter_mut() {
            let mid = (self.vertices[be.v[0]] + self.vertices[be.v[1]]).scale(T::lit(0.5));
            let n = self.boundary_normal(be);
            be.kind = BoundaryKind::from_flux(b(mid)?.dot(n), tol);
        }
        Ok(out)
    }

    /// Same mesh with boundary tags replaced through `f(edge)`.
    pub fn with_boundary_kinds<F>(&self, mut f: F) -> Self
    where
        F: FnMut(&BoundaryEdge) -> BoundaryKind,
    {
        let mut out = self.clone();
        for be in out.boundary.iter_mut() {
            be.kind = f(be);
        }
        out
    }

    /// Full structural audit: positive areas, edge/triangle consistency,
    /// boundary closure and the vertex-to-triangle inverse relation.
    pub fn audit(&self) -> Result<()> {
        let (edges, tri_edges) = build_edges(self.num_vertices(), &self.triangles)?;
        if edges.len() != self.edges.len() || tri_edges != self.tri_edges {
            return Err(Error::InvalidMesh("edge tables out of date".into()));
        }
        for k in 0..self.num_triangles() {
            if !(self.area(k) > T::zero()) {
                return Err(Error::InvalidMesh(format!("triangle {k} inverted")));
            }
        }
        let nb = self.edges.iter().filter(|e| e.is_boundary()).count();
        if nb != self.boundary.len() {
            return Err(Error::InvalidMesh("boundary list incomplete".into()));
        }
        // every boundary vertex closes a loop: two boundary edges per vertex
        let mut valence = vec![0usize; self.num_vertices()];
        for be in &self.boundary {
            valence[be.v[0]] += 1;
            valence[be.v[1]] += 1;
        }
        if let Some(v) = valence.iter().position(|&c| c != 0 && c != 2) {
            return Err(Error::InvalidMesh(format!(
                "boundary is not a closed curve at vertex {v}"
            )));
        }
        for v in 0..self.num_vertices() {
            for &t in self.vertex_triangles(v) {
                if !self.triangles[t].contains(&v) {
                    return Err(Error::InvalidMesh(format!(
                        "adjacency lists triangle {t} for vertex {v}"
                    )));
                }
            }
        }
        let listed: usize = (0..self.num_vertices())
            .map(|v| self.vertex_triangles(v).len())
            .sum();
        if listed != 3 * self.num_triangles() {
            return Err(Error::InvalidMesh("adjacency is not the inverse incidence".into()));
        }
        Ok(())
    }

    /// Largest `λ1/λ2` and mean over all triangles.
    pub fn aspect_stats(&self) -> Result<(T, T)> {
        let mut max = T::zero();
        let mut sum = T::zero();
        for k in 0..self.num_triangles() {
            let r = element_geometry(self, k)?.aspect_ratio();
            max = max.max(r);
            sum += r;
        }
        Ok((max, sum / T::from_usize_lossy(self.num_triangles().max(1))))
    }
}

/// Edge table and triangle-to-edge incidence from a triangle list.
fn build_edges(nv: usize, triangles: &[[usize; 3]]) -> Result<(Vec<Edge>, Vec<[usize; 3]>)> {
    let mut half: Vec<(usize, usize, usize, usize)> = Vec::with_capacity(3 * triangles.len());
    for (k, t) in triangles.iter().enumerate() {
        if t.iter().any(|&v| v >= nv) {
            return Err(Error::InvalidMesh(format!(
                "triangle {k} {t:?} references a missing vertex"
            )));
        }
        if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
            return Err(Error::InvalidMesh(format!("triangle {k} {t:?} repeats a vertex")));
        }
        for i in 0..3 {
            let a = t[(i + 1) % 3];
            let b = t[(i + 2) % 3];
            half.push((a.min(b), a.max(b), k, i));
        }
    }
    half.sort_unstable();
    let mut edges = Vec::with_capacity(half.len() / 2 + 1);
    let mut tri_edges = vec![[NONE; 3]; triangles.len()];
    let mut i = 0;
    while i < half.len() {
        let (a, b, k, li) = half[i];
        let mut j = i + 1;
        while j < half.len() && half[j].0 == a && half[j].1 == b {
            j += 1;
        }
        let e = edges.len();
        match j - i {
            1 => {
                edges.push(Edge {
                    v: [a, b],
                    tris: [k, NONE],
                    boundary: None,
                });
                tri_edges[k][li] = e;
            }
            2 => {
                let (_, _, k2, li2) = half[i + 1];
                // conforming neighbours traverse the shared edge in opposite directions
                let dir1 = triangles[k][(li + 1) % 3] == a;
                let dir2 = triangles[k2][(li2 + 1) % 3] == a;
                if dir1 == dir2 {
                    return Err(Error::InvalidMesh(format!(
                        "triangles {k} and {k2} overlap along edge ({a}, {b})"
                    )));
                }
                edges.push(Edge {
                    v: [a, b],
                    tris: [k, k2],
                    boundary: None,
                });
                tri_edges[k][li] = e;
                tri_edges[k2][li2] = e;
            }
            n => {
                return Err(Error::InvalidMesh(format!(
                    "edge ({a}, {b}) shared by {n} triangles"
                )))
            }
        }
        i = j;
    }
    Ok((edges, tri_edges))
}

/// Side of the unit square a point lies on: 0 bottom, 1 right, 2 top, 3 left.
pub(crate) fn square_sides<T: Real>(p: Vec2<T>, tol: T) -> [bool; 4] {
    [
        p.y.abs() <= tol,
        (p.x - T::one()).abs() <= tol,
        (p.y - T::one()).abs() <= tol,
        p.x.abs() <= tol,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64, y: f64) -> Vec2<f64> {
        Vec2::new(x, y)
    }

    fn square() -> Mesh<f64> {
        Mesh::from_triangles(
            vec![v(0., 0.), v(1., 0.), v(1., 1.), v(0., 1.)],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap()
    }

    #[test]
    fn two_triangle_square() {
        let m = square();
        assert_eq!(m.edges().len(), 5);
        assert_eq!(m.boundary_edges().len(), 4);
        assert!((m.total_area() - 1.0).abs() < 1e-15);
        m.audit().unwrap();
        // boundary edges follow their triangle's orientation
        for be in m.boundary_edges() {
            let n = m.boundary_normal(be);
            let mid = (m.vertex(be.v[0]) + m.vertex(be.v[1])).scale(0.5);
            let c = v(0.5, 0.5);
            assert!((mid - c).dot(n) > 0.0);
        }
    }

    #[test]
    fn rejects_clockwise_triangle() {
        let r = Mesh::from_triangles(vec![v(0., 0.), v(0., 1.), v(1., 0.)], vec![[0, 1, 2]]);
        assert!(matches!(r, Err(Error::InvalidMesh(_))));
    }

    #[test]
    fn rejects_non_manifold_edge() {
        let r = Mesh::from_triangles(
            vec![v(0., 0.), v(1., 0.), v(0.5, 1.), v(0.5, 2.), v(0.5, -1.)],
            vec![[0, 1, 2], [0, 1, 3], [1, 0, 4]],
        );
        assert!(r.is_err());
    }

    #[test]
    fn rejects_missing_boundary_tag() {
        let r = Mesh::new(
            vec![v(0., 0.), v(1., 0.), v(0., 1.)],
            vec![[0, 1, 2]],
            vec![([0, 1], BoundaryKind::Dirichlet)],
        );
        assert!(r.is_err());
    }

    #[test]
    fn classify_axis_aligned_fields() {
        let m = square();
        let mid = |m: &Mesh<f64>, be: &BoundaryEdge| (m.vertex(be.v[0]) + m.vertex(be.v[1])).scale(0.5);
        let c = m.classify_boundary(|_| Ok(v(1.0, 0.0))).unwrap();
        for be in c.boundary_edges() {
            let p = mid(&c, be);
            let expect = if p.x == 0.0 {
                BoundaryKind::Inflow
            } else if p.x == 1.0 {
                BoundaryKind::Outflow
            } else {
                BoundaryKind::Dirichlet
            };
            assert_eq!(be.kind, expect, "edge at {p:?}");
        }
        let c = m.classify_boundary(|_| Ok(v(0.0, 1.0))).unwrap();
        for be in c.boundary_edges() {
            let p = mid(&c, be);
            let expect = if p.y == 0.0 {
                BoundaryKind::Inflow
            } else if p.y == 1.0 {
                BoundaryKind::Outflow
            } else {
                BoundaryKind::Dirichlet
            };
            assert_eq!(be.kind, expect, "edge at {p:?}");
        }
    }

    #[test]
    fn vertex_graph_is_symmetric() {
        let m = square();
        let (off, cols) = m.vertex_graph();
        for i in 0..m.num_vertices() {
            for &j in &cols[off[i]..off[i + 1]] {
                assert!(cols[off[j]..off[j + 1]].contains(&i));
            }
        }
        assert_eq!(cols[off[0]..off[1]], [0, 1, 2, 3]);
        assert_eq!(cols[off[1]..off[2]], [0, 1, 2]);
    }
}
