//! Conforming triangulations of polygonal domains.
//!
//! Edges are stored once with canonical orientation `(min vertex, max vertex)`; the
//! global unit normal `nu_E` is the canonical direction rotated by +90 degrees. For
//! each triangle and local edge `k` (the edge opposite local vertex `k`) the sign
//! `sigma` is `+1` when `nu_E` is the outward normal of that triangle.
//!
//! Slit domains are represented by duplicating the vertices along the slit, so both
//! sides of the slit are ordinary boundary edges.

mod builtin;
mod refine;

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geom::{self, Point, Vec2};

pub use builtin::{crack_disc, lshape, reference_triangle, square_grid, unit_square};
pub use refine::{rgb_refine, uniform_red_refine};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundarySegment {
    pub a: usize,
    pub b: usize,
    pub tag: u32,
}

impl BoundarySegment {
    pub fn new(a: usize, b: usize, tag: u32) -> Self {
        Self { a, b, tag }
    }
}

/// Provenance of triangles produced by a green or blue bisection. The children of a
/// family are the triangles whose `green_family` points at it.
#[derive(Debug, Clone, PartialEq)]
pub struct Family {
    /// Vertices of the bisected parent, counterclockwise.
    pub parent: [usize; 3],
    /// Midpoint vertex of the parent edge opposite local vertex `k`, if that edge was split.
    pub midpoints: [Option<usize>; 3],
}

#[derive(Debug, Clone, Default)]
pub struct GeometryCache {
    pub area: Vec<f64>,
    /// Longest edge of each triangle.
    pub diameter: Vec<f64>,
    pub centroid: Vec<Point>,
    pub edge_length: Vec<f64>,
    pub edge_midpoint: Vec<Point>,
    pub edge_normal: Vec<Vec2>,
}

const NO_TRIANGLE: usize = usize::MAX;

#[derive(Debug, Clone)]
pub struct Triangulation {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    triangle_edges: Vec<[usize; 3]>,
    edge_signs: Vec<[i8; 3]>,
    edge_triangles: Vec<[usize; 2]>,
    edge_tags: Vec<Option<u32>>,
    boundary_edges: Vec<usize>,
    green: Vec<Option<usize>>,
    families: Vec<Family>,
    geometry: GeometryCache,
}

/// Validate the input and build the edge structure and geometry cache.
///
/// Boundary edges not listed in `boundary` receive tag 0.
pub fn build_mesh(
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary: &[BoundarySegment],
) -> Result<Triangulation> {
    Triangulation::from_parts(vertices, triangles, boundary, Vec::new(), Vec::new())
}

impl Triangulation {
    pub fn new(vertices: Vec<Point>, triangles: Vec<[usize; 3]>, boundary: &[BoundarySegment]) -> Result<Self> {
        build_mesh(vertices, triangles, boundary)
    }

    pub(crate) fn from_parts(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        boundary: &[BoundarySegment],
        green: Vec<Option<usize>>,
        families: Vec<Family>,
    ) -> Result<Self> {
        let nv = vertices.len();
        if triangles.is_empty() {
            return Err(Error::InvalidMesh("no triangles".into()));
        }
        if vertices.iter().any(|p| !(p[0].is_finite() && p[1].is_finite())) {
            return Err(Error::InvalidMesh("non-finite vertex coordinate".into()));
        }
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return Err(Error::InvalidMesh(format!("triangle {t} references a missing vertex")));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::InvalidMesh(format!("triangle {t} repeats a vertex")));
            }
            let [a, b, c] = tri.map(|v| vertices[v]);
            let area2 = geom::signed_area2(a, b, c);
            let h = geom::dist(a, b).max(geom::dist(b, c)).max(geom::dist(c, a));
            let h2 = h * h;
            if !(area2 > 1e-14 * h2) {
                return Err(Error::NonPositiveArea { triangle: t, area: 0.5 * area2 });
            }
        }
        let green = if green.is_empty() { vec![None; triangles.len()] } else { green };
        if green.len() != triangles.len() || green.iter().flatten().any(|&f| f >= families.len()) {
            return Err(Error::InvalidMesh("inconsistent refinement bookkeeping".into()));
        }

        // Edge extraction: sort (key, triangle, local edge) and group equal keys.
        let mut half: Vec<([usize; 2], usize, usize)> = Vec::with_capacity(3 * triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let p = tri[(k + 1) % 3];
                let q = tri[(k + 2) % 3];
                half.push(([p.min(q), p.max(q)], t, k));
            }
        }
        half.sort_unstable();
        let mut edges = Vec::new();
        let mut edge_triangles = Vec::new();
        let mut triangle_edges = vec![[0usize; 3]; triangles.len()];
        let mut edge_signs = vec![[0i8; 3]; triangles.len()];
        let mut i = 0;
        while i < half.len() {
            let key = half[i].0;
            let mut j = i;
            while j < half.len() && half[j].0 == key {
                j += 1;
            }
            if j - i > 2 {
                return Err(Error::HangingNode { a: key[0], b: key[1] });
            }
            let e = edges.len();
            edges.push(key);
            let mut adj = [NO_TRIANGLE; 2];
            for (slot, &(_, t, k)) in half[i..j].iter().enumerate() {
                let from = triangles[t][(k + 1) % 3];
                triangle_edges[t][k] = e;
                edge_signs[t][k] = if from > key[0] { 1 } else { -1 };
                adj[slot] = t;
            }
            if j - i == 2 {
                let (_, t0, k0) = half[i];
                let (_, t1, k1) = half[i + 1];
                if edge_signs[t0][k0] == edge_signs[t1][k1] {
                    // Both neighbours on the same side: overlapping triangles.
                    return Err(Error::HangingNode { a: key[0], b: key[1] });
                }
            }
            edge_triangles.push(adj);
            i = j;
        }

        let mut edge_tags = vec![None; edges.len()];
        let mut boundary_edges = Vec::new();
        for (e, adj) in edge_triangles.iter().enumerate() {
            if adj[1] == NO_TRIANGLE {
                edge_tags[e] = Some(0);
                boundary_edges.push(e);
            }
        }
        for seg in boundary {
            let key = [seg.a.min(seg.b), seg.a.max(seg.b)];
            match edges.binary_search(&key) {
                Ok(e) if edge_triangles[e][1] == NO_TRIANGLE => edge_tags[e] = Some(seg.tag),
                _ => return Err(Error::DanglingBoundaryTag { a: seg.a, b: seg.b }),
            }
        }

        let mut mesh = Triangulation {
            vertices,
            triangles,
            edges,
            triangle_edges,
            edge_signs,
            edge_triangles,
            edge_tags,
            boundary_edges,
            green,
            families,
            geometry: GeometryCache::default(),
        };
        mesh.check_hanging_nodes()?;
        mesh.geometry = mesh.compute_geometry();
        Ok(mesh)
    }

    /// A hanging node shows up as a boundary edge `(a, b)` together with a chain of other
    /// boundary edges from `a` to `b` whose intermediate vertices lie strictly inside the
    /// segment. Slit sides touch geometrically but never share both endpoints, so they pass.
    fn check_hanging_nodes(&self) -> Result<()> {
        let mut adjacency: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &e in &self.boundary_edges {
            let [a, b] = self.edges[e];
            adjacency.entry(a).or_default().push(b);
            adjacency.entry(b).or_default().push(a);
        }
        let inside = |a: Point, b: Point, m: Point| {
            let d = geom::sub(b, a);
            let l2 = geom::dot(d, d);
            let w = geom::sub(m, a);
            let t = geom::dot(w, d) / l2;
            libm::fabs(geom::cross(d, w)) <= 1e-10 * l2 && t > 1e-10 && t < 1.0 - 1e-10
        };
        for &e in &self.boundary_edges {
            let [a, b] = self.edges[e];
            let (pa, pb) = (self.vertices[a], self.vertices[b]);
            let mut stack: Vec<usize> = adjacency[&a]
                .iter()
                .copied()
                .filter(|&m| m != b && inside(pa, pb, self.vertices[m]))
                .collect();
            let mut seen: Vec<usize> = stack.clone();
            while let Some(m) = stack.pop() {
                for &n in &adjacency[&m] {
                    if n == b {
                        return Err(Error::HangingNode { a, b });
                    }
                    if n != a && !seen.contains(&n) && inside(pa, pb, self.vertices[n]) {
                        seen.push(n);
                        stack.push(n);
                    }
                }
            }
        }
        Ok(())
    }

    fn compute_geometry(&self) -> GeometryCache {
        let mut g = GeometryCache::default();
        for t in 0..self.triangles.len() {
            let [a, b, c] = self.corners(t);
            g.area.push(0.5 * geom::signed_area2(a, b, c));
            g.diameter.push(geom::dist(a, b).max(geom::dist(b, c)).max(geom::dist(c, a)));
            g.centroid.push([(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]);
        }
        for &[i, j] in &self.edges {
            let (p, q) = (self.vertices[i], self.vertices[j]);
            let d = geom::sub(q, p);
            let l = geom::norm(d);
            g.edge_length.push(l);
            g.edge_midpoint.push(geom::midpoint(p, q));
            g.edge_normal.push(geom::scale(1.0 / l, geom::perp(d)));
        }
        g
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Unknowns of the RT0 x P0 mixed system: one per edge plus one per triangle.
    pub fn ndof_mixed(&self) -> usize {
        self.edges.len() + self.triangles.len()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> Point {
        self.vertices[v]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn triangle(&self, t: usize) -> [usize; 3] {
        self.triangles[t]
    }

    pub fn corners(&self, t: usize) -> [Point; 3] {
        self.triangles[t].map(|v| self.vertices[v])
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> [usize; 2] {
        self.edges[e]
    }

    /// Edge indices of triangle `t`; local edge `k` is opposite local vertex `k`.
    pub fn triangle_edges(&self, t: usize) -> [usize; 3] {
        self.triangle_edges[t]
    }

    /// `+1` where `nu_E` is the outward normal of `t`, `-1` otherwise.
    pub fn edge_signs(&self, t: usize) -> [f64; 3] {
        self.edge_signs[t].map(f64::from)
    }

    /// The one or two triangles adjacent to `e`; the first is the one with the
    /// smaller index.
    pub fn edge_triangles(&self, e: usize) -> (usize, Option<usize>) {
        let [a, b] = self.edge_triangles[e];
        (a, (b != NO_TRIANGLE).then_some(b))
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.edge_triangles[e][1] == NO_TRIANGLE
    }

    pub fn boundary_tag(&self, e: usize) -> Option<u32> {
        self.edge_tags[e]
    }

    pub fn boundary_edges(&self) -> &[usize] {
        &self.boundary_edges
    }

    pub fn boundary_segments(&self) -> Vec<BoundarySegment> {
        self.boundary_edges
            .iter()
            .map(|&e| {
                let [a, b] = self.edges[e];
                BoundarySegment::new(a, b, self.edge_tags[e].unwrap_or(0))
            })
            .collect()
    }

    pub fn interior_edges(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.edges.len()).filter(move |&e| !self.is_boundary_edge(e))
    }

    pub fn geometry(&self) -> &GeometryCache {
        &self.geometry
    }

    pub fn area(&self, t: usize) -> f64 {
        self.geometry.area[t]
    }

    pub fn diameter(&self, t: usize) -> f64 {
        self.geometry.diameter[t]
    }

    pub fn centroid(&self, t: usize) -> Point {
        self.geometry.centroid[t]
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        self.geometry.edge_length[e]
    }

    pub fn edge_midpoint(&self, e: usize) -> Point {
        self.geometry.edge_midpoint[e]
    }

    pub fn edge_normal(&self, e: usize) -> Vec2 {
        self.geometry.edge_normal[e]
    }

    pub fn green_family(&self, t: usize) -> Option<usize> {
        self.green[t]
    }

    pub fn families(&self) -> &[Family] {
        &self.families
    }

    pub fn total_area(&self) -> f64 {
        self.geometry.area.iter().sum()
    }

    /// `V - E + T`.
    pub fn euler_characteristic(&self) -> isize {
        self.vertices.len() as isize - self.edges.len() as isize + self.triangles.len() as isize
    }

    /// Smallest interior angle over all triangles, in radians.
    pub fn min_angle(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| {
                let c = self.corners(t);
                (0..3)
                    .map(|k| {
                        let u = geom::sub(c[(k + 1) % 3], c[k]);
                        let v = geom::sub(c[(k + 2) % 3], c[k]);
                        libm::atan2(geom::cross(u, v), geom::dot(u, v))
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Number of triangles sharing each vertex.
    pub fn vertex_valence(&self) -> Vec<usize> {
        let mut count = vec![0usize; self.vertices.len()];
        for tri in &self.triangles {
            for &v in tri {
                count[v] += 1;
            }
        }
        count
    }
}
