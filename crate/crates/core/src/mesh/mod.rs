//! Conforming triangulations of the model domains.
//!
//! Triangles are stored counter-clockwise with the *newest vertex* first: the
//! edge opposite `vertices[0]` is the refinement edge used by bisection.
//! Local edge `i` of a triangle is the edge opposite local vertex `i`.
//! Global edges store their vertex ids in ascending order, which fixes the
//! global tangent `v1 - v0` and the normal obtained by rotating it clockwise.

mod builders;
mod io;
mod patches;
mod refine;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use builders::{
    build_circle_mesh, build_lshape_mesh, build_square_mesh, build_square_mesh_with, DiagonalPattern,
    SquareDomain,
};
pub use io::{mesh_to_string, read_mesh, write_mesh};
pub use patches::{patches, Patch, PatchCenter, Patches};
pub use refine::refine;

pub type Point = [f64; 2];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryTag {
    Interior,
    Dirichlet,
    Neumann,
}

impl BoundaryTag {
    pub fn code(self) -> u8 {
        match self {
            BoundaryTag::Interior => 0,
            BoundaryTag::Dirichlet => 1,
            BoundaryTag::Neumann => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(BoundaryTag::Interior),
            1 => Some(BoundaryTag::Dirichlet),
            2 => Some(BoundaryTag::Neumann),
            _ => None,
        }
    }

    pub fn is_boundary(self) -> bool {
        self != BoundaryTag::Interior
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    /// Ascending vertex ids.
    pub vertices: [usize; 2],
    /// Adjacent triangles; the second is `None` exactly on the boundary.
    pub triangles: [Option<usize>; 2],
    pub tag: BoundaryTag,
}

impl Edge {
    pub fn adjacent(&self) -> impl Iterator<Item = usize> + '_ {
        self.triangles.iter().flatten().copied()
    }

    pub fn is_boundary(&self) -> bool {
        self.tag.is_boundary()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Triangle {
    /// Counter-clockwise, newest vertex first.
    pub vertices: [usize; 3],
    /// `edges[i]` is opposite `vertices[i]`.
    pub edges: [usize; 3],
    /// Triangle of the mesh this one was refined from, if any.
    pub parent: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<Triangle>,
    edges: Vec<Edge>,
}

pub(crate) fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

impl Mesh {
    /// Builds the edge structure from counter-clockwise triangles. `tag_of`
    /// assigns a tag to every edge that has a single adjacent triangle.
    ///
    /// Edge ids are assigned in order of first appearance while scanning the
    /// triangles and their local edges.
    pub fn from_triangles(
        vertices: Vec<Point>,
        triangles: Vec<([usize; 3], Option<usize>)>,
        mut tag_of: impl FnMut([usize; 2]) -> BoundaryTag,
    ) -> Result<Self> {
        let mut edge_ids: HashMap<[usize; 2], usize> = HashMap::with_capacity(triangles.len() * 2);
        let mut edges: Vec<Edge> = Vec::with_capacity(triangles.len() * 3 / 2 + 8);
        let mut tris = Vec::with_capacity(triangles.len());
        for (t, (verts, parent)) in triangles.into_iter().enumerate() {
            if verts.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidInput(format!("triangle {t} references a missing vertex")));
            }
            let mut local = [0usize; 3];
            for (i, slot) in local.iter_mut().enumerate() {
                let a = verts[(i + 1) % 3];
                let b = verts[(i + 2) % 3];
                let key = [a.min(b), a.max(b)];
                let id = *edge_ids.entry(key).or_insert_with(|| {
                    edges.push(Edge {
                        vertices: key,
                        triangles: [None, None],
                        tag: BoundaryTag::Interior,
                    });
                    edges.len() - 1
                });
                let e = &mut edges[id];
                if e.triangles[0].is_none() {
                    e.triangles[0] = Some(t);
                } else if e.triangles[1].is_none() {
                    e.triangles[1] = Some(t);
                } else {
                    return Err(Error::InvalidInput(format!(
                        "edge {:?} is shared by more than two triangles",
                        key
                    )));
                }
                *slot = id;
            }
            tris.push(Triangle {
                vertices: verts,
                edges: local,
                parent,
            });
        }
        for e in &mut edges {
            if e.triangles[1].is_none() {
                e.tag = tag_of(e.vertices);
                if !e.tag.is_boundary() {
                    return Err(Error::InvalidInput(format!(
                        "boundary edge {:?} was tagged interior",
                        e.vertices
                    )));
                }
            }
        }
        let mesh = Mesh {
            vertices,
            triangles: tris,
            edges,
        };
        for t in 0..mesh.triangles.len() {
            if mesh.triangle_area(t) <= 0.0 {
                return Err(Error::InvalidInput(format!("triangle {t} is not counter-clockwise")));
            }
        }
        Ok(mesh)
    }

    /// Assembles a mesh from fully specified parts, checking consistency.
    pub fn from_parts(vertices: Vec<Point>, edges: Vec<Edge>, triangles: Vec<Triangle>) -> Result<Self> {
        let mesh = Mesh {
            vertices,
            triangles,
            edges,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let v = self.triangles[t].vertices;
        [self.vertices[v[0]], self.vertices[v[1]], self.vertices[v[2]]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        signed_area(a, b, c)
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.triangle_points(t);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    /// Diameter of a triangle, i.e. its longest edge.
    pub fn h_triangle(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        dist(a, b).max(dist(b, c)).max(dist(c, a))
    }

    pub fn h_max(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.h_triangle(t)).fold(0.0, f64::max)
    }

    pub fn edge_points(&self, e: usize) -> [Point; 2] {
        let [a, b] = self.edges[e].vertices;
        [self.vertices[a], self.vertices[b]]
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edge_points(e);
        dist(a, b)
    }

    /// Unit normal of the globally oriented edge: the tangent rotated clockwise.
    pub fn edge_normal(&self, e: usize) -> Point {
        let [a, b] = self.edge_points(e);
        let l = dist(a, b);
        [(b[1] - a[1]) / l, -(b[0] - a[0]) / l]
    }

    pub fn area(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.triangle_area(t)).sum()
    }

    /// Smallest interior angle (radians) over all triangles.
    pub fn min_angle(&self) -> f64 {
        let mut min = f64::INFINITY;
        for t in 0..self.n_triangles() {
            let p = self.triangle_points(t);
            for i in 0..3 {
                let a = p[i];
                let b = p[(i + 1) % 3];
                let c = p[(i + 2) % 3];
                let u = [b[0] - a[0], b[1] - a[1]];
                let v = [c[0] - a[0], c[1] - a[1]];
                let cos = (u[0] * v[0] + u[1] * v[1]) / (dist(a, b) * dist(a, c));
                min = min.min(cos.clamp(-1.0, 1.0).acos());
            }
        }
        min
    }

    pub fn has_tag(&self, tag: BoundaryTag) -> bool {
        self.edges.iter().any(|e| e.tag == tag)
    }

    /// Replaces the tag of every boundary edge by `tag_of(midpoint)`.
    pub fn retag_boundary(&mut self, mut tag_of: impl FnMut(Point) -> BoundaryTag) {
        let mids: Vec<Option<Point>> = (0..self.n_edges())
            .map(|e| {
                self.edges[e].is_boundary().then(|| {
                    let [a, b] = self.edge_points(e);
                    [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0]
                })
            })
            .collect();
        for (e, mid) in self.edges.iter_mut().zip(mids) {
            if let Some(m) = mid {
                let tag = tag_of(m);
                assert!(tag.is_boundary(), "boundary edges cannot be retagged interior");
                e.tag = tag;
            }
        }
    }

    /// Same triangulation with edge `e` renamed `perm[e]`.
    pub fn with_edge_permutation(&self, perm: &[usize]) -> Result<Mesh> {
        let n = self.n_edges();
        check_permutation(perm, n)?;
        let mut edges = vec![self.edges[0].clone(); n];
        for (old, e) in self.edges.iter().enumerate() {
            edges[perm[old]] = e.clone();
        }
        let triangles = self
            .triangles
            .iter()
            .map(|t| Triangle {
                vertices: t.vertices,
                edges: t.edges.map(|e| perm[e]),
                parent: t.parent,
            })
            .collect();
        Mesh::from_parts(self.vertices.clone(), edges, triangles)
    }

    /// Same triangulation with vertex `v` renamed `perm[v]`. Edge orientations
    /// follow the new ids.
    pub fn with_vertex_permutation(&self, perm: &[usize]) -> Result<Mesh> {
        let n = self.n_vertices();
        check_permutation(perm, n)?;
        let mut vertices = vec![[0.0; 2]; n];
        for (old, p) in self.vertices.iter().enumerate() {
            vertices[perm[old]] = *p;
        }
        let edges = self
            .edges
            .iter()
            .map(|e| {
                let a = perm[e.vertices[0]];
                let b = perm[e.vertices[1]];
                Edge {
                    vertices: [a.min(b), a.max(b)],
                    triangles: e.triangles,
                    tag: e.tag,
                }
            })
            .collect();
        let triangles = self
            .triangles
            .iter()
            .map(|t| Triangle {
                vertices: t.vertices.map(|v| perm[v]),
                edges: t.edges,
                parent: t.parent,
            })
            .collect();
        Mesh::from_parts(vertices, edges, triangles)
    }

    /// Checks every structural invariant: orientation, edge/triangle
    /// incidence, tags, Euler characteristic and conformity.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.vertices.iter().any(|&v| v >= self.n_vertices()) {
                return bad(format!("triangle {t} references a missing vertex"));
            }
            if tri.edges.iter().any(|&e| e >= self.n_edges()) {
                return bad(format!("triangle {t} references a missing edge"));
            }
            if self.triangle_area(t) <= 0.0 {
                return bad(format!("triangle {t} has non-positive signed area"));
            }
            for i in 0..3 {
                let a = tri.vertices[(i + 1) % 3];
                let b = tri.vertices[(i + 2) % 3];
                let e = &self.edges[tri.edges[i]];
                if e.vertices != [a.min(b), a.max(b)] {
                    return bad(format!("triangle {t} local edge {i} does not match its vertices"));
                }
                if !e.adjacent().any(|s| s == t) {
                    return bad(format!("edge {} does not list triangle {t}", tri.edges[i]));
                }
            }
        }
        for (id, e) in self.edges.iter().enumerate() {
            if e.vertices[0] >= e.vertices[1] {
                return bad(format!("edge {id} vertices are not ascending"));
            }
            let count = e.adjacent().count();
            if count == 0 {
                return bad(format!("edge {id} has no adjacent triangle"));
            }
            if (count == 1) != e.is_boundary() {
                return bad(format!("edge {id} has {count} triangles but tag {:?}", e.tag));
            }
            for t in e.adjacent() {
                if t >= self.n_triangles() || !self.triangles[t].edges.contains(&id) {
                    return bad(format!("edge {id} lists triangle {t} which does not contain it"));
                }
            }
        }
        let euler = self.n_vertices() as i64 - self.n_edges() as i64 + self.n_triangles() as i64;
        if euler != 1 {
            return bad(format!("Euler characteristic is {euler}, expected 1"));
        }
        if let Some(v) = self.hanging_vertex() {
            return bad(format!("vertex {v} is hanging"));
        }
        Ok(())
    }

    /// Returns a vertex lying in the relative interior of some edge, if any.
    ///
    /// Only edges with a single adjacent triangle can carry such a vertex in
    /// an edge-manifold triangulation, so only those are scanned.
    pub fn hanging_vertex(&self) -> Option<usize> {
        let single: Vec<usize> = (0..self.n_edges())
            .filter(|&e| self.edges[e].triangles[1].is_none())
            .collect();
        if single.is_empty() {
            return None;
        }
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in &self.vertices {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        let cells = ((self.n_vertices() as f64).sqrt().ceil() as usize).max(1);
        let size = [(hi[0] - lo[0]).max(1e-300) / cells as f64, (hi[1] - lo[1]).max(1e-300) / cells as f64];
        let cell_of = |p: Point, d: usize| (((p[d] - lo[d]) / size[d]) as usize).min(cells - 1);
        let mut grid: Vec<Vec<usize>> = vec![Vec::new(); cells * cells];
        for (v, p) in self.vertices.iter().enumerate() {
            grid[cell_of(*p, 1) * cells + cell_of(*p, 0)].push(v);
        }
        for e in single {
            let [a, b] = self.edges[e].vertices;
            let (pa, pb) = (self.vertices[a], self.vertices[b]);
            let len = dist(pa, pb);
            let (x0, x1) = (cell_of(pa, 0).min(cell_of(pb, 0)), cell_of(pa, 0).max(cell_of(pb, 0)));
            let (y0, y1) = (cell_of(pa, 1).min(cell_of(pb, 1)), cell_of(pa, 1).max(cell_of(pb, 1)));
            for cy in y0..=y1 {
                for cx in x0..=x1 {
                    for &v in &grid[cy * cells + cx] {
                        if v == a || v == b {
                            continue;
                        }
                        let p = self.vertices[v];
                        let cross = signed_area(pa, pb, p) * 2.0;
                        let along = ((p[0] - pa[0]) * (pb[0] - pa[0]) + (p[1] - pa[1]) * (pb[1] - pa[1])) / len;
                        if cross.abs() <= 1e-12 * len * len && along > 1e-12 * len && along < len * (1.0 - 1e-12) {
                            return Some(v);
                        }
                    }
                }
            }
        }
        None
    }

    /// Triangles sharing vertex `v`, for every vertex.
    pub fn vertex_triangles(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_vertices()];
        for (t, tri) in self.triangles.iter().enumerate() {
            for &v in &tri.vertices {
                out[v].push(t);
            }
        }
        out
    }

    /// Rotates every triangle so that its longest edge is the refinement edge.
    pub(crate) fn label_longest_edges(&mut self) {
        for t in 0..self.triangles.len() {
            let p = self.triangle_points(t);
            let lens = [dist(p[1], p[2]), dist(p[2], p[0]), dist(p[0], p[1])];
            let mut best = 0;
            for i in 1..3 {
                if lens[i] > lens[best] * (1.0 + 1e-12) {
                    best = i;
                }
            }
            let tri = &mut self.triangles[t];
            tri.vertices.rotate_left(best);
            tri.edges.rotate_left(best);
        }
    }
}

fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::InvalidInput(format!("permutation has length {}, expected {n}", perm.len())));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(Error::InvalidInput("not a permutation".into()));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_normal_is_clockwise_rotation_of_tangent() {
        let m = build_square_mesh(1, SquareDomain::Unit);
        for e in 0..m.n_edges() {
            let [a, b] = m.edge_points(e);
            let n = m.edge_normal(e);
            let t = [b[0] - a[0], b[1] - a[1]];
            assert!((n[0] * t[0] + n[1] * t[1]).abs() < 1e-15);
            assert!((n[0].hypot(n[1]) - 1.0).abs() < 1e-15);
            assert!(t[0] * n[1] - t[1] * n[0] < 0.0);
        }
    }

    #[test]
    fn validate_detects_clockwise_triangle() {
        let verts = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let err = Mesh::from_triangles(verts, vec![([0, 2, 1], None)], |_| BoundaryTag::Dirichlet);
        assert!(err.is_err());
    }

    #[test]
    fn hanging_vertex_is_found() {
        // Square split into one big triangle and two halves of the other.
        let verts = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]];
        let tris = vec![([0, 1, 2], None), ([0, 4, 3], None), ([4, 2, 3], None)];
        let mesh = Mesh::from_triangles(verts, tris, |_| BoundaryTag::Dirichlet).unwrap();
        assert_eq!(mesh.hanging_vertex(), Some(4));
        assert!(mesh.validate().is_err());
    }

    #[test]
    fn renumbering_preserves_validity() {
        let m = build_square_mesh(3, SquareDomain::BiUnit);
        let ne = m.n_edges();
        let perm: Vec<usize> = (0..ne).map(|e| (e * 7 + 3) % ne).collect();
        let r = m.with_edge_permutation(&perm).unwrap();
        assert_eq!(r.n_edges(), ne);
        let nv = m.n_vertices();
        let vperm: Vec<usize> = (0..nv).rev().collect();
        let r = m.with_vertex_permutation(&vperm).unwrap();
        r.validate().unwrap();
        assert!((r.area() - 4.0).abs() < 1e-12);
    }
}
